#include <doctest.h>

#include <random>

#include "lindblad.hpp"
#include "model.hpp"
#include "oracles.hpp"

using namespace optomech;

namespace {

DensityMatrix random_density(const ModeSpace& s, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  const auto n = static_cast<Eigen::Index>(s.total_dim());
  DenseMatrix x(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) x(i, j) = Complex(nd(rng), nd(rng));
  }
  DenseMatrix rho = x * x.adjoint();
  rho /= rho.trace();
  return DensityMatrix(s, rho);
}

struct LinearCavity {
  double delta = 0.4, kappa = 0.25, eps = 0.1;
  int dim = 10;
  ModeSpace space{{10}};
  QOperator a = annihilation(10);
  QOperator h() const { return delta * (dagger(a) * a) + eps * (a + dagger(a)); }
  std::vector<CollapseChannel> channels() const { return {{a, kappa}}; }
};

}  // namespace

TEST_CASE("rate convention: occupation decays at twice the rate") {
  const ModeSpace s({4});
  const QOperator a = annihilation(4);
  const double kappa = 0.37;
  const int one[] = {1};
  const DensityMatrix rho = DensityMatrix::basis(s, one);
  const DenseMatrix d = liouvillian_rhs(zero(s), {{a, kappa}}, rho);
  const double dn = (d * (dagger(a) * a).dense()).trace().real();
  CHECK(dn == doctest::Approx(-2.0 * kappa).epsilon(1e-14));
}

TEST_CASE("vacuum is dark and the generator is traceless") {
  const ModeSpace s({3, 3});
  const QOperator a = embed(annihilation(3), 0, s), b = embed(annihilation(3), 1, s);
  const QOperator h = 0.3 * (dagger(a) * a) + 0.7 * (dagger(b) * b) + 0.05 * (dagger(a) * b + dagger(b) * a);
  const std::vector<CollapseChannel> ch = {{a, 0.1}, {b, 0.02}};
  CHECK(liouvillian_rhs(h, ch, DensityMatrix::vacuum(s)).cwiseAbs().maxCoeff() < 1e-16);
  for (unsigned seed = 1; seed <= 5; ++seed) {
    CHECK(std::abs(liouvillian_rhs(h, ch, random_density(s, seed)).trace()) < 1e-14);
  }
}

TEST_CASE("superoperator agrees with the independent column-major build") {
  const ModeSpace s({3, 2});
  const QOperator a = embed(annihilation(3), 0, s), b = embed(annihilation(2), 1, s);
  const QOperator h = 0.2 * (dagger(a) * a) + 0.03 * (dagger(a) * a * (b + dagger(b))) + 0.01 * (a + dagger(a));
  const std::vector<CollapseChannel> ch = {{a, 0.05}, {b, 0.004}, {dagger(b), 0.001}};
  const Liouvillian l(h, ch);
  const DenseMatrix sup = DenseMatrix(l.superoperator());
  const oracle::Mat ref = oracle::liouvillian(h.dense(), {{a.dense(), 0.05}, {b.dense(), 0.004}, {dagger(b).dense(), 0.001}});
  // Row-major vec index i*n+j is column-major index j*n+i.
  const Eigen::Index n = static_cast<Eigen::Index>(s.total_dim());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index m = 0; m < n; ++m) {
          worst = std::max(worst, std::abs(sup(i * n + j, k * n + m) - ref(j * n + i, m * n + k)));
        }
      }
    }
  }
  CHECK(worst < 1e-15);

  const DensityMatrix rho = random_density(s, 11);
  CHECK((unvectorize(sup * vectorize(rho.matrix()), s.total_dim()) - l.apply(rho.matrix())).cwiseAbs().maxCoeff() <
        1e-15);
  CHECK((unvectorize(vectorize(rho.matrix()), s.total_dim()) - rho.matrix()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(vectorize(rho.matrix())[1] == rho.matrix()(0, 1));
}

TEST_CASE("density matrix validation") {
  const ModeSpace s({2});
  DenseMatrix bad = DenseMatrix::Identity(2, 2);
  CHECK_THROWS_AS(DensityMatrix(s, bad), Error);  // trace 2
  bad = DenseMatrix::Identity(2, 2) / 2.0;
  bad(0, 1) = 0.3;
  CHECK_THROWS_AS(DensityMatrix(s, bad), Error);  // not Hermitian
  CHECK_THROWS_AS(DensityMatrix(ModeSpace({3}), DenseMatrix::Identity(2, 2) / 2.0), Error);
}

TEST_CASE("evolve") {
  SUBCASE("linear cavity relaxes to the analytic amplitude") {
    const LinearCavity lc;
    const DensityMatrix rho = evolve(lc.h(), lc.channels(), DensityMatrix::vacuum(lc.space), 10.0 / lc.kappa);
    const Complex a = (rho.matrix() * lc.a.dense()).trace();
    const Complex ref = oracle::linear_cavity_amplitude(lc.delta, lc.kappa, lc.eps);
    CHECK(std::abs(a - ref) / std::abs(ref) < 1e-3);
    CHECK(std::abs(rho.trace() - 1.0) < 1e-9);
    CHECK(rho.hermiticity_residual() < 1e-9);
    CHECK(rho.min_eigenvalue() > -1e-8);
  }

  SUBCASE("free evolution keeps purity") {
    const ModeSpace s({3, 3});
    const QOperator a = embed(annihilation(3), 0, s), b = embed(annihilation(3), 1, s);
    const QOperator h = 0.3 * (dagger(a) * a) + 0.1 * (dagger(a) * b + dagger(b) * a) + 0.05 * (b + dagger(b));
    std::mt19937 rng(5);
    std::normal_distribution<double> nd;
    StateVector psi(9);
    for (int i = 0; i < 9; ++i) psi[i] = Complex(nd(rng), nd(rng));
    psi /= psi.norm();
    const DensityMatrix rho = evolve(h, {}, DensityMatrix::pure(s, psi), 40.0);
    CHECK(std::abs(rho.purity() - 1.0) < 1e-8);
    // Matches the exact unitary.
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.dense());
    const Eigen::VectorXcd phases = (Complex(0, -40.0) * es.eigenvalues().cast<Complex>()).array().exp();
    const DenseMatrix u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    const StateVector exact = u * psi;
    CHECK((rho.matrix() - exact * exact.adjoint()).cwiseAbs().maxCoeff() < 1e-8);
  }

  SUBCASE("zero time returns the input") {
    const LinearCavity lc;
    const DensityMatrix rho0 = DensityMatrix::thermal(10, 0.3);
    const DensityMatrix rho = evolve(lc.h(), lc.channels(), rho0, 0.0);
    CHECK((rho.matrix() - rho0.matrix()).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("step rule and reporting") {
    const LinearCavity lc;
    EvolveReport rep;
    evolve(lc.h(), lc.channels(), DensityMatrix::vacuum(lc.space), 5.0, {}, &rep);
    const Liouvillian l(lc.h(), lc.channels());
    CHECK(rep.step <= 0.02 / l.frequency_scale() * (1.0 + 1e-12));
    CHECK(rep.max_trace_drift < 1e-9);
  }
}

TEST_CASE("steady state") {
  SUBCASE("undriven damped cavity goes to vacuum") {
    const ModeSpace s({5});
    const QOperator a = annihilation(5);
    const DensityMatrix rho = steady_state(0.3 * (dagger(a) * a), {{a, 0.1}});
    CHECK(rho.matrix()(0, 0).real() > 1.0 - 1e-8);
  }

  SUBCASE("driven linear cavity is the coherent state") {
    const LinearCavity lc;
    SteadyStateReport rep;
    const DensityMatrix rho = steady_state(lc.h(), lc.channels(), {}, &rep);
    const Complex ref = oracle::linear_cavity_amplitude(lc.delta, lc.kappa, lc.eps);
    CHECK(std::abs((rho.matrix() * lc.a.dense()).trace() - ref) < 1e-6);
    CHECK(rep.residual < 1e-9);
    const StateVector coh = oracle::coherent(ref, lc.dim);
    CHECK(coh.dot(rho.matrix() * coh).real() > 1.0 - 1e-6);
  }

  SUBCASE("thermal bath") {
    const ModeSpace s({14});
    const QOperator b = annihilation(14);
    const double nth = 0.2;
    const DensityMatrix rho = steady_state(dagger(b) * b, mechanical_channels(b, 0.01, nth));
    CHECK((rho.matrix() - oracle::thermal(nth, 14)).cwiseAbs().maxCoeff() < 1e-8);
    // At n_th = 0 the literal heating term still acts: the literal reading
    // differs from the standard one by exactly gamma_m D[b^dag].
    const auto std0 = mechanical_channels(b, 0.01, 0.0, ThermalConvention::standard);
    const auto lit0 = mechanical_channels(b, 0.01, 0.0, ThermalConvention::literal);
    CHECK(std0.size() == 1);
    REQUIRE(lit0.size() == 2);
    const DensityMatrix r1 = DensityMatrix::thermal(14, 0.4);
    const DenseMatrix diff = liouvillian_rhs(dagger(b) * b, lit0, r1) - liouvillian_rhs(dagger(b) * b, std0, r1);
    const DenseMatrix heat = liouvillian_rhs(zero(s), {{dagger(b), 0.01}}, r1);
    CHECK((diff - heat).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(heat.cwiseAbs().maxCoeff() > 1e-3);
  }

  SUBCASE("degenerate steady state is reported") {
    const ModeSpace s({2, 2});
    const QOperator a = embed(annihilation(2), 0, s);
    SteadyStateOptions opt;
    opt.method = SteadyStateMethod::dense_lu;
    bool degenerate = false;
    try {
      steady_state(zero(s), {{a, 0.1}}, opt);
    } catch (const Error& e) {
      degenerate = e.code() == ErrorCode::degenerate_steady_state;
    }
    CHECK(degenerate);
  }

  SUBCASE("methods agree with the independent kernel on a blockade system") {
    SystemParams p = blockade_preset();
    p.delta = 0.021 - p.J;
    const ModeSpace s = effective_space(2, 2);
    const QOperator h = build_effective_hamiltonian(p, s);
    const QOperator am = embed(annihilation(2), slot::a_minus, s), ap = embed(annihilation(2), slot::a_plus, s),
                    bm = embed(annihilation(2), slot::b_minus, s);
    std::vector<CollapseChannel> ch = {{am, p.kappa}, {ap, p.kappa}};
    for (auto& c : mechanical_channels(bm, p.gamma_m, p.n_th)) ch.push_back(c);

    const oracle::Mat ref = oracle::steady_state(h.dense(), {{am.dense(), p.kappa}, {ap.dense(), p.kappa},
                                                             {bm.dense(), p.gamma_m}});
    const DenseMatrix n_minus = (dagger(am) * am).dense();
    const double ref_n = oracle::expect(ref, n_minus);

    SteadyStateOptions opt;
    opt.excitation_slots = {slot::a_minus, slot::a_plus};
    for (auto m : {SteadyStateMethod::dense_lu, SteadyStateMethod::sparse_lu, SteadyStateMethod::sector_gmres,
                   SteadyStateMethod::long_time}) {
      opt.method = m;
      SteadyStateReport rep;
      const DensityMatrix rho = steady_state(h, ch, opt, &rep);
      INFO(to_string(m));
      const double n = oracle::expect(rho.matrix(), n_minus);
      if (m == SteadyStateMethod::long_time) {
        CHECK(std::abs(n - ref_n) < 1e-6);
      } else {
        CHECK(std::abs(n - ref_n) < 1e-6 * ref_n);
        CHECK(rep.residual < 1e-9);
        CHECK((rho.matrix() - ref).cwiseAbs().maxCoeff() < 1e-9);
      }
    }
  }
}
