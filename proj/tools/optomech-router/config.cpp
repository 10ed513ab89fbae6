#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace omcli {

namespace {

KeySpec num(std::string name, json def, std::string doc) {
  return {std::move(name), Kind::number, std::move(def), {}, std::move(doc)};
}
KeySpec integer(std::string name, json def, std::string doc) {
  return {std::move(name), Kind::integer, std::move(def), {}, std::move(doc)};
}
KeySpec flag(std::string name, bool def, std::string doc) {
  return {std::move(name), Kind::boolean, def, {}, std::move(doc)};
}
KeySpec choice(std::string name, std::string def, std::vector<std::string> choices, std::string doc) {
  return {std::move(name), Kind::string, std::move(def), std::move(choices), std::move(doc)};
}
KeySpec list(std::string name, json def, std::string doc) {
  return {std::move(name), Kind::number_list, std::move(def), {}, std::move(doc)};
}

const std::vector<KeySpec> kBlockade = {
    num("J", 0.5, "inter-cavity hopping"),
    num("g", 0.03, "single-photon optomechanical coupling"),
    num("kappa", 1e-3, "cavity decay rate"),
    num("gamma_m", nullptr, "mechanical damping (default kappa/200)"),
    num("n_th", 0.0, "thermal phonon number"),
    num("eps1", 1.1e-4, "drive on cavity 1"),
    num("eps2", nullptr, "drive on cavity 2 (default -eps1)"),
    choice("thermal", "standard", {"standard", "literal"}, "mechanical dissipator convention"),
    choice("model", "both", {"effective", "original", "both"}, "Hamiltonians to solve"),
    choice("basis", "quasi", {"quasi", "physical"}, "basis for the original model"),
    num("delta_minus_min", -0.1, "scan start"),
    num("delta_minus_max", 0.1, "scan end"),
    integer("delta_minus_points", 201, "scan points"),
    integer("effective_cavity_dim", 4, "Fock dimension of a- and a+ (effective)"),
    integer("effective_mech_dim", 6, "Fock dimension of b- (effective)"),
    integer("original_cavity_dim", 4, "Fock dimension of each cavity mode (original)"),
    integer("original_mech_minus_dim", 6, "Fock dimension of b- (or b1, b2)"),
    integer("original_mech_plus_dim", 2, "Fock dimension of b+ (quasi basis)"),
    choice("convergence_probe", "auto", {"auto", "none", "minima", "all"},
           "points re-solved at raised truncation (auto: all for effective, minima for original)"),
    num("convergence_tolerance", 0.01, "largest relative g2 change accepted by the probe"),
};

const std::vector<KeySpec> kRouterScan = {
    list("g_values", json::array({0.0, 0.02, 0.04, 0.05}), "coupling values, one CSV each"),
    num("gamma", 0.01, "waveguide-induced width"),
    num("epsilon", 1e-4, "packet half-width"),
    num("delta_minus", 0.0, "frame offset (results depend on delta_prime only)"),
    num("delta_prime_min", -0.1, "scan start"),
    num("delta_prime_max", 0.1, "scan end"),
    integer("delta_prime_points", 801, "scan points"),
    num("normalization_tolerance", 1e-4, "allowed |sum of ports - 1|"),
};

const std::vector<KeySpec> kRouterOpt = {
    list("g_values", json::array({0.02, 0.04, 0.06}), "coupling values"),
    num("gamma_min", 0.005, "smallest gamma"),
    num("gamma_max", 0.08, "largest gamma"),
    integer("gamma_points", 40, "gamma grid size"),
    choice("gamma_spacing", "log", {"log", "linear"}, "gamma grid spacing"),
    num("epsilon", 1e-4, "packet half-width"),
    num("ridge_tolerance", 0.15, "allowed relative distance of the argmax from g/sqrt(2)"),
};

const std::vector<KeySpec> kScatter = {
    integer("tuples", 20, "random (g, gamma, delta_prime) tuples"),
    integer("seed", 1, "random seed"),
    num("epsilon", 2e-3, "packet half-width"),
    num("g_min", 0.0, ""),
    num("g_max", 0.08, ""),
    num("gamma_min", 0.005, ""),
    num("gamma_max", 0.05, ""),
    num("delta_prime_min", -0.08, ""),
    num("delta_prime_max", 0.08, ""),
    num("tolerance", 0.02, "allowed |oracle - integrated| per port"),
    flag("check_doubling", true, "rerun every tuple with doubled modes and steps"),
    num("doubling_tolerance", 0.005, "allowed absolute change per port on doubling"),
    integer("min_modes", 2001, "smallest continuum grid"),
    num("dt_factor", 0.25, "time step times half the band width"),
    num("packet_halfwidths", 100.0, "band margin in packet half-widths"),
    flag("band_correction", true, "add the self-energy of the modes outside the sampled band"),
};

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::number: return "a number";
    case Kind::integer: return "an integer";
    case Kind::boolean: return "true or false";
    case Kind::string: return "a string";
    case Kind::number_list: return "a list of numbers";
  }
  return "?";
}

bool type_ok(const KeySpec& spec, const json& v) {
  switch (spec.kind) {
    case Kind::number: return v.is_number() && std::isfinite(v.get<double>());
    case Kind::integer:
      if (v.is_number_integer()) return true;
      return v.is_number_float() && std::nearbyint(v.get<double>()) == v.get<double>();
    case Kind::boolean: return v.is_boolean();
    case Kind::string: return v.is_string();
    case Kind::number_list:
      if (!v.is_array()) return false;
      return std::all_of(v.begin(), v.end(),
                         [](const json& x) { return x.is_number() && std::isfinite(x.get<double>()); });
  }
  return false;
}

struct Checker {
  const json& cfg;
  double d(const char* k) const { return cfg.at(k).get<double>(); }
  long long i(const char* k) const { return cfg.at(k).get<long long>(); }
  void positive(const char* k) const {
    if (!(d(k) > 0.0)) throw ConfigError(std::string(k) + " must be > 0");
  }
  void non_negative(const char* k) const {
    if (!(d(k) >= 0.0)) throw ConfigError(std::string(k) + " must be >= 0");
  }
  void at_least(const char* k, long long lo) const {
    if (i(k) < lo) throw ConfigError(std::string(k) + " must be >= " + std::to_string(lo));
  }
  void greater(const char* hi, const char* lo) const {
    if (!(d(hi) > d(lo))) throw ConfigError(std::string(hi) + " must be > " + lo);
  }
  void not_less(const char* hi, const char* lo) const {
    if (!(d(hi) >= d(lo))) throw ConfigError(std::string(hi) + " must be >= " + lo);
  }
  void list_non_negative(const char* k) const {
    const json& v = cfg.at(k);
    if (v.empty()) throw ConfigError(std::string(k) + " must not be empty");
    for (const auto& x : v) {
      if (!(x.get<double>() >= 0.0)) throw ConfigError(std::string(k) + " entries must be >= 0");
    }
  }
};

void validate(Experiment e, json& cfg) {
  Checker c{cfg};
  switch (e) {
    case Experiment::blockade_scan:
      if (cfg["gamma_m"].is_null()) cfg["gamma_m"] = c.d("kappa") / 200.0;
      if (cfg["eps2"].is_null()) cfg["eps2"] = -c.d("eps1");
      c.positive("J");
      c.non_negative("g");
      c.positive("kappa");
      c.positive("gamma_m");
      c.non_negative("n_th");
      c.greater("delta_minus_max", "delta_minus_min");
      c.at_least("delta_minus_points", 2);
      for (const char* k : {"effective_cavity_dim", "effective_mech_dim", "original_cavity_dim",
                            "original_mech_minus_dim", "original_mech_plus_dim"}) {
        c.at_least(k, 2);
      }
      c.positive("convergence_tolerance");
      break;
    case Experiment::router_scan:
      c.list_non_negative("g_values");
      c.positive("gamma");
      c.positive("epsilon");
      c.greater("delta_prime_max", "delta_prime_min");
      c.at_least("delta_prime_points", 2);
      c.positive("normalization_tolerance");
      break;
    case Experiment::router_opt:
      c.list_non_negative("g_values");
      c.positive("gamma_min");
      c.greater("gamma_max", "gamma_min");
      c.at_least("gamma_points", 2);
      c.positive("epsilon");
      c.positive("ridge_tolerance");
      break;
    case Experiment::scatter_verify:
      c.at_least("tuples", 1);
      c.at_least("seed", 0);
      c.positive("epsilon");
      c.non_negative("g_min");
      c.not_less("g_max", "g_min");
      c.positive("gamma_min");
      c.not_less("gamma_max", "gamma_min");
      c.not_less("delta_prime_max", "delta_prime_min");
      c.positive("tolerance");
      c.positive("doubling_tolerance");
      c.at_least("min_modes", 3);
      c.positive("dt_factor");
      c.positive("packet_halfwidths");
      break;
  }
}

}  // namespace

std::optional<Experiment> parse_experiment(std::string_view name) {
  if (name == "blockade-scan") return Experiment::blockade_scan;
  if (name == "router-scan") return Experiment::router_scan;
  if (name == "router-opt") return Experiment::router_opt;
  if (name == "scatter-verify") return Experiment::scatter_verify;
  return std::nullopt;
}

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::blockade_scan: return "blockade-scan";
    case Experiment::router_scan: return "router-scan";
    case Experiment::router_opt: return "router-opt";
    case Experiment::scatter_verify: return "scatter-verify";
  }
  return "?";
}

const std::vector<KeySpec>& schema(Experiment e) {
  switch (e) {
    case Experiment::blockade_scan: return kBlockade;
    case Experiment::router_scan: return kRouterScan;
    case Experiment::router_opt: return kRouterOpt;
    case Experiment::scatter_verify: return kScatter;
  }
  return kBlockade;
}

std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_cost = static_cast<std::size_t>(-1);
  std::vector<std::size_t> prev, cur;
  for (const auto& cand : candidates) {
    prev.resize(cand.size() + 1);
    cur.resize(cand.size() + 1);
    for (std::size_t j = 0; j <= cand.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= key.size(); ++i) {
      cur[0] = i;
      for (std::size_t j = 1; j <= cand.size(); ++j) {
        const std::size_t sub = prev[j - 1] + (key[i - 1] == cand[j - 1] ? 0 : 1);
        cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
      }
      std::swap(prev, cur);
    }
    if (prev[cand.size()] < best_cost) {
      best_cost = prev[cand.size()];
      best = cand;
    }
  }
  return best;
}

std::pair<std::string, json> parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got \"" + text + "\"");
  std::string key = text.substr(0, eq);
  std::string raw = text.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  return {std::move(key), std::move(value)};
}

json resolve_config(Experiment e, const json& file, const std::vector<std::string>& overrides) {
  const auto& specs = schema(e);
  std::vector<std::string> names;
  for (const auto& s : specs) names.push_back(s.name);

  json cfg = json::object();
  for (const auto& s : specs) cfg[s.name] = s.default_value;

  auto assign = [&](const std::string& key, const json& value) {
    auto it = std::find_if(specs.begin(), specs.end(), [&](const KeySpec& s) { return s.name == key; });
    if (it == specs.end()) {
      throw ConfigError("unknown key \"" + key + "\" for " + to_string(e) + " (nearest valid key: \"" +
                        nearest_key(key, names) + "\")");
    }
    if (!type_ok(*it, value)) throw ConfigError(key + " must be " + kind_name(it->kind));
    if (it->kind == Kind::string &&
        std::find(it->choices.begin(), it->choices.end(), value.get<std::string>()) == it->choices.end()) {
      std::string allowed;
      for (const auto& c : it->choices) allowed += (allowed.empty() ? "" : ", ") + c;
      throw ConfigError(key + " must be one of: " + allowed);
    }
    cfg[key] = it->kind == Kind::integer ? json(value.get<long long>()) : value;
  };

  if (!file.is_null()) {
    if (!file.is_object()) throw ConfigError("config file must contain a JSON object");
    for (const auto& [key, value] : file.items()) assign(key, value);
  }
  for (const auto& text : overrides) {
    const auto [key, value] = parse_override(text);
    assign(key, value);
  }
  validate(e, cfg);
  return cfg;
}

}  // namespace omcli
