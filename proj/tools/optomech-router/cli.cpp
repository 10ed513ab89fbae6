#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <ostream>

#include <CLI11.hpp>

#include <optomech/optomech.h>

namespace omcli {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const json& config, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  out_ << "# config: " << config.dump() << '\n';
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::logic_error("CSV row has the wrong number of cells");
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
  out_ << '\n';
}

bool RunResult::all_pass() const {
  if (checks.empty()) return false;
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

unsigned resolve_jobs(std::optional<unsigned> flag, const char* env_value) {
  if (flag) return std::max(1u, *flag);
  if (env_value && *env_value) {
    char* end = nullptr;
    const long v = std::strtol(env_value, &end, 10);
    if (end && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
    throw ConfigError(std::string("OPTOMECH_ROUTER_JOBS must be a positive integer, got \"") + env_value + "\"");
  }
  return 1;
}

namespace {

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optomechanical blockade and single-photon router experiments", "optomech-router"};
  std::string experiment_name, config_path, out_dir = "results";
  std::vector<std::string> overrides;
  std::optional<unsigned> jobs_flag;
  app.add_option("experiment", experiment_name, "blockade-scan | router-scan | router-opt | scatter-verify")
      ->required()
      ->check(CLI::IsMember({"blockade-scan", "router-scan", "router-opt", "scatter-verify"}));
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--jobs", jobs_flag, "worker threads (fallback: OPTOMECH_ROUTER_JOBS)")
      ->check(CLI::PositiveNumber);
  app.add_option("--set", overrides, "override a config key, key=value (repeatable)");
  app.set_version_flag("--version", std::string(omr_version()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  const Experiment experiment = *parse_experiment(experiment_name);
  json config;
  unsigned jobs = 1;
  try {
    json file;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      file = json::parse(in, nullptr, false);
      if (file.is_discarded()) throw ConfigError("config file " + config_path + " is not valid JSON");
    }
    config = resolve_config(experiment, file, overrides);
    jobs = resolve_jobs(jobs_flag, std::getenv("OPTOMECH_ROUTER_JOBS"));
  } catch (const ConfigError& e) {
    err << "optomech-router: " << e.what() << "\n";
    return 2;
  }

  RunResult result;
  const std::filesystem::path dir(out_dir);
  try {
    std::filesystem::create_directories(dir);
    write_json(dir / "resolved_config.json", {{"experiment", experiment_name}, {"config", config}});
    result = run_experiment(experiment, config, dir, jobs, err);
  } catch (const std::exception& e) {
    err << "optomech-router: " << e.what() << "\n";
    return 2;
  }

  json checks = json::array();
  for (const auto& c : result.checks) {
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    out << (c.pass ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : "  (" + c.detail + ")") << "\n";
  }
  const bool pass = result.all_pass();
  json summary = {{"experiment", experiment_name},
                  {"version", omr_version()},
                  {"config", config},
                  {"jobs", jobs},
                  {"checks", checks},
                  {"pass", pass},
                  {"results", result.results},
                  {"files", result.files},
                  {"timings", result.timings}};
  try {
    write_json(dir / "summary.json", summary);
  } catch (const std::exception& e) {
    err << "optomech-router: " << e.what() << "\n";
    return 2;
  }
  out << (pass ? "all checks passed" : "some checks failed") << "; results in " << dir.string() << "\n";
  return pass ? 0 : 1;
}

}  // namespace omcli
