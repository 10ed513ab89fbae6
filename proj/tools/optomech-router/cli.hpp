#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace omcli {

// 12 significant digits, C locale; "nan" for missing values.
std::string format_number(double v);

// Results file: a "# config: {...}" line with the resolved parameters, then
// the header row, then data rows. '\n' line endings throughout.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const json& config, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunResult {
  std::vector<Check> checks;
  json results = json::object();
  json timings = json::object();
  std::vector<std::string> files;

  bool all_pass() const;
};

RunResult run_experiment(Experiment e, const json& config, const std::filesystem::path& out_dir, unsigned jobs,
                         std::ostream& log);

// --jobs wins, then OPTOMECH_ROUTER_JOBS, then 1.
unsigned resolve_jobs(std::optional<unsigned> flag, const char* env_value);

// Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config error.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace omcli
