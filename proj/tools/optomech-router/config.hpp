#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace omcli {

using nlohmann::json;

enum class Experiment { blockade_scan, router_scan, router_opt, scatter_verify };

std::optional<Experiment> parse_experiment(std::string_view name);
const char* to_string(Experiment e);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Kind { number, integer, boolean, string, number_list };

struct KeySpec {
  std::string name;
  Kind kind;
  json default_value;  // null: derived from other keys after merging
  std::vector<std::string> choices;
  std::string doc;
};

const std::vector<KeySpec>& schema(Experiment e);

// Closest candidate by edit distance (ties go to the earlier candidate).
std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates);

// "key=value"; value is parsed as JSON and falls back to a plain string.
std::pair<std::string, json> parse_override(const std::string& text);

// Merges defaults, the config file object and the overrides (in that order),
// checks types and ranges and fills derived defaults.
json resolve_config(Experiment e, const json& file, const std::vector<std::string>& overrides);

}  // namespace omcli
