#pragma once

#include <swapfleet/params.hpp>
#include <swapfleet/state.hpp>

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace swapfleet::cli {

using Json = nlohmann::json;

struct FleetConfig {
  Model model = Model::kInstantUsage;
  FleetParams params;  // validated
  EmpiricalState init;
  Json source;         // as read, used for hashing and manifests
  std::vector<std::string> warnings;
};

// Built-in reference configuration, used when no --config is given.
Json reference_config_json();

// Throws ConfigError naming the offending key.
FleetConfig parse_fleet_config(const Json& j);
Json read_json_file(const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);
// Hash of the canonical dump (object keys sorted).
std::string config_hash(const Json& config);

}  // namespace swapfleet::cli
