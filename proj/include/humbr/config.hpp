#pragma once

// Run configuration. Layers are merged as
//     built-in defaults < preset < config file < command-line overrides
// and every layer is a JSON object with the schema in docs/config.md.
// Credentials are never part of the configuration: providers name the
// environment variable that holds them.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "humbr/embedding.hpp"
#include "humbr/orchestrator.hpp"
#include "humbr/planner.hpp"
#include "json.hpp"

namespace humbr {

struct RunConfig {
  double alpha = kDefaultAlpha;
  double tau = kDefaultTau;
  double epsilon = 1e-4;
  std::uint64_t seed = 0;
  std::size_t parallelism = 8;
  std::optional<std::size_t> min_pool;
  std::uint64_t trials = 1000000;
  unsigned max_output_tokens = 1024;
  std::vector<double> temperature_ladder{0.0, 0.25, 0.5, 0.75};
  EmbeddingProviderConfig embedding;
  std::vector<ProviderSpec> providers;
  std::optional<ProviderSpec> judge;
  std::vector<ModelCatalogEntry> catalog;
  PlanLimits limits;
};

/// Built-in defaults as a JSON layer.
nlohmann::json default_config_json();

/// Values a named preset overrides ("default" or "production").
nlohmann::json preset_json(std::string_view name);

/// Merges the layers (each may be empty/null) and parses the result. The
/// preset is taken from overrides, then the file. Throws Error(kInvalidArgument).
nlohmann::json resolve_config_json(const nlohmann::json& file, const nlohmann::json& overrides);

RunConfig config_from_json(const nlohmann::json& merged);
nlohmann::json to_json(const RunConfig& cfg);
nlohmann::json to_json(const ProviderSpec& spec);

/// Human-readable problems with a config file layer: unknown keys, wrong
/// types, out-of-range values, inline credentials. Empty means valid.
std::vector<std::string> config_issues(const nlohmann::json& file);

}  // namespace humbr
