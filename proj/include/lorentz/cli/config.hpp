#pragma once

// Experiment configuration: strict JSON schema, every violation reported in
// one SchemaError, table validation folded into normalization.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lorentz/billiard.hpp"
#include "lorentz/lattice.hpp"
#include "lorentz/markov.hpp"

namespace lorentz::cli {

using json = nlohmann::ordered_json;

struct SchemaError : std::runtime_error {
  explicit SchemaError(std::vector<std::string> violations);
  std::vector<std::string> violations;
};

inline const std::vector<std::string> kExperiments = {"validate", "sigma",             "llt",      "mixing",
                                                      "tail",     "oracle-identities", "prop-scan"};

struct SystemSpec {
  std::string kind;  // "billiard" | "markov"
  // billiard
  std::vector<billiard::ScattererSpec> scatterers;
  int n_dirs = 8;
  std::size_t n_rays = 1'000'000;
  // markov
  std::string preset;  // "srw" | "random3" | "two_state_1d" | "" (explicit edges)
  std::size_t n_states = 0;
  int dimension = 2;
  std::uint64_t chain_seed = 0;
  std::vector<markov::Edge> edges;
};

struct Params {
  std::vector<std::size_t> n_grid;
  std::size_t N = 100'000;
  std::size_t cap = 1000;
  std::size_t n_sigma = 200;
  std::size_t sigma_samples = 100'000;
  std::size_t integral_samples = 100'000;
  std::vector<Cell> cells;
  int k = 1;
  Cell l;
  std::size_t n_max = 50;
  double tolerance = 0.02;
  int workers = 0;
  std::string u = "u";
  std::string v = "v";
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  SystemSpec system;
  std::map<std::string, json> observables;
  Params params;
  std::string output;
  double horizon_bound = 0.0;  // filled for billiards
  std::optional<billiard::BilliardTable> table;  // validated table
  json normalized;             // echo written to results.json
};

/// Schema check of a parsed document; collects every violation.
[[nodiscard]] ExperimentConfig parse_config(const json& doc);
/// Reads, validates and normalizes a config file. Billiard tables are
/// validated (OverlapError / CorridorError pass through) and the horizon
/// bound is recorded in the normalized config. A non-empty `experiment`
/// replaces the config's experiment before validation.
[[nodiscard]] ExperimentConfig validate_config(const std::filesystem::path& path, const std::string& experiment = "");
/// Table validation step of validate_config, for configs built in memory.
void validate_system(ExperimentConfig& config);

[[nodiscard]] billiard::BilliardTable make_table(const SystemSpec& spec);
[[nodiscard]] markov::MarkovExtension make_chain(const SystemSpec& spec);

}  // namespace lorentz::cli
