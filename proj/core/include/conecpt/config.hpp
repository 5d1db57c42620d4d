#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "conecpt/cpt.hpp"
#include "conecpt/error.hpp"
#include "conecpt/market.hpp"
#include "conecpt/optimizer.hpp"
#include "conecpt/reference.hpp"

namespace conecpt {

inline constexpr int kConfigSchemaVersion = 1;

/// Malformed or inconsistent experiment configuration.
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

struct MarketConfig {
    std::size_t d = 2;
    std::size_t numeraire = 0;  ///< 0-based here, 1-based in the file
    DrivingProcessSpec process;
    ProportionalConeParams cone;
    ReferenceMap reference = ReferenceMap::zero(2);
    std::size_t max_leaves = ScenarioTree::kDefaultMaxLeaves;
};

struct ProblemConfig {
    Vector x;
    double tol = kDefaultTol;
};

enum class OptimizerMode { oracle, cem, mixture };

struct OptimizerConfig {
    OptimizerMode mode = OptimizerMode::oracle;
    TradeGrid grid;
    double max_evaluations = 1e7;
    std::size_t budget = 10000;
    std::size_t population = 64;
    double elite_fraction = 0.1;
    double init_std = 1.0;
    PolicyKind policy = PolicyKind::tabular;
    std::size_t mixture_resolution = 10;
    std::size_t mixture_candidates = 4;
    std::size_t n_paths = 256;  ///< tree size for continuous samplers
    std::size_t threads = 0;
};

struct SearchConfig {
    std::vector<double> gamma_plus{0.4, 0.5, 0.61, 0.8, 1.0};
    std::vector<double> gamma_minus{0.4, 0.5, 0.69, 0.8, 1.0};
    std::vector<double> lambda{};  ///< empty: keep the market's lambda
};

struct ExperimentConfig {
    int schema_version = kConfigSchemaVersion;
    std::uint64_t seed = 0;
    MarketConfig market;
    nlohmann::json preferences;  ///< kept as text so the search mode can vary it
    ProblemConfig problem;
    OptimizerConfig optimizer;
    SearchConfig search;
};

/// Throws ConfigError on any schema violation.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

cpt::Preferences preferences_from_json(const nlohmann::json& section);

/// Overrides the master seed; the driving process follows it.
void set_seed(ExperimentConfig& config, std::uint64_t seed);

std::string to_string(OptimizerMode mode);

/// Everything a command needs, assembled from a config.
struct Model {
    ConeMap cones;
    ScenarioTree tree;
    cpt::Preferences preferences;
    Vector x;
    std::size_t numeraire = 0;
    double tol = kDefaultTol;
};

/// Builds the tree (sampling it for continuous increments) and checks that
/// x lies in G(root). Throws ConfigError when it does not.
Model build_model(const ExperimentConfig& config);

}  // namespace conecpt
