#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "conecpt/cpt.hpp"
#include "conecpt/market.hpp"
#include "conecpt/strategy.hpp"

namespace conecpt {

/// Trades restricted to {step * z : z integer, |step * z|_inf <= bound}.
struct TradeGrid {
    double step = 0.5;
    double bound = 1.0;

    void validate() const;
    /// Grid points in -G, lexicographically ordered (first asset slowest).
    std::vector<Vector> candidates(const SolvencyCone& cone, double tol = kDefaultTol) const;
};

struct TraceRow {
    std::size_t iteration = 0;
    double best_value = 0.0;
    double incumbent_tv = 0.0;
    std::size_t evaluations = 0;
};

struct OptimizationTrace {
    std::vector<TraceRow> rows;
};

struct Diagnostics {
    std::size_t rows = 0;
    double max_value = 0.0;
    double min_value = 0.0;
    double final_value = 0.0;
    double max_incumbent_tv = 0.0;
    bool monotone = true;  ///< best-so-far never decreased
};

/// Summary of a trace; a non-monotone best-so-far column signals an internal error.
Diagnostics run_diagnostics(const OptimizationTrace& trace);

// ---------------------------------------------------------------------------
// Exhaustive oracle

struct OracleOptions {
    TradeGrid grid;
    double max_evaluations = 1e7;
    double tol = kDefaultTol;
    std::size_t top_k = 1;     ///< keep this many best schedules (for mixtures)
    std::size_t threads = 0;   ///< 0 = hardware concurrency
};

struct RankedSchedule {
    double value = 0.0;
    TradeSchedule schedule;
};

struct OracleResult {
    TradeSchedule schedule;
    double value = 0.0;
    DiscreteDistribution law;
    OptimizationTrace trace;
    std::size_t evaluations = 0;
    double candidate_count = 0.0;       ///< product of per-node candidate counts
    std::vector<RankedSchedule> top;    ///< best first, at most top_k entries
};

/// Exact maximum of the objective over admissible grid schedules. Trades
/// happen at internal nodes; leaf trades stay zero. Ties go to the
/// lexicographically smallest node-ordered trade sequence.
/// Throws CapExceeded when the candidate count exceeds max_evaluations.
OracleResult oracle_optimize(const ScenarioTree& tree, const Vector& endowment, const cpt::Preferences& prefs,
                             std::size_t numeraire, const OracleOptions& options = {});

// ---------------------------------------------------------------------------
// Cross-entropy policy search

enum class PolicyKind {
    tabular,  ///< one target trade per internal node
    linear,   ///< trade = Theta * (1, t, Y, position)
};

/// Maps parameters to a schedule by evaluating the policy at each internal
/// node and snapping to the nearest admissible grid trade.
class PolicyFamily {
public:
    PolicyFamily(PolicyKind kind, const ScenarioTree& tree, TradeGrid grid, double tol = kDefaultTol);

    PolicyKind kind() const { return kind_; }
    std::size_t parameter_count() const;
    const TradeGrid& grid() const { return grid_; }

    /// Realized schedule, or nothing when some node has no admissible trade.
    std::optional<TradeSchedule> realize(const Vector& theta, const Vector& endowment) const;

private:
    Vector raw_trade(const Vector& theta, std::size_t internal_index, const TreeNode& node,
                     const Vector& position) const;

    PolicyKind kind_;
    const ScenarioTree* tree_;
    TradeGrid grid_;
    double tol_;
    std::vector<std::vector<Vector>> candidates_;  ///< per internal node
    std::size_t features_ = 0;
};

struct CemOptions {
    std::size_t budget = 10000;
    std::size_t population = 64;
    double elite_fraction = 0.1;
    double initial_stddev = 1.0;
    double variance_floor = 1e-6;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
};

struct CemResult {
    Vector theta;
    TradeSchedule schedule;
    double value = 0.0;
    DiscreteDistribution law;
    OptimizationTrace trace;
    std::size_t evaluations = 0;
};

/// Cross-entropy search over policy parameters with a diagonal Gaussian.
/// The incumbent starts at theta = 0 (no trading under both families).
CemResult cem_optimize(const PolicyFamily& policy, const ScenarioTree& tree, const Vector& endowment,
                       const cpt::Preferences& prefs, std::size_t numeraire, const CemOptions& options = {});

// ---------------------------------------------------------------------------
// Randomized strategies

struct MixtureResult {
    RandomizedStrategy strategy;
    std::vector<double> weights;  ///< one per candidate, zeros kept
    double value = 0.0;
    double best_single_value = 0.0;
    DiscreteDistribution law;
    std::size_t evaluations = 0;
};

inline constexpr std::size_t kMaxMixtureCandidates = 6;

/// Best weight vector on the simplex grid {n / resolution}. Vertices are on
/// the grid, so the result is never worse than the best single candidate.
MixtureResult mixture_optimize(const std::vector<TradeSchedule>& candidates, const ScenarioTree& tree,
                               const cpt::Preferences& prefs, std::size_t numeraire, std::size_t resolution,
                               double tol = kDefaultTol);

struct RandomizationProbe {
    double best_deterministic = 0.0;
    double best_mixture = 0.0;
    bool strict_improvement = false;
    MixtureResult mixture;
};

/// Mixes the oracle's top candidates and reports whether randomizing helps.
RandomizationProbe probe_randomization(const ScenarioTree& tree, const Vector& endowment,
                                       const cpt::Preferences& prefs, std::size_t numeraire,
                                       OracleOptions oracle, std::size_t resolution, double margin = 1e-12);

}  // namespace conecpt
