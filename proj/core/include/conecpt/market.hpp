#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "conecpt/cone.hpp"
#include "conecpt/reference.hpp"

namespace conecpt {

// ---------------------------------------------------------------------------
// Driving process

struct SupportPoint {
    Vector value;
    double probability = 0.0;
};

/// Finite-support increments; either one list shared by every step or one per step.
struct FiniteIncrements {
    std::vector<std::vector<SupportPoint>> per_step;

    const std::vector<SupportPoint>& at(std::size_t step) const
    {
        return per_step.size() == 1 ? per_step.front() : per_step.at(step);
    }
};

/// Increment over [t, t+dt]: drift*dt + volatility*sqrt(dt)*N(0,1), componentwise.
struct GaussianIncrements {
    Vector drift;
    Vector volatility;
};

/// Gaussian part plus a compound Poisson sum with N(jump_mean, jump_stddev^2) marks.
struct JumpDiffusionIncrements {
    Vector drift;
    Vector volatility;
    double jump_intensity = 0.0;
    Vector jump_mean;
    Vector jump_stddev;
};

using IncrementModel = std::variant<FiniteIncrements, GaussianIncrements, JumpDiffusionIncrements>;

struct DrivingProcessSpec {
    std::size_t m = 1;
    std::vector<double> grid{0.0, 1.0};
    IncrementModel increments;
    std::uint64_t seed = 0;

    std::size_t steps() const { return grid.empty() ? 0 : grid.size() - 1; }
    bool finite_support() const { return std::holds_alternative<FiniteIncrements>(increments); }
    /// Throws InvalidArgument when the spec breaks an invariant.
    void validate() const;
};

/// n_paths x (steps+1) x m values, row-major in that order.
struct PathBatch {
    std::size_t n_paths = 0;
    std::size_t points = 0;
    std::size_t m = 0;
    std::vector<double> values;

    double at(std::size_t path, std::size_t step, std::size_t dim) const
    {
        return values[(path * points + step) * m + dim];
    }
    Vector point(std::size_t path, std::size_t step) const;
    std::vector<Vector> path(std::size_t path) const;
};

inline constexpr std::size_t kPathBlock = 256;

/// Paths with Y_0 = 0 and independent increments. Block i of kPathBlock paths
/// draws from an engine seeded with (seed, i), so output does not depend on
/// the number of worker threads.
PathBatch sample_paths(const DrivingProcessSpec& spec, std::size_t n_paths, std::size_t threads = 0);

// ---------------------------------------------------------------------------
// Cone map

enum class PriceModel { constant, linear, exponential };

/// Proportional costs lambda(Y) = lambda + lambda_slope * |Y| around prices
/// driven by Y: risky asset j has price p0_j (constant), p0_j + Y_j (linear)
/// or p0_j exp(Y_j) (exponential). Asset 0 is cash.
struct ProportionalConeParams {
    std::size_t d = 2;
    double lambda = 0.0;
    double lambda_slope = 0.0;
    PriceModel price_model = PriceModel::linear;
    Vector initial_prices;  ///< d - 1 risky-asset prices
};

class ConeMap {
public:
    using Fn = std::function<BidAskMatrix(double time, const Vector& y)>;

    static ConeMap proportional(ProportionalConeParams params);
    static ConeMap custom(std::size_t d, Fn fn);

    std::size_t dim() const { return d_; }
    BidAskMatrix operator()(double time, const Vector& y) const { return fn_(time, y); }
    /// Prices (cash first) at Y under a proportional map; empty for custom maps.
    Vector prices(const Vector& y) const;
    const ProportionalConeParams* params() const { return params_ ? &*params_ : nullptr; }

private:
    std::size_t d_ = 0;
    Fn fn_;
    std::shared_ptr<const ProportionalConeParams> params_;
};

// ---------------------------------------------------------------------------
// Scenario tree

inline constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();

struct TreeNode {
    std::size_t id = 0;
    std::size_t parent = kNoParent;
    std::size_t step = 0;
    double time = 0.0;
    Vector y;
    double probability = 1.0;             ///< unconditional
    double transition_probability = 1.0;  ///< conditional on the parent
    std::vector<std::size_t> children;
    std::shared_ptr<const SolvencyCone> cone;
    Vector reference;  ///< W at leaves; empty elsewhere

    bool is_leaf() const { return children.empty(); }
};

/// Non-recombining tree. Node ids are breadth-first, so a parent always has
/// a smaller id than its children.
class ScenarioTree {
public:
    static constexpr std::size_t kDefaultMaxLeaves = 1'000'000;

    static ScenarioTree build(const DrivingProcessSpec& spec, const ConeMap& cones, const ReferenceMap& reference,
                              std::size_t max_leaves = kDefaultMaxLeaves);

    /// Equal-weight tree over sampled paths; identical prefixes share nodes.
    static ScenarioTree from_paths(const PathBatch& paths, const std::vector<double>& grid, const ConeMap& cones,
                                   const ReferenceMap& reference);

    std::size_t d() const { return d_; }
    std::size_t m() const { return m_; }
    std::size_t steps() const { return steps_; }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const TreeNode& node(std::size_t id) const { return nodes_.at(id); }
    const TreeNode& root() const { return nodes_.front(); }
    const std::vector<std::size_t>& leaves() const { return leaves_; }
    const std::vector<std::size_t>& internal_nodes() const { return internal_; }

    /// Node ids from the root down to `id`, inclusive.
    std::vector<std::size_t> lineage(std::size_t id) const;
    /// Y values from the root down to `id`.
    std::vector<Vector> y_path(std::size_t id) const;

private:
    void finalize(const ConeMap& cones, const ReferenceMap& reference);

    std::size_t d_ = 0;
    std::size_t m_ = 0;
    std::size_t steps_ = 0;
    std::vector<TreeNode> nodes_;
    std::vector<std::size_t> leaves_;
    std::vector<std::size_t> internal_;
};

// ---------------------------------------------------------------------------
// Consistent price systems

struct ConsistentPriceSystem {
    std::vector<Vector> z;  ///< one d-vector per node
    double margin = 0.0;

    /// Martingale property and strict interiority with the stored margin.
    bool verify(const ScenarioTree& tree, double tol = kDefaultTol) const;
};

struct CpsResult {
    bool feasible = false;
    std::string detail;
    ConsistentPriceSystem cps;  ///< valid when feasible
};

/// Maximizes the interiority margin over node-indexed martingales Z with
/// Z(root).1 = 1. Feasible iff the optimal margin exceeds tol.
/// Throws LpFailure if the solver fails, CapExceeded for oversized trees.
CpsResult find_cps(const ScenarioTree& tree, double tol = kDefaultTol, std::size_t max_variables = 20000);

}  // namespace conecpt
