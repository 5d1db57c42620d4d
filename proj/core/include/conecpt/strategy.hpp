#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "conecpt/cone.hpp"
#include "conecpt/cpt.hpp"
#include "conecpt/market.hpp"

namespace conecpt {

/// One trade vector per tree node plus the initial endowment. Positions are
/// cumulative along the lineage: position(n) = x + sum of trades from the
/// root down to n inclusive.
class TradeSchedule {
public:
    TradeSchedule() = default;
    TradeSchedule(Vector endowment, std::vector<Vector> trades);

    static TradeSchedule zero(const ScenarioTree& tree, Vector endowment);

    const Vector& endowment() const { return endowment_; }
    const std::vector<Vector>& trades() const { return trades_; }
    const Vector& trade(std::size_t node) const { return trades_.at(node); }
    Vector& trade(std::size_t node) { return trades_.at(node); }
    std::size_t size() const { return trades_.size(); }

    /// Post-trade position at every node.
    std::vector<Vector> positions(const ScenarioTree& tree) const;
    /// Accumulated trades X_1 at every leaf (leaf order of the tree), without x.
    std::vector<Vector> terminal_holdings(const ScenarioTree& tree) const;

    bool operator==(const TradeSchedule&) const = default;

private:
    Vector endowment_;
    std::vector<Vector> trades_;
};

/// Finite mixture over schedules, selected by an independent uniform draw.
struct RandomizedStrategy {
    std::vector<double> weights;
    std::vector<TradeSchedule> components;

    static RandomizedStrategy pure(TradeSchedule schedule) { return {{1.0}, {std::move(schedule)}}; }
    void validate() const;
};

struct NodeCheck {
    std::size_t node = 0;
    std::string check;
    double margin = 0.0;  ///< >= -tol means pass
    bool pass = true;
};

struct CheckReport {
    std::vector<NodeCheck> rows;
    /// First failing node along each root-to-leaf path (solvency only), per leaf.
    std::vector<std::size_t> first_violation_per_path;

    bool passed() const;
    std::vector<std::size_t> failing_nodes() const;
};

/// -trade(n) in G(n), decided by LP feasibility over the primal generators.
CheckReport self_financing_check_primal(const TradeSchedule& sched, const ScenarioTree& tree,
                                        double tol = kDefaultTol);
/// zeta.trade(n) <= 0 for every dual generator zeta of G(n); no LP involved.
CheckReport self_financing_check_dual(const TradeSchedule& sched, const ScenarioTree& tree,
                                      double tol = kDefaultTol);
/// position(n) in G(n) at every node.
CheckReport solvency_check(const TradeSchedule& sched, const ScenarioTree& tree, double tol = kDefaultTol);

/// Endowment in G(root), dual self-financing and solvency all pass.
bool is_admissible(const TradeSchedule& sched, const ScenarioTree& tree, double tol = kDefaultTol);

/// sum over nodes of P(node) * |trade(node)|_1.
double total_variation(const TradeSchedule& sched, const ScenarioTree& tree);

/// Law of l(X_1 - W) over the leaves.
DiscreteDistribution terminal_law(const TradeSchedule& sched, const ScenarioTree& tree, std::size_t numeraire);
DiscreteDistribution terminal_law(const RandomizedStrategy& strategy, const ScenarioTree& tree,
                                  std::size_t numeraire);

struct Evaluation {
    double value = 0.0;
    DiscreteDistribution law;
};

struct EvaluationOptions {
    double tol = kDefaultTol;
    bool force = false;  ///< skip admissibility checks
};

/// V(l(X_1 - W)). Throws Inadmissible unless the strategy passes the checks
/// or `force` is set.
Evaluation objective_value(const TradeSchedule& sched, const ScenarioTree& tree, const cpt::Preferences& prefs,
                           std::size_t numeraire, const EvaluationOptions& options = {});
Evaluation objective_value(const RandomizedStrategy& strategy, const ScenarioTree& tree,
                           const cpt::Preferences& prefs, std::size_t numeraire,
                           const EvaluationOptions& options = {});

}  // namespace conecpt
