#include "conecpt/strategy.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "conecpt/error.hpp"

namespace conecpt {

TradeSchedule::TradeSchedule(Vector endowment, std::vector<Vector> trades)
    : endowment_(std::move(endowment)), trades_(std::move(trades))
{
    if (!endowment_.allFinite())
        throw InvalidArgument("schedule: endowment is not finite");
    for (const auto& t : trades_) {
        if (t.size() != endowment_.size())
            throw InvalidArgument("schedule: trade dimension does not match endowment");
        if (!t.allFinite())
            throw InvalidArgument("schedule: trade is not finite");
    }
}

TradeSchedule TradeSchedule::zero(const ScenarioTree& tree, Vector endowment)
{
    if (static_cast<std::size_t>(endowment.size()) != tree.d())
        throw InvalidArgument("schedule: endowment dimension does not match the tree");
    std::vector<Vector> trades(tree.size(), Vector::Zero(static_cast<Eigen::Index>(tree.d())));
    return {std::move(endowment), std::move(trades)};
}

namespace {

void check_index(const TradeSchedule& sched, const ScenarioTree& tree)
{
    if (sched.size() != tree.size())
        throw InvalidArgument("schedule has " + std::to_string(sched.size()) + " nodes, tree has " +
                              std::to_string(tree.size()));
    if (static_cast<std::size_t>(sched.endowment().size()) != tree.d())
        throw InvalidArgument("schedule dimension does not match the tree");
}

}  // namespace

std::vector<Vector> TradeSchedule::positions(const ScenarioTree& tree) const
{
    check_index(*this, tree);
    std::vector<Vector> pos(tree.size());
    for (const auto& node : tree.nodes()) {
        const Vector& before = node.parent == kNoParent ? endowment_ : pos[node.parent];
        pos[node.id] = before + trades_[node.id];
    }
    return pos;
}

std::vector<Vector> TradeSchedule::terminal_holdings(const ScenarioTree& tree) const
{
    auto pos = positions(tree);
    std::vector<Vector> out;
    out.reserve(tree.leaves().size());
    for (auto leaf : tree.leaves())
        out.push_back(pos[leaf] - endowment_);
    return out;
}

void RandomizedStrategy::validate() const
{
    if (weights.size() != components.size() || weights.empty())
        throw InvalidArgument("randomized strategy: need one weight per component");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w))
            throw InvalidArgument("randomized strategy: weights must be >= 0");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw InvalidArgument("randomized strategy: weights must sum to 1");
    for (const auto& c : components)
        if (c.size() != components.front().size() || c.endowment().size() != components.front().endowment().size() ||
            c.endowment() != components.front().endowment())
            throw InvalidArgument("randomized strategy: components must share the tree and the endowment");
}

bool CheckReport::passed() const
{
    for (const auto& r : rows)
        if (!r.pass)
            return false;
    return true;
}

std::vector<std::size_t> CheckReport::failing_nodes() const
{
    std::vector<std::size_t> out;
    for (const auto& r : rows)
        if (!r.pass)
            out.push_back(r.node);
    return out;
}

CheckReport self_financing_check_primal(const TradeSchedule& sched, const ScenarioTree& tree, double tol)
{
    check_index(sched, tree);
    CheckReport report;
    for (const auto& node : tree.nodes()) {
        Vector v = -sched.trade(node.id);
        double residual = node.cone->lp_residual(v);
        bool pass = residual <= tol * std::max(1.0, v.norm());
        report.rows.push_back({node.id, "self_financing_primal", -residual, pass});
    }
    return report;
}

CheckReport self_financing_check_dual(const TradeSchedule& sched, const ScenarioTree& tree, double tol)
{
    check_index(sched, tree);
    CheckReport report;
    for (const auto& node : tree.nodes()) {
        double margin = std::numeric_limits<double>::infinity();
        for (const auto& z : node.cone->dual_generators())
            margin = std::min(margin, -z.dot(sched.trade(node.id)) / z.norm());
        report.rows.push_back({node.id, "self_financing_dual", margin, margin >= -tol});
    }
    return report;
}

CheckReport solvency_check(const TradeSchedule& sched, const ScenarioTree& tree, double tol)
{
    auto pos = sched.positions(tree);
    CheckReport report;
    std::vector<bool> ok(tree.size(), true);
    for (const auto& node : tree.nodes()) {
        double margin = node.cone->membership_margin(pos[node.id]);
        ok[node.id] = margin >= -tol;
        report.rows.push_back({node.id, "solvency", margin, ok[node.id]});
    }
    for (auto leaf : tree.leaves()) {
        for (auto n : tree.lineage(leaf)) {
            if (!ok[n]) {
                report.first_violation_per_path.push_back(n);
                break;
            }
        }
    }
    return report;
}

bool is_admissible(const TradeSchedule& sched, const ScenarioTree& tree, double tol)
{
    check_index(sched, tree);
    if (!tree.root().cone->contains(sched.endowment(), tol))
        return false;
    return self_financing_check_dual(sched, tree, tol).passed() && solvency_check(sched, tree, tol).passed();
}

double total_variation(const TradeSchedule& sched, const ScenarioTree& tree)
{
    check_index(sched, tree);
    double tv = 0.0;
    for (const auto& node : tree.nodes())
        tv += node.probability * sched.trade(node.id).lpNorm<1>();
    return tv;
}

DiscreteDistribution terminal_law(const TradeSchedule& sched, const ScenarioTree& tree, std::size_t numeraire)
{
    auto pos = sched.positions(tree);
    std::vector<double> outcomes;
    std::vector<double> probs;
    outcomes.reserve(tree.leaves().size());
    probs.reserve(tree.leaves().size());
    for (auto leaf : tree.leaves()) {
        const auto& node = tree.node(leaf);
        outcomes.push_back(node.cone->liquidation_value(pos[leaf] - node.reference, numeraire));
        probs.push_back(node.probability);
    }
    return {std::move(outcomes), std::move(probs)};
}

DiscreteDistribution terminal_law(const RandomizedStrategy& strategy, const ScenarioTree& tree,
                                  std::size_t numeraire)
{
    strategy.validate();
    std::vector<DiscreteDistribution> laws;
    laws.reserve(strategy.components.size());
    for (const auto& c : strategy.components)
        laws.push_back(terminal_law(c, tree, numeraire));
    return DiscreteDistribution::mixture(laws, strategy.weights);
}

Evaluation objective_value(const TradeSchedule& sched, const ScenarioTree& tree, const cpt::Preferences& prefs,
                           std::size_t numeraire, const EvaluationOptions& options)
{
    if (!options.force && !is_admissible(sched, tree, options.tol))
        throw Inadmissible("strategy is not admissible (self-financing or solvency check failed)");
    Evaluation e;
    e.law = terminal_law(sched, tree, numeraire);
    e.value = prefs.evaluate(e.law);
    return e;
}

Evaluation objective_value(const RandomizedStrategy& strategy, const ScenarioTree& tree,
                           const cpt::Preferences& prefs, std::size_t numeraire, const EvaluationOptions& options)
{
    strategy.validate();
    if (!options.force)
        for (std::size_t i = 0; i < strategy.components.size(); ++i)
            if (!is_admissible(strategy.components[i], tree, options.tol))
                throw Inadmissible("mixture component " + std::to_string(i + 1) + " is not admissible");
    Evaluation e;
    e.law = terminal_law(strategy, tree, numeraire);
    e.value = prefs.evaluate(e.law);
    return e;
}

}  // namespace conecpt
