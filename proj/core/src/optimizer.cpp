#include "conecpt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "conecpt/error.hpp"
#include "conecpt/parallel.hpp"

namespace conecpt {

void TradeGrid::validate() const
{
    if (!(step > 0.0) || !std::isfinite(step))
        throw InvalidArgument("trade grid: step must be finite and > 0");
    if (!(bound > 0.0) || !std::isfinite(bound))
        throw InvalidArgument("trade grid: bound must be finite and > 0");
    if (bound / step > 1e6)
        throw InvalidArgument("trade grid: too many grid points per asset");
}

std::vector<Vector> TradeGrid::candidates(const SolvencyCone& cone, double tol) const
{
    validate();
    const auto d = static_cast<Eigen::Index>(cone.dim());
    const auto k_max = static_cast<long>(std::floor(bound / step + 1e-9));
    std::vector<Vector> out;
    std::vector<long> idx(static_cast<std::size_t>(d), -k_max);
    while (true) {
        Vector t(d);
        for (Eigen::Index i = 0; i < d; ++i)
            t[i] = step * static_cast<double>(idx[static_cast<std::size_t>(i)]);
        if (cone.contains(-t, tol))
            out.push_back(std::move(t));

        // odometer, last asset fastest
        Eigen::Index pos = d - 1;
        while (pos >= 0) {
            auto& digit = idx[static_cast<std::size_t>(pos)];
            if (++digit <= k_max)
                break;
            digit = -k_max;
            --pos;
        }
        if (pos < 0)
            break;
    }
    return out;
}

Diagnostics run_diagnostics(const OptimizationTrace& trace)
{
    if (trace.rows.empty())
        throw InvalidArgument("diagnostics: empty trace");
    Diagnostics diag;
    diag.rows = trace.rows.size();
    diag.max_value = -std::numeric_limits<double>::infinity();
    diag.min_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < trace.rows.size(); ++i) {
        const auto& r = trace.rows[i];
        diag.max_value = std::max(diag.max_value, r.best_value);
        diag.min_value = std::min(diag.min_value, r.best_value);
        diag.max_incumbent_tv = std::max(diag.max_incumbent_tv, r.incumbent_tv);
        if (i > 0 && r.best_value < trace.rows[i - 1].best_value)
            diag.monotone = false;
    }
    diag.final_value = trace.rows.back().best_value;
    return diag;
}

namespace {

// Leaf data needed to turn node positions into an objective value.
class LeafEvaluator {
public:
    LeafEvaluator(const ScenarioTree& tree, const cpt::Preferences& prefs, std::size_t numeraire)
        : tree_(tree), prefs_(prefs), numeraire_(numeraire)
    {
        if (numeraire >= tree.d())
            throw InvalidArgument("numeraire index out of range");
        for (auto leaf : tree.leaves())
            probs_.push_back(tree.node(leaf).probability);
    }

    /// `before(leaf)` returns the position entering the leaf (leaf trades are zero).
    template <typename PositionOf>
    double value(PositionOf&& before) const
    {
        std::vector<double> outcomes;
        outcomes.reserve(probs_.size());
        for (auto leaf : tree_.leaves()) {
            const auto& node = tree_.node(leaf);
            outcomes.push_back(node.cone->liquidation_value(before(node) - node.reference, numeraire_));
        }
        return prefs_.evaluate(DiscreteDistribution(std::move(outcomes), probs_));
    }

private:
    const ScenarioTree& tree_;
    const cpt::Preferences& prefs_;
    std::size_t numeraire_;
    std::vector<double> probs_;
};

bool feasible_after(const TreeNode& node, const ScenarioTree& tree, const Vector& position, double tol)
{
    if (!node.cone->contains(position, tol))
        return false;
    for (auto c : node.children)
        if (!tree.node(c).cone->contains(position, tol))
            return false;
    return true;
}

struct Ranked {
    double value;
    std::size_t task;
    std::size_t seq;
    std::vector<std::size_t> choice;
};

bool ranked_before(const Ranked& a, const Ranked& b)
{
    if (a.value != b.value)
        return a.value > b.value;
    if (a.task != b.task)
        return a.task < b.task;
    return a.seq < b.seq;
}

void keep_top(std::vector<Ranked>& top, Ranked entry, std::size_t k)
{
    if (k == 0)
        return;
    if (top.size() == k && !ranked_before(entry, top.back()))
        return;
    auto it = std::upper_bound(top.begin(), top.end(), entry, ranked_before);
    top.insert(it, std::move(entry));
    if (top.size() > k)
        top.pop_back();
}

class OracleSearch {
public:
    OracleSearch(const ScenarioTree& tree, const Vector& endowment, const LeafEvaluator& eval,
                 const std::vector<std::vector<Vector>>& candidates, const OracleOptions& opt, std::size_t task)
        : tree_(tree), x_(endowment), eval_(eval), cand_(candidates), opt_(opt), task_(task),
          pos_(tree.size()), choice_(tree.internal_nodes().size(), 0)
    {
    }

    void run_from_root(std::size_t root_choice)
    {
        const auto& internal = tree_.internal_nodes();
        if (internal.empty()) {
            evaluate();
            return;
        }
        const auto& root = tree_.node(internal[0]);
        Vector p = x_ + cand_[0][root_choice];
        if (!feasible_after(root, tree_, p, opt_.tol))
            return;
        pos_[root.id] = std::move(p);
        choice_[0] = root_choice;
        recurse(1);
    }

    bool found = false;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> best_choice;
    std::size_t evaluations = 0;
    std::vector<Ranked> top;

private:
    void recurse(std::size_t k)
    {
        const auto& internal = tree_.internal_nodes();
        if (k == internal.size()) {
            evaluate();
            return;
        }
        const auto& node = tree_.node(internal[k]);
        const Vector& before = node.parent == kNoParent ? x_ : pos_[node.parent];
        for (std::size_t ci = 0; ci < cand_[k].size(); ++ci) {
            Vector p = before + cand_[k][ci];
            if (!feasible_after(node, tree_, p, opt_.tol))
                continue;
            pos_[node.id] = std::move(p);
            choice_[k] = ci;
            recurse(k + 1);
        }
    }

    void evaluate()
    {
        double v = eval_.value([this](const TreeNode& leaf) -> const Vector& {
            return leaf.parent == kNoParent ? x_ : pos_[leaf.parent];
        });
        ++evaluations;
        if (!found || v > best) {
            found = true;
            best = v;
            best_choice = choice_;
        }
        keep_top(top, Ranked{v, task_, evaluations, choice_}, opt_.top_k);
    }

    const ScenarioTree& tree_;
    const Vector& x_;
    const LeafEvaluator& eval_;
    const std::vector<std::vector<Vector>>& cand_;
    const OracleOptions& opt_;
    std::size_t task_;
    std::vector<Vector> pos_;
    std::vector<std::size_t> choice_;
};

TradeSchedule schedule_from_choice(const ScenarioTree& tree, const Vector& endowment,
                                   const std::vector<std::vector<Vector>>& cand,
                                   const std::vector<std::size_t>& choice)
{
    TradeSchedule s = TradeSchedule::zero(tree, endowment);
    const auto& internal = tree.internal_nodes();
    for (std::size_t k = 0; k < internal.size(); ++k)
        s.trade(internal[k]) = cand[k][choice[k]];
    return s;
}

void check_endowment(const ScenarioTree& tree, const Vector& endowment, double tol)
{
    if (static_cast<std::size_t>(endowment.size()) != tree.d())
        throw InvalidArgument("endowment dimension does not match the tree");
    if (!tree.root().cone->contains(endowment, tol))
        throw InvalidArgument("initial endowment is not solvent at the root");
}

}  // namespace

OracleResult oracle_optimize(const ScenarioTree& tree, const Vector& endowment, const cpt::Preferences& prefs,
                             std::size_t numeraire, const OracleOptions& options)
{
    options.grid.validate();
    check_endowment(tree, endowment, options.tol);
    LeafEvaluator eval(tree, prefs, numeraire);

    const auto& internal = tree.internal_nodes();
    std::vector<std::vector<Vector>> cand;
    double count = 1.0;
    for (auto n : internal) {
        cand.push_back(options.grid.candidates(*tree.node(n).cone, options.tol));
        count *= static_cast<double>(cand.back().size());
    }
    if (count > options.max_evaluations)
        throw CapExceeded("oracle: " + std::to_string(count) + " candidate schedules exceed the cap of " +
                              std::to_string(options.max_evaluations),
                          count);

    const std::size_t tasks = internal.empty() ? 1 : cand[0].size();
    std::vector<OracleSearch> searches;
    searches.reserve(tasks);
    for (std::size_t t = 0; t < tasks; ++t)
        searches.emplace_back(tree, endowment, eval, cand, options, t);
    parallel_for(tasks, options.threads, [&](std::size_t t) { searches[t].run_from_root(t); });

    OracleResult result;
    result.candidate_count = count;
    bool found = false;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> best_choice;
    std::vector<Ranked> top;
    std::size_t iteration = 0;
    for (auto& s : searches) {
        result.evaluations += s.evaluations;
        if (!s.found)
            continue;
        if (!found || s.best > best) {
            found = true;
            best = s.best;
            best_choice = s.best_choice;
        }
        for (auto& r : s.top)
            keep_top(top, std::move(r), options.top_k);
        auto incumbent = schedule_from_choice(tree, endowment, cand, best_choice);
        result.trace.rows.push_back({++iteration, best, total_variation(incumbent, tree), result.evaluations});
    }
    if (!found)
        throw Inadmissible("oracle: no admissible grid schedule exists for this endowment");

    result.schedule = schedule_from_choice(tree, endowment, cand, best_choice);
    auto e = objective_value(result.schedule, tree, prefs, numeraire, {options.tol, false});
    result.value = e.value;
    result.law = std::move(e.law);
    for (const auto& r : top)
        result.top.push_back({r.value, schedule_from_choice(tree, endowment, cand, r.choice)});
    return result;
}

// ---------------------------------------------------------------------------
// Policy family

PolicyFamily::PolicyFamily(PolicyKind kind, const ScenarioTree& tree, TradeGrid grid, double tol)
    : kind_(kind), tree_(&tree), grid_(grid), tol_(tol)
{
    grid_.validate();
    for (auto n : tree.internal_nodes())
        candidates_.push_back(grid_.candidates(*tree.node(n).cone, tol));
    features_ = 2 + tree.m() + tree.d();
}

std::size_t PolicyFamily::parameter_count() const
{
    return kind_ == PolicyKind::tabular ? tree_->internal_nodes().size() * tree_->d() : tree_->d() * features_;
}

Vector PolicyFamily::raw_trade(const Vector& theta, std::size_t internal_index, const TreeNode& node,
                               const Vector& position) const
{
    const auto d = static_cast<Eigen::Index>(tree_->d());
    if (kind_ == PolicyKind::tabular)
        return theta.segment(static_cast<Eigen::Index>(internal_index) * d, d);

    Vector phi(static_cast<Eigen::Index>(features_));
    phi[0] = 1.0;
    phi[1] = node.time;
    phi.segment(2, static_cast<Eigen::Index>(tree_->m())) = node.y;
    phi.tail(d) = position;
    const auto f = static_cast<Eigen::Index>(features_);
    Vector out(d);
    for (Eigen::Index i = 0; i < d; ++i)
        out[i] = theta.segment(i * f, f).dot(phi);
    return out;
}

std::optional<TradeSchedule> PolicyFamily::realize(const Vector& theta, const Vector& endowment) const
{
    if (static_cast<std::size_t>(theta.size()) != parameter_count())
        throw InvalidArgument("policy: parameter vector has the wrong length");
    const auto& tree = *tree_;
    TradeSchedule sched = TradeSchedule::zero(tree, endowment);
    std::vector<Vector> pos(tree.size());
    const auto& internal = tree.internal_nodes();
    for (std::size_t k = 0; k < internal.size(); ++k) {
        const auto& node = tree.node(internal[k]);
        const Vector& before = node.parent == kNoParent ? endowment : pos[node.parent];
        Vector target = raw_trade(theta, k, node, before);

        std::size_t pick = candidates_[k].size();
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t ci = 0; ci < candidates_[k].size(); ++ci) {
            const Vector& t = candidates_[k][ci];
            double dist = (t - target).squaredNorm();
            if (!(dist < best))
                continue;
            if (!feasible_after(node, tree, before + t, tol_))
                continue;
            best = dist;
            pick = ci;
        }
        if (pick == candidates_[k].size())
            return std::nullopt;
        sched.trade(node.id) = candidates_[k][pick];
        pos[node.id] = before + candidates_[k][pick];
    }
    return sched;
}

// ---------------------------------------------------------------------------
// Cross-entropy method

CemResult cem_optimize(const PolicyFamily& policy, const ScenarioTree& tree, const Vector& endowment,
                       const cpt::Preferences& prefs, std::size_t numeraire, const CemOptions& options)
{
    if (!(options.elite_fraction > 0.0 && options.elite_fraction < 1.0))
        throw InvalidArgument("cem: elite fraction must lie in (0, 1)");
    if (options.population == 0)
        throw InvalidArgument("cem: population must be positive");
    if (!(options.initial_stddev > 0.0) || !(options.variance_floor > 0.0))
        throw InvalidArgument("cem: standard deviations must be > 0");
    check_endowment(tree, endowment, kDefaultTol);
    LeafEvaluator eval(tree, prefs, numeraire);

    const auto dim = static_cast<Eigen::Index>(policy.parameter_count());
    auto score = [&](const TradeSchedule& s) {
        auto pos = s.positions(tree);
        return eval.value([&](const TreeNode& leaf) -> const Vector& { return pos[leaf.id]; });
    };

    CemResult result;
    bool have = false;
    {
        Vector theta0 = Vector::Zero(dim);
        if (auto s = policy.realize(theta0, endowment)) {
            have = true;
            result.theta = theta0;
            result.schedule = *s;
            result.value = score(*s);
            result.trace.rows.push_back({0, result.value, total_variation(*s, tree), 0});
        }
    }

    std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                      0x6365u};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);

    Vector mean = Vector::Zero(dim);
    Vector stddev = Vector::Constant(dim, options.initial_stddev);
    const double floor_sd = std::sqrt(options.variance_floor);
    const auto n_elite = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(options.elite_fraction * static_cast<double>(options.population))));

    std::size_t iteration = 0;
    while (result.evaluations < options.budget) {
        const std::size_t n = std::min(options.population, options.budget - result.evaluations);
        std::vector<Vector> thetas(n);
        for (auto& th : thetas) {
            th.resize(dim);
            for (Eigen::Index i = 0; i < dim; ++i)
                th[i] = mean[i] + stddev[i] * normal(rng);
        }
        std::vector<double> values(n, -std::numeric_limits<double>::infinity());
        std::vector<std::optional<TradeSchedule>> scheds(n);
        parallel_for(n, options.threads, [&](std::size_t i) {
            scheds[i] = policy.realize(thetas[i], endowment);
            if (scheds[i])
                values[i] = score(*scheds[i]);
        });
        result.evaluations += n;
        ++iteration;

        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < n; ++i)
            if (scheds[i])
                order.push_back(i);
        if (order.empty())
            throw Inadmissible("cem: all " + std::to_string(n) + " candidates of iteration " +
                               std::to_string(iteration) + " are inadmissible after projection");
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] > values[b]; });
        order.resize(std::min(order.size(), n_elite));

        const std::size_t lead = order.front();
        if (!have || values[lead] > result.value) {
            have = true;
            result.value = values[lead];
            result.theta = thetas[lead];
            result.schedule = *scheds[lead];
        }

        Vector m = Vector::Zero(dim);
        for (auto i : order)
            m += thetas[i];
        m /= static_cast<double>(order.size());
        Vector var = Vector::Zero(dim);
        for (auto i : order)
            var += (thetas[i] - m).cwiseAbs2();
        var /= static_cast<double>(order.size());
        mean = m;
        stddev = var.cwiseSqrt().cwiseMax(floor_sd);

        result.trace.rows.push_back(
            {iteration, result.value, total_variation(result.schedule, tree), result.evaluations});
    }
    if (!have)
        throw Inadmissible("cem: no admissible schedule (the no-trade policy is infeasible and budget is 0)");

    auto e = objective_value(result.schedule, tree, prefs, numeraire);
    result.value = e.value;
    result.law = std::move(e.law);
    return result;
}

// ---------------------------------------------------------------------------
// Mixtures

namespace {

// Count vectors summing to `total`, first component descending.
void for_each_composition(std::size_t parts, std::size_t total, std::vector<std::size_t>& cur, std::size_t k,
                          const std::function<void(const std::vector<std::size_t>&)>& fn)
{
    if (k + 1 == parts) {
        cur[k] = total;
        fn(cur);
        return;
    }
    for (std::size_t c = total + 1; c-- > 0;) {
        cur[k] = c;
        for_each_composition(parts, total - c, cur, k + 1, fn);
    }
}

}  // namespace

MixtureResult mixture_optimize(const std::vector<TradeSchedule>& candidates, const ScenarioTree& tree,
                               const cpt::Preferences& prefs, std::size_t numeraire, std::size_t resolution,
                               double tol)
{
    if (candidates.empty())
        throw InvalidArgument("mixture: no candidates");
    if (candidates.size() > kMaxMixtureCandidates)
        throw InvalidArgument("mixture: at most " + std::to_string(kMaxMixtureCandidates) + " candidates");
    if (resolution == 0)
        throw InvalidArgument("mixture: resolution must be positive");

    std::vector<DiscreteDistribution> laws;
    MixtureResult result;
    result.best_single_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!is_admissible(candidates[i], tree, tol))
            throw Inadmissible("mixture: candidate " + std::to_string(i + 1) + " is not admissible");
        laws.push_back(terminal_law(candidates[i], tree, numeraire));
        result.best_single_value = std::max(result.best_single_value, prefs.evaluate(laws.back()));
    }

    bool have = false;
    std::vector<std::size_t> counts(candidates.size());
    std::vector<double> w(candidates.size());
    for_each_composition(candidates.size(), resolution, counts, 0, [&](const std::vector<std::size_t>& c) {
        for (std::size_t i = 0; i < c.size(); ++i)
            w[i] = static_cast<double>(c[i]) / static_cast<double>(resolution);
        auto law = DiscreteDistribution::mixture(laws, w);
        double v = prefs.evaluate(law);
        ++result.evaluations;
        if (!have || v > result.value) {
            have = true;
            result.value = v;
            result.weights = w;
            result.law = std::move(law);
        }
    });

    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (result.weights[i] > 0.0) {
            result.strategy.weights.push_back(result.weights[i]);
            result.strategy.components.push_back(candidates[i]);
        }
    }
    return result;
}

RandomizationProbe probe_randomization(const ScenarioTree& tree, const Vector& endowment,
                                       const cpt::Preferences& prefs, std::size_t numeraire, OracleOptions oracle,
                                       std::size_t resolution, double margin)
{
    oracle.top_k = std::clamp<std::size_t>(oracle.top_k, 2, kMaxMixtureCandidates);
    auto best = oracle_optimize(tree, endowment, prefs, numeraire, oracle);
    std::vector<TradeSchedule> cands;
    for (const auto& r : best.top)
        cands.push_back(r.schedule);

    RandomizationProbe probe;
    probe.best_deterministic = best.value;
    probe.mixture = mixture_optimize(cands, tree, prefs, numeraire, resolution, oracle.tol);
    probe.best_mixture = probe.mixture.value;
    probe.strict_improvement = probe.best_mixture > probe.best_deterministic + margin;
    return probe;
}

}  // namespace conecpt
