// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "conecpt/cone.hpp"
#include "conecpt/cpt.hpp"
#include "conecpt/market.hpp"
#include "conecpt/optimizer.hpp"
#include "conecpt/strategy.hpp"
#include "quadrature.hpp"
#include "support.hpp"

using namespace conecpt;
namespace ts = testing_support;

namespace {

constexpr double kTimeLimit = 60.0;

struct Outcome {
    bool pass = true;
    std::ostringstream note;

    void require(bool ok, const std::string& why)
    {
        if (!ok && pass)
            note << "first failure: " << why << "; ";
        pass = pass && ok;
    }
};

Outcome cone_duality()
{
    Outcome o;
    std::mt19937_64 rng(101);
    std::size_t disagreements = 0, members = 0;
    for (int c = 0; c < 200; ++c) {
        const std::size_t d = 2 + c % 3;
        auto cone = SolvencyCone::from_generators(ts::random_generators(rng, d));
        for (int k = 0; k < 100; ++k) {
            Vector v = ts::random_vector(rng, static_cast<Eigen::Index>(d));
            bool dual = cone.contains(v, 1e-9);
            members += dual;
            if (dual != cone.contains_lp(v, 1e-9))
                ++disagreements;
        }
    }
    o.require(disagreements == 0, std::to_string(disagreements) + " disagreements");
    o.note << "20000 vectors, " << members << " members, " << disagreements << " disagreements";
    return o;
}

Outcome kabanov_regression()
{
    Outcome o;
    auto cone = ts::kabanov(0.1);
    o.require(ts::same_rays(cone.dual_generators(), {ts::vec({1.0, 1.0 / 1.1}), ts::vec({1.0, 1.1})}, 1e-9),
              "dual generators differ");
    o.note << cone.dual_generators().size() << " dual generators";
    return o;
}

Outcome cpt_degeneration()
{
    Outcome o;
    std::mt19937_64 rng(303);
    auto u = cpt::UtilityPair::power({});
    cpt::DistortionPair ids{cpt::Distortion::identity(), cpt::Distortion::identity()};
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        auto law = ts::random_law(rng);
        double expect = 0.0;
        for (std::size_t k = 0; k < law.size(); ++k) {
            double x = law.outcomes()[k];
            expect += law.probabilities()[k] * (x > 0 ? u.gain(x) : (x < 0 ? -u.loss(-x) : 0.0));
        }
        worst = std::max(worst, std::abs(cpt_value(law, u, ids) - expect));
    }
    o.require(worst <= 1e-12, "degeneration error " + std::to_string(worst));

    cpt::DistortionPair tk{cpt::Distortion::tversky_kahneman(0.61), cpt::Distortion::tversky_kahneman(0.69)};
    double worst_q = 0.0;
    for (int i = 0; i < 100; ++i) {
        auto law = ts::random_law(rng, 6);
        double qp = ts::choquet_by_quadrature(law, [&](double x) { return u.gain(x); }, tk.plus, true);
        double qm = ts::choquet_by_quadrature(law, [&](double x) { return u.loss(x); }, tk.minus, false);
        worst_q = std::max({worst_q, std::abs(v_plus(law, u, tk) - qp), std::abs(v_minus(law, u, tk) - qm)});
    }
    o.require(worst_q <= 1e-8, "quadrature error " + std::to_string(worst_q));
    o.note << "max degeneration error " << worst << ", max quadrature error " << worst_q;
    return o;
}

Outcome hand_cpt()
{
    Outcome o;
    ts::QuietWarnings quiet;
    DiscreteDistribution coin{{-1.0, 1.0}, {0.5, 0.5}};
    double v = cpt_value(coin, cpt::UtilityPair::identity(), {cpt::Distortion::power(2.0), cpt::Distortion::identity()});
    o.require(std::abs(v + 0.25) <= 1e-12, "V = " + std::to_string(v));
    o.note << "V = " << v;
    return o;
}

Outcome lemma_dot()
{
    Outcome o;
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> lam(0.0, 0.2), move(0.0, 0.3), coin(0.0, 1.0);
    std::size_t rows = 0, disagreements = 0, passing = 0;
    for (int inst = 0; inst < 500; ++inst) {
        const std::size_t d = 2 + inst % 2;
        // one driver per risky asset, up/down moves drawn per asset
        const auto m = static_cast<Eigen::Index>(d - 1);
        Vector up(m), down(m);
        for (Eigen::Index j = 0; j < m; ++j) {
            up[j] = move(rng);
            down[j] = -move(rng);
        }
        DrivingProcessSpec spec;
        spec.m = d - 1;
        spec.grid = inst % 2 ? std::vector<double>{0.0, 0.5, 1.0} : std::vector<double>{0.0, 1.0};
        spec.increments = FiniteIncrements{{{{up, 0.5}, {down, 0.5}}}};
        auto tree = ScenarioTree::build(spec, ts::proportional_map(lam(rng), d), ReferenceMap::zero(d));
        auto s = TradeSchedule::zero(tree, Vector::Unit(static_cast<Eigen::Index>(d), 0));
        for (const auto& node : tree.nodes()) {
            Vector t = Vector::Zero(static_cast<Eigen::Index>(d));
            double kind = coin(rng);
            if (kind < 0.4) {
                for (const auto& g : node.cone->primal_generators())
                    t -= coin(rng) * g;
            }
            else if (kind < 0.6) {
                const auto& gens = node.cone->primal_generators();
                t = -gens[static_cast<std::size_t>(coin(rng) * gens.size()) % gens.size()];
            }
            else {
                t = ts::random_vector(rng, static_cast<Eigen::Index>(d));
            }
            s.trade(node.id) = t;
        }
        auto p = self_financing_check_primal(s, tree, 1e-9);
        auto q = self_financing_check_dual(s, tree, 1e-9);
        for (std::size_t i = 0; i < p.rows.size(); ++i) {
            ++rows;
            passing += q.rows[i].pass;
            disagreements += p.rows[i].node != q.rows[i].node || p.rows[i].pass != q.rows[i].pass;
        }
    }
    o.require(disagreements == 0, std::to_string(disagreements) + " disagreements");
    o.note << rows << " node checks (" << passing << " self-financing), " << disagreements << " disagreements";
    return o;
}

Outcome efficient_friction()
{
    Outcome o;
    double smallest = 1e300;
    for (std::size_t d : {2, 3, 4}) {
        for (double lambda : {1e-4, 0.01, 0.1, 0.5}) {
            auto cert = ts::kabanov(lambda, d).interior();
            o.require(cert.interior && cert.margin > 0.0, "no interior at lambda " + std::to_string(lambda));
            smallest = std::min(smallest, cert.margin);
        }
    }
    auto flat = ts::kabanov(0.0, 2).interior();
    o.require(!flat.interior, "lambda = 0 reported an interior");
    o.note << "smallest positive margin " << smallest << ", lambda=0 margin " << flat.margin;
    return o;
}

Outcome cps_consistency()
{
    Outcome o;
    auto tree = ts::binary_tree(0.2, -0.1, 1, 0.05);
    auto r = find_cps(tree);
    o.require(r.feasible && r.cps.margin > 0.0, "no CPS on the lambda = 0.05 instance");
    if (!r.feasible)
        return o;
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> amount(0.0, 1.0);
    int checked = 0;
    double worst = -1e300;
    for (int trial = 0; trial < 10000 && checked < 100; ++trial) {
        auto s = TradeSchedule::zero(tree, ts::vec({1.0, 1.0}));
        for (auto n : tree.nodes()) {
            Vector t = Vector::Zero(2);
            for (const auto& g : n.cone->primal_generators())
                t -= amount(rng) * g;
            s.trade(n.id) = t;
        }
        if (!is_admissible(s, tree))
            continue;
        ++checked;
        auto pos = s.positions(tree);
        double acc = 0.0;
        for (auto l : tree.leaves())
            acc += tree.node(l).probability * r.cps.z[l].dot(pos[l] - s.endowment());
        worst = std::max(worst, acc);
    }
    o.require(checked == 100, "only " + std::to_string(checked) + " admissible schedules drawn");
    o.require(worst <= 1e-9, "E[Z.X1] = " + std::to_string(worst));
    auto drift = find_cps(ts::binary_tree(0.2, 0.1, 1, 0.001));
    o.require(!drift.feasible, "drifting instance reported feasible");
    o.note << "margin " << r.cps.margin << ", max E[Z.X1] " << worst << " over " << checked
           << " schedules, drifting: " << (drift.feasible ? "feasible" : "infeasible");
    return o;
}

OracleOptions grid(double step)
{
    OracleOptions opt;
    opt.grid = {step, 1.0};
    return opt;
}

Outcome constructive_existence()
{
    Outcome o;
    auto tree = ts::reference_instance();
    Vector x = ts::reference_endowment();
    auto prefs = ts::default_cpt();
    auto a = oracle_optimize(tree, x, prefs, 0, grid(0.5));
    auto b = oracle_optimize(tree, x, prefs, 0, grid(0.5));
    o.require(is_admissible(a.schedule, tree), "maximizer inadmissible");
    o.require(a.value == b.value && a.schedule == b.schedule, "runs differ");
    auto rev = oracle_optimize(ts::reference_instance(true), x, prefs, 0, grid(0.5));
    o.require(std::abs(rev.value - a.value) <= 1e-12, "leaf reordering changed the value");
    auto fine = oracle_optimize(tree, x, prefs, 0, grid(0.25));
    o.require(fine.value >= a.value, "refinement lowered the value");
    o.note << "V(0.5) = " << a.value << " in " << a.evaluations << " evaluations, V(0.25) = " << fine.value;
    return o;
}

Outcome heuristic_quality()
{
    Outcome o;
    auto tree = ts::reference_instance();
    Vector x = ts::reference_endowment();
    auto prefs = ts::default_cpt();
    auto oracle = oracle_optimize(tree, x, prefs, 0, grid(0.5));
    PolicyFamily policy(PolicyKind::tabular, tree, {0.5, 1.0});
    CemOptions opt;
    opt.budget = 10000;
    opt.seed = 2024;
    auto r = cem_optimize(policy, tree, x, prefs, 0, opt);
    o.require(r.value >= 0.95 * oracle.value, "below 95% of the oracle");
    o.require(r.value <= oracle.value + 1e-9, "above the oracle");
    o.note << "CEM " << r.value << " vs oracle " << oracle.value << " (" << r.evaluations << " evaluations)";
    return o;
}

Outcome mixture_soundness()
{
    Outcome o;
    auto tree = ts::reference_instance();
    Vector x = ts::reference_endowment();
    auto prefs = ts::default_cpt();
    auto opt = grid(0.5);
    opt.top_k = kMaxMixtureCandidates;
    auto oracle = oracle_optimize(tree, x, prefs, 0, opt);

    std::vector<std::vector<TradeSchedule>> sets;
    for (std::size_t k = 1; k <= oracle.top.size(); ++k) {
        std::vector<TradeSchedule> s;
        for (std::size_t i = 0; i < k; ++i)
            s.push_back(oracle.top[i].schedule);
        sets.push_back(s);
    }
    // random admissible sets from the policy family
    std::mt19937_64 rng(1010);
    PolicyFamily policy(PolicyKind::tabular, tree, {0.5, 1.0});
    for (int i = 0; i < 30; ++i) {
        std::vector<TradeSchedule> s;
        while (s.size() < static_cast<std::size_t>(2 + i % 4)) {
            auto theta = ts::random_vector(rng, static_cast<Eigen::Index>(policy.parameter_count()));
            if (auto r = policy.realize(theta, x))
                s.push_back(*r);
        }
        sets.push_back(s);
    }

    double worst_gap = 1e300;
    bool laws_exact = true;
    for (const auto& s : sets) {
        auto r = mixture_optimize(s, tree, prefs, 0, 6);
        worst_gap = std::min(worst_gap, r.value - r.best_single_value);
        std::vector<DiscreteDistribution> laws;
        for (const auto& c : s)
            laws.push_back(terminal_law(c, tree, 0));
        auto expect = DiscreteDistribution::mixture(laws, r.weights);
        auto got = terminal_law(RandomizedStrategy{r.weights, s}, tree, 0);
        laws_exact = laws_exact && got.outcomes() == expect.outcomes() && got.probabilities() == expect.probabilities();
    }
    o.require(worst_gap >= -1e-12, "mixture below best single by " + std::to_string(-worst_gap));
    o.require(laws_exact, "mixture law differs from the convex combination");
    o.note << sets.size() << " candidate sets, min(V_mix - V_best) = " << worst_gap;
    return o;
}

Outcome null_strategy()
{
    Outcome o;
    auto tree = ScenarioTree::build(ts::scalar_process({{0.0, 1.0}}, 2), ts::proportional_map(0.1),
                                    ReferenceMap::zero(2));
    auto r = oracle_optimize(tree, ts::vec({0.0, 0.0}), ts::default_cpt(), 0, grid(0.5));
    o.require(r.schedule == TradeSchedule::zero(tree, ts::vec({0.0, 0.0})), "nonzero schedule returned");
    o.require(r.value == 0.0, "V = " + std::to_string(r.value));
    o.note << "V = " << r.value << ", TV = " << total_variation(r.schedule, tree);
    return o;
}

}  // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"cone duality", cone_duality},
        {"Kabanov dual generators", kabanov_regression},
        {"CPT degeneration and quadrature", cpt_degeneration},
        {"hand-computed CPT value", hand_cpt},
        {"primal/dual self-financing agreement", lemma_dot},
        {"efficient-friction detection", efficient_friction},
        {"consistent price systems", cps_consistency},
        {"oracle on the reference instance", constructive_existence},
        {"CEM against the oracle", heuristic_quality},
        {"mixture soundness", mixture_soundness},
        {"null strategy in a pointed market", null_strategy},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.note << "exception: " << e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > kTimeLimit) {
            o.pass = false;
            o.note << "; exceeded " << kTimeLimit << " s";
        }
        failures += !o.pass;
        std::printf("%-4s %2zu  %-40s %.2fs  %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs,
                    o.note.str().c_str());
    }
    std::fflush(stdout);
    return failures == 0 ? 0 : 1;
}
