#include "cli.hpp"

#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "conecpt/config.hpp"
#include "conecpt/error.hpp"
#include "conecpt/io.hpp"
#include "conecpt/optimizer.hpp"
#include "conecpt/strategy.hpp"

namespace conecpt::cli {

using Json = nlohmann::json;

namespace {

struct VerifyOutcome {
    bool passed = true;
    std::string csv;
    std::optional<ConsistentPriceSystem> cps;
    std::string cps_detail;
};

// Efficient friction and orthant containment at every node, then a CPS
// search when the tree comes from finite-support increments.
VerifyOutcome verify(const Model& model, bool with_cps, std::ostream& out)
{
    VerifyOutcome v;
    io::CsvWriter csv({"check", "node", "margin", "result"});
    std::size_t friction_failures = 0, orthant_failures = 0;
    const auto d = static_cast<Eigen::Index>(model.tree.d());
    for (const auto& node : model.tree.nodes()) {
        auto cert = node.cone->interior(model.tol);
        csv.row().cell(std::string_view("efficient_friction")).cell(node.id).cell(cert.margin).cell(cert.interior);
        friction_failures += !cert.interior;

        double margin = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < d; ++i)
            margin = std::min(margin, node.cone->membership_margin(Vector::Unit(d, i)));
        bool ok = margin >= -model.tol;
        csv.row().cell(std::string_view("positive_orthant")).cell(node.id).cell(margin).cell(ok);
        orthant_failures += !ok;
    }
    v.passed = friction_failures == 0 && orthant_failures == 0;
    out << "efficient friction: " << (friction_failures ? "FAIL" : "pass") << " (" << friction_failures
        << " of " << model.tree.size() << " nodes fail)\n";
    out << "positive orthant:   " << (orthant_failures ? "FAIL" : "pass") << " (" << orthant_failures << " of "
        << model.tree.size() << " nodes fail)\n";

    if (with_cps) {
        auto res = find_cps(model.tree, model.tol);
        csv.row().cell(std::string_view("consistent_price_system")).cell(std::string_view("all"))
            .cell(res.feasible ? res.cps.margin : 0.0).cell(res.feasible);
        v.passed = v.passed && res.feasible;
        v.cps_detail = res.detail;
        if (res.feasible)
            v.cps = res.cps;
        out << "consistent prices:  " << (res.feasible ? "pass" : "FAIL") << " (" << res.detail << ")\n";
    } else {
        out << "consistent prices:  skipped (continuous increments)\n";
    }
    v.csv = csv.str();
    return v;
}

void write(const Options& o, const char* name, const std::string& text)
{
    std::filesystem::create_directories(o.out);
    io::write_file_atomic(o.out / name, text);
}

void write_json(const Options& o, const char* name, const Json& doc)
{
    write(o, name, doc.dump(2) + "\n");
}

OracleOptions oracle_options(const ExperimentConfig& c, const Model& m)
{
    OracleOptions opts;
    opts.grid = c.optimizer.grid;
    opts.max_evaluations = c.optimizer.max_evaluations;
    opts.tol = m.tol;
    opts.threads = c.optimizer.threads;
    return opts;
}

Json base_summary(const char* command, const ExperimentConfig& c, const Model& m)
{
    return Json{{"schema_version", io::kSchemaVersion},
                {"command", command},
                {"seed", c.seed},
                {"d", m.tree.d()},
                {"nodes", m.tree.size()},
                {"leaves", m.tree.leaves().size()},
                {"numeraire", m.numeraire + 1},
                {"preferences", m.preferences.description()}};
}

void write_result(const Options& o, Json summary, const RandomizedStrategy& strategy, const DiscreteDistribution& law,
                  const OptimizationTrace* trace)
{
    write_json(o, "strategy.json", io::strategy_to_json(strategy));
    write(o, "terminal_law.csv", io::law_csv(law));
    if (trace) {
        write(o, "trace.csv", io::trace_csv(*trace));
        auto diag = run_diagnostics(*trace);
        summary["trace_monotone"] = diag.monotone;
    }
    write_json(o, "summary.json", summary);
}

int cmd_verify(const Options& o, const Model& m, std::ostream& out)
{
    auto v = verify(m, true, out);
    write(o, "verify.csv", v.csv);
    if (v.cps)
        write_json(o, "cps.json", io::cps_to_json(*v.cps));
    return v.passed ? kSuccess : kFailure;
}

int cmd_simulate(const Options& o, const ExperimentConfig& c, std::ostream& out)
{
    std::size_t n = o.n_paths.value_or(c.optimizer.n_paths);
    if (n == 0)
        throw ConfigError("--n-paths must be >= 1");
    auto batch = sample_paths(c.market.process, n, c.optimizer.threads);
    write(o, "paths.csv", io::paths_csv(batch, c.market.process.grid));
    out << "wrote " << n << " paths of " << batch.points << " points\n";
    return kSuccess;
}

int cmd_evaluate(const Options& o, const ExperimentConfig& c, const Model& m, std::ostream& out)
{
    if (o.strategy.empty())
        throw ConfigError("evaluate needs --strategy PATH");
    Json doc;
    try {
        doc = Json::parse(io::read_file(o.strategy));
    } catch (const Json::exception& e) {
        throw ConfigError(o.strategy.string() + ": " + e.what());
    }
    RandomizedStrategy strategy = [&] {
        try {
            return io::strategy_from_json(doc, m.tree);
        } catch (const Json::exception& e) {
            throw ConfigError(o.strategy.string() + ": " + e.what());
        } catch (const InvalidArgument& e) {
            throw ConfigError(o.strategy.string() + ": " + e.what());
        }
    }();
    if (strategy.components.front().endowment() != m.x)
        throw ConfigError("strategy endowment differs from problem.x");

    std::vector<CheckReport> reports;
    for (const auto& comp : strategy.components) {
        reports.push_back(self_financing_check_primal(comp, m.tree, m.tol));
        reports.push_back(self_financing_check_dual(comp, m.tree, m.tol));
        reports.push_back(solvency_check(comp, m.tree, m.tol));
    }
    std::vector<const CheckReport*> ptrs;
    for (const auto& r : reports)
        ptrs.push_back(&r);
    write(o, "checks.csv", io::checks_csv(ptrs));

    auto eval = objective_value(strategy, m.tree, m.preferences, m.numeraire, {m.tol, false});
    Json summary = base_summary("evaluate", c, m);
    summary["value"] = eval.value;
    summary["components"] = strategy.components.size();
    double tv = 0.0;
    for (std::size_t i = 0; i < strategy.components.size(); ++i)
        tv += strategy.weights[i] * total_variation(strategy.components[i], m.tree);
    summary["total_variation"] = tv;
    write(o, "terminal_law.csv", io::law_csv(eval.law));
    write_json(o, "summary.json", summary);
    out << "V = " << io::format_number(eval.value) << "\n";
    return kSuccess;
}

int cmd_oracle(const Options& o, const ExperimentConfig& c, const Model& m, std::ostream& out)
{
    auto res = oracle_optimize(m.tree, m.x, m.preferences, m.numeraire, oracle_options(c, m));
    Json summary = base_summary("oracle", c, m);
    summary["mode"] = "oracle";
    summary["value"] = res.value;
    summary["evaluations"] = res.evaluations;
    summary["candidate_count"] = res.candidate_count;
    summary["total_variation"] = total_variation(res.schedule, m.tree);
    summary["delta"] = c.optimizer.grid.step;
    summary["bound"] = c.optimizer.grid.bound;
    write_result(o, summary, RandomizedStrategy::pure(res.schedule), res.law, &res.trace);
    out << "oracle V = " << io::format_number(res.value) << " after " << res.evaluations << " evaluations\n";
    return kSuccess;
}

int cmd_optimize(const Options& o, const ExperimentConfig& c, const Model& m, std::ostream& out)
{
    const auto& oc = c.optimizer;
    switch (oc.mode) {
    case OptimizerMode::oracle:
        return cmd_oracle(o, c, m, out);
    case OptimizerMode::cem: {
        PolicyFamily policy(oc.policy, m.tree, oc.grid, m.tol);
        CemOptions opts;
        opts.budget = oc.budget;
        opts.population = oc.population;
        opts.elite_fraction = oc.elite_fraction;
        opts.initial_stddev = oc.init_std;
        opts.seed = c.seed;
        opts.threads = oc.threads;
        auto res = cem_optimize(policy, m.tree, m.x, m.preferences, m.numeraire, opts);
        Json summary = base_summary("optimize", c, m);
        summary["mode"] = "cem";
        summary["policy"] = oc.policy == PolicyKind::tabular ? "tabular" : "linear";
        summary["value"] = res.value;
        summary["evaluations"] = res.evaluations;
        summary["total_variation"] = total_variation(res.schedule, m.tree);
        write_result(o, summary, RandomizedStrategy::pure(res.schedule), res.law, &res.trace);
        out << "cem V = " << io::format_number(res.value) << " after " << res.evaluations << " evaluations\n";
        return kSuccess;
    }
    case OptimizerMode::mixture: {
        auto opts = oracle_options(c, m);
        opts.top_k = oc.mixture_candidates;
        auto oracle = oracle_optimize(m.tree, m.x, m.preferences, m.numeraire, opts);
        std::vector<TradeSchedule> candidates;
        for (const auto& r : oracle.top)
            candidates.push_back(r.schedule);
        auto res = mixture_optimize(candidates, m.tree, m.preferences, m.numeraire, oc.mixture_resolution, m.tol);
        Json summary = base_summary("optimize", c, m);
        summary["mode"] = "mixture";
        summary["value"] = res.value;
        summary["best_single_value"] = res.best_single_value;
        summary["weights"] = res.weights;
        summary["evaluations"] = oracle.evaluations + res.evaluations;
        write_result(o, summary, res.strategy, res.law, &oracle.trace);
        out << "mixture V = " << io::format_number(res.value) << " (best single "
            << io::format_number(res.best_single_value) << ")\n";
        return kSuccess;
    }
    }
    return kUsage;
}

int cmd_search(const Options& o, const ExperimentConfig& c, std::ostream& out)
{
    if (!c.preferences.contains("cpt"))
        throw ConfigError("search-randomization-benefit needs CPT preferences");
    std::vector<double> lambdas = c.search.lambda;
    if (lambdas.empty())
        lambdas.push_back(c.market.cone.lambda);

    io::CsvWriter csv({"lambda", "gamma_plus", "gamma_minus", "best_deterministic", "best_mixture", "strict"});
    Json found = nullptr;
    std::optional<RandomizedStrategy> witness;
    std::size_t instances = 0;
    for (double lambda : lambdas) {
        ExperimentConfig cfg = c;
        cfg.market.cone.lambda = lambda;
        for (double gp : c.search.gamma_plus) {
            for (double gm : c.search.gamma_minus) {
                cfg.preferences["cpt"]["gamma_plus"] = gp;
                cfg.preferences["cpt"]["gamma_minus"] = gm;
                Model m = build_model(cfg);
                auto opts = oracle_options(cfg, m);
                opts.top_k = cfg.optimizer.mixture_candidates;
                auto probe = probe_randomization(m.tree, m.x, m.preferences, m.numeraire, opts,
                                                 cfg.optimizer.mixture_resolution);
                csv.row().cell(lambda).cell(gp).cell(gm).cell(probe.best_deterministic).cell(probe.best_mixture)
                    .cell(std::string_view(probe.strict_improvement ? "yes" : "no"));
                ++instances;
                if (probe.strict_improvement && found.is_null()) {
                    found = Json{{"lambda", lambda},
                                 {"gamma_plus", gp},
                                 {"gamma_minus", gm},
                                 {"best_deterministic", probe.best_deterministic},
                                 {"best_mixture", probe.best_mixture},
                                 {"weights", probe.mixture.weights}};
                    witness = probe.mixture.strategy;
                }
            }
        }
    }
    write(o, "search.csv", csv.str());
    Json summary{{"schema_version", io::kSchemaVersion},
                 {"command", "search-randomization-benefit"},
                 {"instances", instances},
                 {"strict_improvement_found", !found.is_null()},
                 {"instance", found}};
    write_json(o, "summary.json", summary);
    if (witness)
        write_json(o, "strategy.json", io::strategy_to_json(*witness));
    if (found.is_null())
        out << "no strict improvement from randomization on " << instances << " instances\n";
    else
        out << "randomization strictly improves: V " << io::format_number(found["best_deterministic"].get<double>())
            << " -> " << io::format_number(found["best_mixture"].get<double>()) << "\n";
    return kSuccess;
}

int dispatch(const Options& o, std::ostream& out, std::ostream& err)
{
    ExperimentConfig c = load_config(o.config);
    if (o.seed)
        set_seed(c, *o.seed);
    if (o.tol) {
        if (!(*o.tol > 0.0))
            throw ConfigError("--tol must be > 0");
        c.problem.tol = *o.tol;
    }

    if (o.command == "search-randomization-benefit")
        return cmd_search(o, c, out);

    const bool finite = c.market.process.finite_support();
    if (o.command == "verify" && !finite)
        throw ConfigError("verify needs finite-support increments");

    if (o.command == "simulate") {
        if (finite && !o.skip_verify) {
            Model m = build_model(c);
            auto v = verify(m, true, out);
            if (!v.passed) {
                err << "assumption check failed; rerun with --skip-verify to override\n";
                return kFailure;
            }
        }
        return cmd_simulate(o, c, out);
    }

    Model m = build_model(c);
    if (o.command == "verify")
        return cmd_verify(o, m, out);

    if (!o.skip_verify) {
        auto v = verify(m, finite, out);
        if (!v.passed) {
            write(o, "verify.csv", v.csv);
            err << "assumption check failed; rerun with --skip-verify to override\n";
            return kFailure;
        }
    }
    if (o.command == "evaluate")
        return cmd_evaluate(o, c, m, out);
    if (o.command == "oracle")
        return cmd_oracle(o, c, m, out);
    if (o.command == "optimize")
        return cmd_optimize(o, c, m, out);
    err << "unknown command '" << o.command << "'\n";
    return kUsage;
}

}  // namespace

int run(const Options& options, std::ostream& out, std::ostream& err)
{
    try {
        return dispatch(options, out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kUsage;
    } catch (const CapExceeded& e) {
        err << "refused: " << e.what() << "\n";
        return kFailure;
    } catch (const Inadmissible& e) {
        err << "inadmissible: " << e.what() << "\n";
        return kFailure;
    } catch (const LpFailure& e) {
        err << "solver failure: " << e.what() << "\n";
        return kFailure;
    } catch (const InvalidArgument& e) {
        err << "invalid input: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Portfolio optimization under proportional transaction costs with prospect-theory preferences",
                 "conecpt"};
    app.require_subcommand(1, 1);

    Options o;
    std::uint64_t seed = 0;
    double tol = 0.0;
    std::size_t n_paths = 0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "experiment config (JSON)")->required();
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--tol", tol, "override the admissibility tolerance");
        sub->add_flag("--skip-verify", o.skip_verify, "do not rerun the assumption checks");
    };
    common(app.add_subcommand("verify", "check efficient friction, orthant containment and consistent prices"));
    auto* sim = app.add_subcommand("simulate", "sample driving-process paths");
    common(sim);
    sim->add_option("--n-paths", n_paths, "number of paths (default: optimizer.n_paths)");
    auto* ev = app.add_subcommand("evaluate", "evaluate a strategy document");
    common(ev);
    ev->add_option("--strategy", o.strategy, "strategy document")->required();
    common(app.add_subcommand("oracle", "exhaustive grid search"));
    common(app.add_subcommand("optimize", "run the optimizer selected in the config"));
    common(app.add_subcommand("search-randomization-benefit", "look for instances where mixing strictly helps"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        std::ostringstream ss;
        app.exit(e, ss, ss);
        err << ss.str();
        return e.get_exit_code() == 0 ? kSuccess : kUsage;
    }

    auto* sub = app.get_subcommands().front();
    o.command = sub->get_name();
    if (sub->count("--seed"))
        o.seed = seed;
    if (sub->count("--tol"))
        o.tol = tol;
    if (sub->get_name() == "simulate" && sub->count("--n-paths"))
        o.n_paths = n_paths;
    return run(o, out, err);
}

}  // namespace conecpt::cli
