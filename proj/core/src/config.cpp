#include "conecpt/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

namespace conecpt {

using Json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& msg)
{
    throw ConfigError(where + ": " + msg);
}

void check_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object())
        fail(where, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!ok.count(key))
            fail(where, "unknown field '" + key + "'");
    }
}

const Json& field(const Json& obj, const std::string& where, const char* key)
{
    if (!obj.contains(key))
        fail(where, std::string("missing field '") + key + "'");
    return obj.at(key);
}

double number(const Json& j, const std::string& where)
{
    if (!j.is_number())
        fail(where, "expected a number");
    double v = j.get<double>();
    if (!std::isfinite(v))
        fail(where, "expected a finite number");
    return v;
}

double number_or(const Json& obj, const std::string& where, const char* key, double fallback)
{
    return obj.contains(key) ? number(obj.at(key), where + "." + key) : fallback;
}

std::size_t count(const Json& j, const std::string& where)
{
    if (!j.is_number_integer() || j.get<long long>() < 0)
        fail(where, "expected a non-negative integer");
    return j.get<std::size_t>();
}

std::size_t count_or(const Json& obj, const std::string& where, const char* key, std::size_t fallback)
{
    return obj.contains(key) ? count(obj.at(key), where + "." + key) : fallback;
}

Vector vec(const Json& j, const std::string& where)
{
    if (!j.is_array())
        fail(where, "expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = number(j[i], where);
    return v;
}

std::vector<double> list(const Json& j, const std::string& where)
{
    Vector v = vec(j, where);
    return {v.data(), v.data() + v.size()};
}

Matrix mat(const Json& j, const std::string& where)
{
    if (!j.is_array() || j.empty())
        fail(where, "expected a non-empty array of rows");
    Vector first = vec(j[0], where);
    Matrix m(static_cast<Eigen::Index>(j.size()), first.size());
    for (std::size_t r = 0; r < j.size(); ++r) {
        Vector row = vec(j[r], where);
        if (row.size() != first.size())
            fail(where, "ragged rows");
        m.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return m;
}

std::vector<SupportPoint> support(const Json& j, const std::string& where)
{
    if (!j.is_array() || j.empty())
        fail(where, "expected a non-empty array of {value, probability}");
    std::vector<SupportPoint> out;
    for (const auto& p : j) {
        check_keys(p, where, {"value", "probability"});
        out.push_back({vec(field(p, where, "value"), where + ".value"),
                       number(field(p, where, "probability"), where + ".probability")});
    }
    return out;
}

IncrementModel increments(const Json& j, const std::string& where)
{
    const auto type = field(j, where, "type").get<std::string>();
    if (type == "finite") {
        check_keys(j, where, {"type", "support", "per_step"});
        FiniteIncrements f;
        if (j.contains("support") == j.contains("per_step"))
            fail(where, "give exactly one of 'support' and 'per_step'");
        if (j.contains("support")) {
            f.per_step.push_back(support(j.at("support"), where + ".support"));
        } else {
            for (const auto& s : j.at("per_step"))
                f.per_step.push_back(support(s, where + ".per_step"));
        }
        return f;
    }
    if (type == "gaussian") {
        check_keys(j, where, {"type", "drift", "volatility"});
        return GaussianIncrements{vec(field(j, where, "drift"), where + ".drift"),
                                  vec(field(j, where, "volatility"), where + ".volatility")};
    }
    if (type == "jump_diffusion") {
        check_keys(j, where, {"type", "drift", "volatility", "jump_intensity", "jump_mean", "jump_stddev"});
        return JumpDiffusionIncrements{vec(field(j, where, "drift"), where + ".drift"),
                                       vec(field(j, where, "volatility"), where + ".volatility"),
                                       number(field(j, where, "jump_intensity"), where + ".jump_intensity"),
                                       vec(field(j, where, "jump_mean"), where + ".jump_mean"),
                                       vec(field(j, where, "jump_stddev"), where + ".jump_stddev")};
    }
    fail(where, "unknown increment type '" + type + "'");
}

PathExpr expr(const Json& j, const std::string& where)
{
    if (j.is_number())
        return PathExpr::constant(number(j, where));
    check_keys(j, where, {"op", "value", "index", "args"});
    const auto op = field(j, where, "op").get<std::string>();
    PathExpr e;
    auto index = [&] {
        std::size_t i = count(field(j, where, "index"), where + ".index");
        if (i == 0)
            fail(where, "Y indices are 1-based");
        return i - 1;
    };
    auto args = [&] {
        const auto& a = field(j, where, "args");
        if (!a.is_array())
            fail(where, "'args' must be an array");
        std::vector<PathExpr> out;
        for (const auto& x : a)
            out.push_back(expr(x, where + ".args"));
        return out;
    };
    if (op == "constant") {
        e = PathExpr::constant(number(field(j, where, "value"), where + ".value"));
    } else if (op == "terminal" || op == "path_max" || op == "path_min") {
        e.kind = op == "terminal" ? PathExpr::Kind::terminal
                                  : (op == "path_max" ? PathExpr::Kind::path_max : PathExpr::Kind::path_min);
        e.index = index();
    } else if (op == "sum" || op == "max" || op == "min") {
        e.kind = op == "sum" ? PathExpr::Kind::sum : (op == "max" ? PathExpr::Kind::max : PathExpr::Kind::min);
        e.args = args();
    } else if (op == "scale") {
        e.kind = PathExpr::Kind::scale;
        e.value = number(field(j, where, "value"), where + ".value");
        e.args = args();
    } else {
        fail(where, "unknown op '" + op + "'");
    }
    return e;
}

ReferenceMap reference(const Json& j, const std::string& where)
{
    const auto type = field(j, where, "type").get<std::string>();
    if (type == "constant") {
        check_keys(j, where, {"type", "value"});
        return ReferenceMap::constant(vec(field(j, where, "value"), where + ".value"));
    }
    if (type == "linear") {
        check_keys(j, where, {"type", "offset", "matrix"});
        return ReferenceMap::linear(vec(field(j, where, "offset"), where + ".offset"),
                                    mat(field(j, where, "matrix"), where + ".matrix"));
    }
    if (type == "componentwise") {
        check_keys(j, where, {"type", "components"});
        const auto& c = field(j, where, "components");
        if (!c.is_array())
            fail(where, "'components' must be an array");
        std::vector<PathExpr> comps;
        for (const auto& x : c)
            comps.push_back(expr(x, where + ".components"));
        return ReferenceMap::componentwise(std::move(comps));
    }
    fail(where, "unknown reference type '" + type + "'");
}

PriceModel price_model(const std::string& s, const std::string& where)
{
    if (s == "constant")
        return PriceModel::constant;
    if (s == "linear")
        return PriceModel::linear;
    if (s == "exponential")
        return PriceModel::exponential;
    fail(where, "unknown price model '" + s + "'");
}

MarketConfig market(const Json& j)
{
    const std::string where = "market";
    check_keys(j, where, {"d", "numeraire", "driving_process", "cone_map", "reference_point", "max_leaves"});
    MarketConfig m;
    m.d = count(field(j, where, "d"), "market.d");
    if (m.d < 1)
        fail(where, "d must be >= 1");
    std::size_t num = count_or(j, where, "numeraire", 1);
    if (num < 1 || num > m.d)
        fail(where, "numeraire must lie in [1, d]");
    m.numeraire = num - 1;
    m.max_leaves = count_or(j, where, "max_leaves", ScenarioTree::kDefaultMaxLeaves);

    const auto& dp = field(j, where, "driving_process");
    const std::string dpw = "market.driving_process";
    check_keys(dp, dpw, {"m", "grid", "increments"});
    m.process.m = count(field(dp, dpw, "m"), dpw + ".m");
    m.process.grid = list(field(dp, dpw, "grid"), dpw + ".grid");
    m.process.increments = increments(field(dp, dpw, "increments"), dpw + ".increments");
    try {
        m.process.validate();
    } catch (const InvalidArgument& e) {
        fail(dpw, e.what());
    }

    const auto& cm = field(j, where, "cone_map");
    const std::string cmw = "market.cone_map";
    check_keys(cm, cmw, {"lambda", "lambda_slope", "price_model", "initial_prices"});
    m.cone.d = m.d;
    m.cone.lambda = number(field(cm, cmw, "lambda"), cmw + ".lambda");
    m.cone.lambda_slope = number_or(cm, cmw, "lambda_slope", 0.0);
    m.cone.price_model = cm.contains("price_model") ? price_model(cm.at("price_model").get<std::string>(), cmw)
                                                    : PriceModel::linear;
    m.cone.initial_prices = cm.contains("initial_prices")
                                ? vec(cm.at("initial_prices"), cmw + ".initial_prices")
                                : Vector::Ones(static_cast<Eigen::Index>(m.d - 1));

    m.reference = j.contains("reference_point") ? reference(j.at("reference_point"), "market.reference_point")
                                                : ReferenceMap::zero(m.d);
    try {
        m.reference.validate(m.d, m.process.m);
    } catch (const InvalidArgument& e) {
        fail("market.reference_point", e.what());
    }
    return m;
}

cpt::Distortion distortion(const Json& j, const std::string& where)
{
    if (j.is_string()) {
        if (j.get<std::string>() == "identity")
            return cpt::Distortion::identity();
        fail(where, "unknown distortion '" + j.get<std::string>() + "'");
    }
    if (j.is_object()) {
        check_keys(j, where, {"power"});
        return cpt::Distortion::power(number(field(j, where, "power"), where + ".power"));
    }
    return cpt::Distortion::tversky_kahneman(number(j, where));
}

OptimizerConfig optimizer(const Json& j)
{
    const std::string where = "optimizer";
    check_keys(j, where,
               {"mode", "delta", "bound", "max_evaluations", "budget", "population", "elite_fraction", "init_std",
                "policy", "mixture_resolution", "mixture_candidates", "n_paths", "threads"});
    OptimizerConfig o;
    if (j.contains("mode")) {
        const auto mode = j.at("mode").get<std::string>();
        if (mode == "oracle")
            o.mode = OptimizerMode::oracle;
        else if (mode == "cem")
            o.mode = OptimizerMode::cem;
        else if (mode == "mixture")
            o.mode = OptimizerMode::mixture;
        else
            fail(where, "unknown mode '" + mode + "'");
    }
    o.grid.step = number_or(j, where, "delta", o.grid.step);
    o.grid.bound = number_or(j, where, "bound", o.grid.bound);
    o.max_evaluations = number_or(j, where, "max_evaluations", o.max_evaluations);
    o.budget = count_or(j, where, "budget", o.budget);
    o.population = count_or(j, where, "population", o.population);
    o.elite_fraction = number_or(j, where, "elite_fraction", o.elite_fraction);
    o.init_std = number_or(j, where, "init_std", o.init_std);
    if (j.contains("policy")) {
        const auto p = j.at("policy").get<std::string>();
        if (p == "tabular")
            o.policy = PolicyKind::tabular;
        else if (p == "linear")
            o.policy = PolicyKind::linear;
        else
            fail(where, "unknown policy '" + p + "'");
    }
    o.mixture_resolution = count_or(j, where, "mixture_resolution", o.mixture_resolution);
    o.mixture_candidates = count_or(j, where, "mixture_candidates", o.mixture_candidates);
    o.n_paths = count_or(j, where, "n_paths", o.n_paths);
    o.threads = count_or(j, where, "threads", o.threads);

    try {
        o.grid.validate();
    } catch (const InvalidArgument& e) {
        fail(where, e.what());
    }
    if (!(o.max_evaluations >= 1.0))
        fail(where, "max_evaluations must be >= 1");
    if (o.population < 2)
        fail(where, "population must be >= 2");
    if (!(o.elite_fraction > 0.0 && o.elite_fraction < 1.0))
        fail(where, "elite_fraction must lie in (0, 1)");
    if (!(o.init_std > 0.0))
        fail(where, "init_std must be > 0");
    if (o.mixture_resolution < 1)
        fail(where, "mixture_resolution must be >= 1");
    if (o.mixture_candidates < 1 || o.mixture_candidates > kMaxMixtureCandidates)
        fail(where, "mixture_candidates must lie in [1, " + std::to_string(kMaxMixtureCandidates) + "]");
    if (o.n_paths < 1)
        fail(where, "n_paths must be >= 1");
    return o;
}

SearchConfig search(const Json& j)
{
    const std::string where = "search";
    check_keys(j, where, {"gamma_plus", "gamma_minus", "lambda"});
    SearchConfig s;
    if (j.contains("gamma_plus"))
        s.gamma_plus = list(j.at("gamma_plus"), where + ".gamma_plus");
    if (j.contains("gamma_minus"))
        s.gamma_minus = list(j.at("gamma_minus"), where + ".gamma_minus");
    if (j.contains("lambda"))
        s.lambda = list(j.at("lambda"), where + ".lambda");
    if (s.gamma_plus.empty() || s.gamma_minus.empty())
        fail(where, "gamma lists must be non-empty");
    return s;
}

}  // namespace

cpt::Preferences preferences_from_json(const Json& j)
{
    const std::string where = "preferences";
    check_keys(j, where, {"cpt", "expected_utility"});
    if (j.contains("cpt") == j.contains("expected_utility"))
        fail(where, "give exactly one of 'cpt' and 'expected_utility'");
    try {
        if (j.contains("cpt")) {
            const auto& c = j.at("cpt");
            const std::string w = "preferences.cpt";
            check_keys(c, w, {"alpha", "cap", "k", "beta", "gamma_plus", "gamma_minus", "utility"});
            cpt::CptSpec spec;
            const std::string utility = c.contains("utility") ? c.at("utility").get<std::string>() : "power";
            if (utility == "identity") {
                if (c.contains("alpha") || c.contains("cap") || c.contains("k") || c.contains("beta"))
                    fail(w, "power-utility parameters given with utility \"identity\"");
                spec.utility = cpt::UtilityPair::identity();
            } else if (utility == "power") {
                cpt::PowerUtilityParams p;
                p.alpha = number_or(c, w, "alpha", p.alpha);
                p.beta = number_or(c, w, "beta", p.beta);
                p.loss_scale = number_or(c, w, "k", p.loss_scale);
                if (c.contains("cap"))
                    p.cap = c.at("cap").is_null() ? std::numeric_limits<double>::infinity()
                                                  : number(c.at("cap"), w + ".cap");
                spec.utility = cpt::UtilityPair::power(p);
            } else {
                fail(w, "unknown utility '" + utility + "'");
            }
            if (c.contains("gamma_plus"))
                spec.distortion.plus = distortion(c.at("gamma_plus"), w + ".gamma_plus");
            if (c.contains("gamma_minus"))
                spec.distortion.minus = distortion(c.at("gamma_minus"), w + ".gamma_minus");
            return cpt::Preferences::prospect(std::move(spec));
        }

        const auto& e = j.at("expected_utility");
        const std::string w = "preferences.expected_utility";
        check_keys(e, w, {"type", "cap", "risk_aversion"});
        const auto type = field(e, w, "type").get<std::string>();
        if (type == "identity")
            return cpt::Preferences::expected([](double x) { return x; }, "expected value");
        if (type == "capped_linear") {
            double cap = number(field(e, w, "cap"), w + ".cap");
            return cpt::Preferences::expected([cap](double x) { return std::min(x, cap); },
                                              "expected min(x, " + std::to_string(cap) + ")");
        }
        if (type == "exponential") {
            double a = number(field(e, w, "risk_aversion"), w + ".risk_aversion");
            if (!(a > 0.0))
                fail(w, "risk_aversion must be > 0");
            return cpt::Preferences::expected([a](double x) { return -std::exp(-a * x); },
                                              "expected -exp(-" + std::to_string(a) + " x)");
        }
        fail(w, "unknown utility type '" + type + "'");
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        fail(where, e.what());
    } catch (const Json::exception& e) {
        fail(where, e.what());
    }
}

ExperimentConfig parse_config(const Json& doc)
{
    check_keys(doc, "config", {"schema_version", "seed", "market", "preferences", "problem", "optimizer", "search"});
    ExperimentConfig c;
    try {
        c.schema_version = field(doc, "config", "schema_version").get<int>();
        if (c.schema_version != kConfigSchemaVersion)
            fail("config", "unsupported schema_version " + std::to_string(c.schema_version));
        if (doc.contains("seed")) {
            const auto& s = doc.at("seed");
            if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<std::int64_t>() < 0))
                fail("config", "seed must be a non-negative integer");
            c.seed = s.get<std::uint64_t>();
        }
        c.market = market(field(doc, "config", "market"));
        c.market.process.seed = c.seed;

        c.preferences = field(doc, "config", "preferences");
        (void)preferences_from_json(c.preferences);

        const auto& p = field(doc, "config", "problem");
        check_keys(p, "problem", {"x", "tol"});
        c.problem.x = vec(field(p, "problem", "x"), "problem.x");
        if (static_cast<std::size_t>(c.problem.x.size()) != c.market.d)
            fail("problem", "x must have d entries");
        c.problem.tol = number_or(p, "problem", "tol", c.problem.tol);
        if (!(c.problem.tol > 0.0))
            fail("problem", "tol must be > 0");

        c.optimizer = doc.contains("optimizer") ? optimizer(doc.at("optimizer")) : OptimizerConfig{};
        if (doc.contains("search"))
            c.search = search(doc.at("search"));
    } catch (const ConfigError&) {
        throw;
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(doc);
}

void set_seed(ExperimentConfig& config, std::uint64_t seed)
{
    config.seed = seed;
    config.market.process.seed = seed;
}

std::string to_string(OptimizerMode mode)
{
    switch (mode) {
    case OptimizerMode::oracle: return "oracle";
    case OptimizerMode::cem: return "cem";
    case OptimizerMode::mixture: return "mixture";
    }
    return "unknown";
}

Model build_model(const ExperimentConfig& config)
{
    ConeMap cones = [&] {
        try {
            return ConeMap::proportional(config.market.cone);
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("market.cone_map: ") + e.what());
        }
    }();
    ScenarioTree tree = config.market.process.finite_support()
                            ? ScenarioTree::build(config.market.process, cones, config.market.reference,
                                                  config.market.max_leaves)
                            : ScenarioTree::from_paths(sample_paths(config.market.process, config.optimizer.n_paths,
                                                                    config.optimizer.threads),
                                                       config.market.process.grid, cones, config.market.reference);
    if (!tree.root().cone->contains(config.problem.x, config.problem.tol))
        throw ConfigError("problem.x is not solvent at the root (x must lie in G(root))");
    return Model{std::move(cones), std::move(tree), preferences_from_json(config.preferences), config.problem.x,
                 config.market.numeraire, config.problem.tol};
}

}  // namespace conecpt
