#include <gtest/gtest.h>

#include "conecpt/config.hpp"
#include "support.hpp"

using namespace conecpt;
using nlohmann::json;
using testing_support::vec;

namespace {

json minimal()
{
    return json::parse(R"({
      "schema_version": 1,
      "market": {
        "d": 2,
        "driving_process": {
          "m": 1,
          "grid": [0, 0.5, 1],
          "increments": {"type": "finite",
                         "support": [{"value": [0.3], "probability": 0.5},
                                     {"value": [-0.1], "probability": 0.5}]}
        },
        "cone_map": {"lambda": 0.1}
      },
      "preferences": {"cpt": {}},
      "problem": {"x": [2, 0]}
    })");
}

void expect_rejected(const json& doc)
{
    EXPECT_THROW(parse_config(doc), ConfigError) << doc.dump();
}

}  // namespace

TEST(Config, Defaults)
{
    auto c = parse_config(minimal());
    EXPECT_EQ(c.seed, 0u);
    EXPECT_EQ(c.market.numeraire, 0u);
    EXPECT_EQ(c.market.cone.price_model, PriceModel::linear);
    EXPECT_EQ(c.market.cone.initial_prices, vec({1.0}));
    EXPECT_EQ(c.optimizer.mode, OptimizerMode::oracle);
    EXPECT_EQ(c.optimizer.grid.step, 0.5);
    EXPECT_EQ(c.optimizer.grid.bound, 1.0);
    EXPECT_EQ(c.optimizer.budget, 10000u);
    EXPECT_EQ(c.optimizer.population, 64u);
    EXPECT_EQ(c.optimizer.elite_fraction, 0.1);
    EXPECT_EQ(c.optimizer.max_evaluations, 1e7);
    EXPECT_EQ(c.problem.tol, 1e-9);
    EXPECT_EQ(c.search.gamma_plus.size(), 5u);

    auto m = build_model(c);
    EXPECT_EQ(m.tree.size(), 7u);
    EXPECT_EQ(m.tree.node(3).reference, Vector::Zero(2));
    EXPECT_TRUE(m.preferences.is_cpt());
}

TEST(Config, SeedFollowsIntoProcess)
{
    auto doc = minimal();
    doc["seed"] = 42;
    auto c = parse_config(doc);
    EXPECT_EQ(c.market.process.seed, 42u);
    set_seed(c, 5);
    EXPECT_EQ(c.market.process.seed, 5u);
    doc["seed"] = -1;
    expect_rejected(doc);
}

TEST(Config, RejectsUnknownAndMissingFields)
{
    auto doc = minimal();
    doc["extra"] = 1;
    expect_rejected(doc);
    doc = minimal();
    doc["market"]["cone_map"]["lamda"] = 0.1;
    expect_rejected(doc);
    doc = minimal();
    doc.erase("problem");
    expect_rejected(doc);
    doc = minimal();
    doc["schema_version"] = 2;
    expect_rejected(doc);
    doc = minimal();
    doc["optimizer"] = {{"mode", "annealing"}};
    expect_rejected(doc);
}

TEST(Config, RejectsBadValues)
{
    auto doc = minimal();
    doc["market"]["numeraire"] = 3;
    expect_rejected(doc);
    doc = minimal();
    doc["market"]["driving_process"]["grid"] = {0, 2};
    expect_rejected(doc);
    doc = minimal();
    doc["market"]["driving_process"]["increments"]["support"][0]["probability"] = 0.7;
    expect_rejected(doc);
    doc = minimal();
    doc["problem"]["x"] = {1, 2, 3};
    expect_rejected(doc);
    doc = minimal();
    doc["optimizer"] = {{"delta", 0}};
    expect_rejected(doc);
    doc = minimal();
    doc["optimizer"] = {{"elite_fraction", 1.0}};
    expect_rejected(doc);
    doc = minimal();
    doc["optimizer"] = {{"mixture_candidates", 7}};
    expect_rejected(doc);
    doc = minimal();
    doc["preferences"] = {{"cpt", {{"gamma_plus", 0.2}}}};
    expect_rejected(doc);
    doc = minimal();
    doc["preferences"] = {{"cpt", {{"alpha", 1.5}}}};
    expect_rejected(doc);
    doc = minimal();
    doc["preferences"] = json::object();
    expect_rejected(doc);
    doc = minimal();
    doc["market"]["reference_point"] = {{"type", "constant"}, {"value", {1.0}}};
    expect_rejected(doc);
    doc = minimal();
    doc["market"]["reference_point"] = {{"type", "componentwise"},
                                        {"components", {{{"op", "terminal"}, {"index", 0}}, 0.0}}};
    expect_rejected(doc);
}

TEST(Config, InsolventEndowment)
{
    auto doc = minimal();
    doc["problem"]["x"] = {-1.0, 0.5};
    auto c = parse_config(doc);
    EXPECT_THROW(build_model(c), ConfigError);
}

TEST(Config, PreferenceVariants)
{
    testing_support::QuietWarnings quiet;
    DiscreteDistribution coin{{-1.0, 1.0}, {0.5, 0.5}};
    auto p = preferences_from_json(json::parse(
        R"({"cpt": {"utility": "identity", "gamma_plus": {"power": 2}, "gamma_minus": "identity"}})"));
    EXPECT_NEAR(p.evaluate(coin), -0.25, 1e-12);
    auto eu = preferences_from_json(json::parse(R"({"expected_utility": {"type": "capped_linear", "cap": 0.5}})"));
    EXPECT_FALSE(eu.is_cpt());
    EXPECT_DOUBLE_EQ(eu.evaluate(coin), -0.25);
    auto unbounded = preferences_from_json(json::parse(R"({"cpt": {"cap": null}})"));
    EXPECT_FALSE(unbounded.cpt().utility.bounded());
    EXPECT_THROW(preferences_from_json(json::parse(R"({"cpt": {"utility": "identity", "alpha": 0.5}})")),
                 ConfigError);
    EXPECT_THROW(preferences_from_json(json::parse(R"({"expected_utility": {"type": "exponential", "risk_aversion": 0}})")),
                 ConfigError);
}

TEST(Config, ReferenceExpressions)
{
    auto doc = minimal();
    doc["market"]["reference_point"] = json::parse(R"({"type": "componentwise",
        "components": [{"op": "max", "args": [{"op": "terminal", "index": 1}, 0]}, 1]})");
    auto m = build_model(parse_config(doc));
    for (auto l : m.tree.leaves()) {
        double y = m.tree.node(l).y[0];
        EXPECT_EQ(m.tree.node(l).reference, vec({std::max(y, 0.0), 1.0}));
    }
}

TEST(Config, ContinuousProcessSamplesTree)
{
    auto doc = minimal();
    doc["market"]["driving_process"]["increments"] = {{"type", "gaussian"}, {"drift", {0.0}}, {"volatility", {0.2}}};
    doc["optimizer"] = {{"n_paths", 16}};
    auto m = build_model(parse_config(doc));
    EXPECT_EQ(m.tree.leaves().size(), 16u);
    EXPECT_EQ(m.tree.steps(), 2u);
}

TEST(Config, ModeNames)
{
    EXPECT_EQ(to_string(OptimizerMode::oracle), "oracle");
    EXPECT_EQ(to_string(OptimizerMode::cem), "cem");
    EXPECT_EQ(to_string(OptimizerMode::mixture), "mixture");
}

TEST(Config, LoadMissingFile)
{
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}
