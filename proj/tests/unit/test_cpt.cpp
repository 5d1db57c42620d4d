#include <gtest/gtest.h>

#include <random>

#include "conecpt/cpt.hpp"
#include "conecpt/error.hpp"
#include "quadrature.hpp"
#include "support.hpp"

using namespace conecpt;
using namespace conecpt::cpt;

namespace {

const DiscreteDistribution coin{{-1.0, 1.0}, {0.5, 0.5}};

UtilityPair linear_capped() { return UtilityPair::power({1.0, 1e6, 1.0, 1.0}); }

DistortionPair ids() { return {Distortion::identity(), Distortion::identity()}; }

}  // namespace

TEST(Distribution, Validation)
{
    EXPECT_THROW(DiscreteDistribution({1.0}, {0.9}), InvalidArgument);
    EXPECT_THROW(DiscreteDistribution({1.0, 2.0}, {1.0}), InvalidArgument);
    EXPECT_THROW(DiscreteDistribution({1.0, 2.0}, {1.5, -0.5}), InvalidArgument);
    EXPECT_THROW(DiscreteDistribution({}, {}), InvalidArgument);
    EXPECT_THROW(DiscreteDistribution({std::nan("")}, {1.0}), InvalidArgument);
    EXPECT_NO_THROW(DiscreteDistribution({1.0, 2.0}, {0.3, 0.7}));
}

TEST(Distribution, MixtureIsConvexCombination)
{
    DiscreteDistribution a{{1.0, 2.0}, {0.5, 0.5}};
    DiscreteDistribution b{{3.0}, {1.0}};
    std::vector<DiscreteDistribution> parts{a, b};
    std::vector<double> w{0.25, 0.75};
    auto m = DiscreteDistribution::mixture(parts, w);
    ASSERT_EQ(m.size(), 3u);
    EXPECT_EQ(m.probabilities()[0], 0.125);
    EXPECT_EQ(m.probabilities()[2], 0.75);
    EXPECT_DOUBLE_EQ(m.mean(), 0.25 * 1.5 + 0.75 * 3.0);
}

TEST(Utility, PowerDefaults)
{
    auto u = UtilityPair::power({});
    EXPECT_TRUE(u.bounded());
    EXPECT_EQ(u.gain(0.0), 0.0);
    EXPECT_EQ(u.loss(0.0), 0.0);
    EXPECT_DOUBLE_EQ(u.gain(2.0), std::pow(2.0, 0.88));
    EXPECT_DOUBLE_EQ(u.loss(2.0), 2.25 * std::pow(2.0, 0.88));
    EXPECT_EQ(u.gain(1e9), 100.0);
    double prev = 0.0;
    for (int i = 1; i < 2000; ++i) {
        double g = u.gain(0.37 * i);
        EXPECT_GE(g, prev);
        prev = g;
    }
}

TEST(Utility, RejectsBadParameters)
{
    EXPECT_THROW(UtilityPair::power({1.5, 100, 2.25, 0.88}), InvalidArgument);
    EXPECT_THROW(UtilityPair::power({0.88, -1, 2.25, 0.88}), InvalidArgument);
    EXPECT_THROW(UtilityPair::power({0.88, 100, 0.0, 0.88}), InvalidArgument);
    EXPECT_THROW(UtilityPair::power({0.88, 100, 2.25, 0.0}), InvalidArgument);
    EXPECT_FALSE(UtilityPair::power({0.88, INFINITY, 2.25, 0.88}).bounded());
    EXPECT_FALSE(UtilityPair::identity().bounded());
}

TEST(Distortion, TverskyKahneman)
{
    for (double g : {0.29, 0.5, 0.61, 0.69, 1.0}) {
        auto w = Distortion::tversky_kahneman(g);
        EXPECT_EQ(w(0.0), 0.0);
        EXPECT_NEAR(w(1.0), 1.0, 1e-15);
        double prev = 0.0;
        for (int i = 1; i <= 1000; ++i) {
            double v = w(i / 1000.0);
            EXPECT_GE(v, prev) << g;
            EXPECT_LE(v, 1.0 + 1e-15);
            prev = v;
        }
    }
    EXPECT_NEAR(Distortion::tversky_kahneman(1.0)(0.3), 0.3, 1e-15);
    EXPECT_THROW(Distortion::tversky_kahneman(0.28), InvalidArgument);
    EXPECT_THROW(Distortion::tversky_kahneman(1.01), InvalidArgument);
}

TEST(Distortion, CustomEndpoints)
{
    EXPECT_THROW(Distortion::custom([](double p) { return 0.5 * p; }), InvalidArgument);
    EXPECT_NO_THROW(Distortion::custom([](double p) { return p * p * p; }));
    EXPECT_EQ(Distortion::power(2.0)(0.5), 0.25);
}

TEST(VPlus, Examples)
{
    DistortionPair sq{Distortion::power(2.0), Distortion::identity()};
    EXPECT_NEAR(v_plus(coin, linear_capped(), sq), 0.25, 1e-12);
    EXPECT_NEAR(v_plus(coin, linear_capped(), ids()), 0.5, 1e-12);
    EXPECT_EQ(v_plus(DiscreteDistribution::point(0.0), linear_capped(), ids()), 0.0);
}

TEST(VMinus, Examples)
{
    auto u = UtilityPair::identity();
    EXPECT_NEAR(v_minus(coin, u, ids()), 0.5, 1e-12);
    DistortionPair sq{Distortion::identity(), Distortion::power(2.0)};
    EXPECT_NEAR(v_minus(coin, u, sq), 0.25, 1e-12);
    EXPECT_EQ(v_minus(DiscreteDistribution({0.0, 3.0}, {0.5, 0.5}), u, ids()), 0.0);
}

TEST(CptValue, Examples)
{
    testing_support::QuietWarnings quiet;
    DistortionPair sq{Distortion::power(2.0), Distortion::identity()};
    EXPECT_NEAR(cpt_value(coin, UtilityPair::identity(), sq), -0.25, 1e-12);
    EXPECT_NEAR(cpt_value(coin, UtilityPair::identity(), ids()), 0.0, 1e-12);
    auto u = UtilityPair::power({});
    EXPECT_DOUBLE_EQ(cpt_value(DiscreteDistribution::point(3.0), u, {Distortion::tversky_kahneman(0.61),
                                                                     Distortion::tversky_kahneman(0.69)}),
                     u.gain(3.0));
    EXPECT_EQ(cpt_value(DiscreteDistribution::point(0.0), CptSpec{}), 0.0);
}

TEST(CptValue, TiesMerged)
{
    // the same law written with split atoms
    DiscreteDistribution a{{1.0, 2.0, -1.0}, {0.3, 0.3, 0.4}};
    DiscreteDistribution b{{2.0, 1.0, -1.0, 1.0, -1.0}, {0.3, 0.1, 0.1, 0.2, 0.3}};
    EXPECT_NEAR(cpt_value(a, CptSpec{}), cpt_value(b, CptSpec{}), 1e-14);
}

TEST(CptValue, DegeneratesToExpectation)
{
    std::mt19937_64 rng(17);
    auto u = UtilityPair::power({});
    for (int i = 0; i < 1000; ++i) {
        auto law = testing_support::random_law(rng);
        double expect = 0.0;
        for (std::size_t k = 0; k < law.size(); ++k) {
            double x = law.outcomes()[k];
            expect += law.probabilities()[k] * (x > 0 ? u.gain(x) : (x < 0 ? -u.loss(-x) : 0.0));
        }
        EXPECT_NEAR(cpt_value(law, u, ids()), expect, 1e-12);
    }
}

TEST(CptValue, MonotoneUnderDominance)
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> shift(0.0, 2.0);
    for (int i = 0; i < 300; ++i) {
        auto law = testing_support::random_law(rng);
        std::vector<double> up(law.outcomes());
        for (double& x : up)
            x += shift(rng);
        DiscreteDistribution better(up, law.probabilities());
        EXPECT_GE(cpt_value(better, CptSpec{}), cpt_value(law, CptSpec{}) - 1e-12);
    }
}

TEST(CptValue, LayerCakeMatchesQuadrature)
{
    std::mt19937_64 rng(29);
    auto u = UtilityPair::power({0.88, 5.0, 2.25, 0.8});
    DistortionPair w{Distortion::tversky_kahneman(0.61), Distortion::tversky_kahneman(0.69)};
    for (int i = 0; i < 40; ++i) {
        auto law = testing_support::random_law(rng, 6);
        double qp = testing_support::choquet_by_quadrature(law, [&](double x) { return u.gain(x); }, w.plus, true);
        double qm = testing_support::choquet_by_quadrature(law, [&](double x) { return u.loss(x); }, w.minus, false);
        EXPECT_NEAR(v_plus(law, u, w), qp, 1e-8);
        EXPECT_NEAR(v_minus(law, u, w), qm, 1e-8);
    }
}

TEST(ExpectedUtility, Examples)
{
    EXPECT_NEAR(expected_utility(coin, [](double x) { return x; }), 0.0, 1e-15);
    EXPECT_EQ(expected_utility(DiscreteDistribution::point(1.0), [](double x) { return std::min(x, 0.5); }), 0.5);
    EXPECT_DOUBLE_EQ(expected_utility(DiscreteDistribution({1.0, 2.0}, {0.25, 0.75}), [](double x) { return x * x; }),
                     3.25);
}

TEST(Preferences, Dispatch)
{
    auto eu = Preferences::expected([](double x) { return 2.0 * x; }, "twice");
    EXPECT_FALSE(eu.is_cpt());
    EXPECT_EQ(eu.description(), "twice");
    EXPECT_DOUBLE_EQ(eu.evaluate(DiscreteDistribution::point(1.5)), 3.0);
    auto p = Preferences::prospect({});
    EXPECT_TRUE(p.is_cpt());
    EXPECT_DOUBLE_EQ(p.evaluate(coin), cpt_value(coin, CptSpec{}));
    EXPECT_THROW(Preferences::expected(nullptr, "x"), InvalidArgument);
}
