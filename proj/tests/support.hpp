#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "conecpt/cone.hpp"
#include "conecpt/cpt.hpp"
#include "conecpt/market.hpp"
#include "conecpt/strategy.hpp"

namespace testing_support {

using conecpt::Vector;

inline Vector vec(std::initializer_list<double> xs)
{
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs)
        v[i++] = x;
    return v;
}

inline conecpt::SolvencyCone kabanov(double lambda, std::size_t d = 2)
{
    Vector prices = Vector::Ones(static_cast<Eigen::Index>(d));
    return conecpt::SolvencyCone::from_bid_ask(conecpt::BidAskMatrix::proportional(prices, lambda));
}

/// True when a and b are positive multiples of each other up to tol (after normalization).
inline bool same_ray(const Vector& a, const Vector& b, double tol = 1e-9)
{
    return (a.normalized() - b.normalized()).lpNorm<Eigen::Infinity>() <= tol;
}

/// Every ray in `want` appears in `got` and vice versa.
inline bool same_rays(const std::vector<Vector>& got, const std::vector<Vector>& want, double tol = 1e-9)
{
    auto covered = [tol](const std::vector<Vector>& a, const std::vector<Vector>& b) {
        for (const auto& x : a) {
            bool hit = false;
            for (const auto& y : b)
                hit = hit || same_ray(x, y, tol);
            if (!hit)
                return false;
        }
        return true;
    };
    return covered(got, want) && covered(want, got);
}

struct Support {
    double value;
    double probability;
};

/// Scalar driving process with the same increment law at every step.
inline conecpt::DrivingProcessSpec scalar_process(std::vector<Support> support, std::size_t steps,
                                                 std::uint64_t seed = 0)
{
    conecpt::DrivingProcessSpec spec;
    spec.m = 1;
    spec.grid.clear();
    for (std::size_t i = 0; i <= steps; ++i)
        spec.grid.push_back(static_cast<double>(i) / static_cast<double>(steps == 0 ? 1 : steps));
    if (steps == 0)
        spec.grid = {0.0};
    conecpt::FiniteIncrements inc;
    inc.per_step.emplace_back();
    for (const auto& s : support)
        inc.per_step.back().push_back({vec({s.value}), s.probability});
    spec.increments = inc;
    spec.seed = seed;
    return spec;
}

inline conecpt::ConeMap proportional_map(double lambda, std::size_t d = 2, double slope = 0.0,
                                         conecpt::PriceModel model = conecpt::PriceModel::linear)
{
    conecpt::ProportionalConeParams p;
    p.d = d;
    p.lambda = lambda;
    p.lambda_slope = slope;
    p.price_model = model;
    p.initial_prices = Vector::Ones(static_cast<Eigen::Index>(d - 1));
    return conecpt::ConeMap::proportional(p);
}

inline conecpt::ScenarioTree binary_tree(double up, double down, std::size_t steps, double lambda,
                                         const conecpt::ReferenceMap& ref = conecpt::ReferenceMap::zero(2))
{
    return conecpt::ScenarioTree::build(scalar_process({{up, 0.5}, {down, 0.5}}, steps), proportional_map(lambda),
                                        ref);
}

/// The two-asset two-period binary instance used throughout the optimizer tests:
/// mid price 1, increments +0.3 / -0.1, lambda = 0.1, benchmark of one share.
inline conecpt::ScenarioTree reference_instance(bool reversed = false)
{
    std::vector<Support> s{{0.3, 0.5}, {-0.1, 0.5}};
    if (reversed)
        std::swap(s[0], s[1]);
    return conecpt::ScenarioTree::build(scalar_process(s, 2), proportional_map(0.1),
                                        conecpt::ReferenceMap::constant(vec({0.0, 1.0})));
}

inline Vector reference_endowment() { return vec({2.0, 0.0}); }

inline conecpt::cpt::Preferences default_cpt() { return conecpt::cpt::Preferences::prospect({}); }

inline conecpt::cpt::Preferences identity_prefs()
{
    conecpt::cpt::CptSpec spec;
    spec.utility = conecpt::cpt::UtilityPair::identity();
    spec.distortion = {conecpt::cpt::Distortion::identity(), conecpt::cpt::Distortion::identity()};
    return conecpt::cpt::Preferences::prospect(std::move(spec));
}

/// Silences the unbounded-utility warning for the lifetime of the object.
struct QuietWarnings {
    QuietWarnings() { conecpt::set_warning_sink([](const std::string&) {}); }
    ~QuietWarnings() { conecpt::set_warning_sink(nullptr); }
};

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index d, double scale = 1.0)
{
    std::normal_distribution<double> n(0.0, scale);
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i)
        v[i] = n(rng);
    return v;
}

/// Basis vectors plus 3-8 Gaussian generators.
inline std::vector<Vector> random_generators(std::mt19937_64& rng, std::size_t d)
{
    std::uniform_int_distribution<int> count(3, 8);
    std::vector<Vector> gens;
    const auto dd = static_cast<Eigen::Index>(d);
    for (Eigen::Index i = 0; i < dd; ++i)
        gens.push_back(Vector::Unit(dd, i));
    int k = count(rng);
    for (int i = 0; i < k; ++i)
        gens.push_back(random_vector(rng, dd));
    return gens;
}

inline conecpt::DiscreteDistribution random_law(std::mt19937_64& rng, std::size_t max_atoms = 8, double scale = 3.0)
{
    std::uniform_int_distribution<std::size_t> atoms(1, max_atoms);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::normal_distribution<double> x(0.0, scale);
    const std::size_t n = atoms(rng);
    std::vector<double> out(n), p(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = x(rng);
        p[i] = u(rng);
        total += p[i];
    }
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        p[i] /= total;
        acc += p[i];
    }
    p[n - 1] = 1.0 - acc;
    return {out, p};
}

}  // namespace testing_support
