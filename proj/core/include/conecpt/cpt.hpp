#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace conecpt {

/// Finite law: outcomes with nonnegative probabilities summing to one.
class DiscreteDistribution {
public:
    DiscreteDistribution() = default;
    DiscreteDistribution(std::vector<double> outcomes, std::vector<double> probabilities);

    static DiscreteDistribution point(double value) { return {{value}, {1.0}}; }

    /// Weighted union of component laws; weights must sum to one.
    static DiscreteDistribution mixture(std::span<const DiscreteDistribution> components,
                                        std::span<const double> weights);

    const std::vector<double>& outcomes() const { return outcomes_; }
    const std::vector<double>& probabilities() const { return probabilities_; }
    std::size_t size() const { return outcomes_.size(); }

    double mean() const;

private:
    std::vector<double> outcomes_;
    std::vector<double> probabilities_;
};

namespace cpt {

/// u+(x) = min(x^alpha, cap),  u-(x) = loss_scale * x^beta.
struct PowerUtilityParams {
    double alpha = 0.88;
    double cap = 100.0;
    double loss_scale = 2.25;
    double beta = 0.88;
};

class UtilityPair {
public:
    using Fn = std::function<double(double)>;

    static UtilityPair power(const PowerUtilityParams& p);
    /// u+(x) = u-(x) = x, unbounded.
    static UtilityPair identity();
    static UtilityPair custom(Fn gain, Fn loss, bool bounded);

    double gain(double x) const { return gain_(x); }
    double loss(double x) const { return loss_(x); }
    bool bounded() const { return bounded_; }

private:
    UtilityPair(Fn gain, Fn loss, bool bounded);

    Fn gain_;
    Fn loss_;
    bool bounded_;
};

/// Probability weighting w: [0,1] -> [0,1] with w(0) = 0 and w(1) = 1.
class Distortion {
public:
    using Fn = std::function<double(double)>;

    static Distortion identity();
    /// p^g / (p^g + (1-p)^g)^(1/g), g in (0.28, 1].
    static Distortion tversky_kahneman(double gamma);
    /// p^e, e > 0.
    static Distortion power(double exponent);
    /// Arbitrary continuous map; endpoints are checked.
    static Distortion custom(Fn fn, std::string name = "custom");

    double operator()(double p) const;
    const std::string& name() const { return name_; }

private:
    Distortion(Fn fn, std::string name);

    Fn fn_;
    std::string name_;
};

struct DistortionPair {
    Distortion plus = Distortion::identity();
    Distortion minus = Distortion::identity();
};

struct CptSpec {
    UtilityPair utility = UtilityPair::power({});
    DistortionPair distortion{Distortion::tversky_kahneman(0.61), Distortion::tversky_kahneman(0.69)};
};

/// Choquet value of the positive part: sum_i (a_i - a_{i-1}) w+(P(u+(X+) >= a_i)).
double v_plus(const DiscreteDistribution& dist, const UtilityPair& u, const DistortionPair& w);
/// Same layering on the negative part with (u-, w-).
double v_minus(const DiscreteDistribution& dist, const UtilityPair& u, const DistortionPair& w);
/// V = V+(X+) - V-(X-). Emits a warning through the log sink when u+ is unbounded.
double cpt_value(const DiscreteDistribution& dist, const UtilityPair& u, const DistortionPair& w);
inline double cpt_value(const DiscreteDistribution& dist, const CptSpec& spec)
{
    return cpt_value(dist, spec.utility, spec.distortion);
}

double expected_utility(const DiscreteDistribution& dist, const std::function<double(double)>& u);

/// Objective functional on terminal laws: either CPT or plain expected utility.
class Preferences {
public:
    static Preferences prospect(CptSpec spec);
    static Preferences expected(std::function<double(double)> u, std::string description);

    double evaluate(const DiscreteDistribution& dist) const;
    bool is_cpt() const { return is_cpt_; }
    const CptSpec& cpt() const { return spec_; }
    const std::string& description() const { return description_; }

private:
    Preferences() = default;

    bool is_cpt_ = true;
    CptSpec spec_;
    std::function<double(double)> utility_;
    std::string description_;
};

}  // namespace cpt

/// Process-wide warning sink; defaults to stderr, and an empty sink restores
/// that default.
using WarningSink = std::function<void(const std::string&)>;
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace conecpt
