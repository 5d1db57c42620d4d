#include "conecpt/cpt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <mutex>
#include <numeric>

#include "conecpt/error.hpp"

namespace conecpt {

namespace {

std::mutex g_sink_mutex;

void to_stderr(const std::string& msg)
{
    std::cerr << "warning: " << msg << '\n';
}

WarningSink g_sink = to_stderr;

}  // namespace

void set_warning_sink(WarningSink sink)
{
    std::lock_guard lock(g_sink_mutex);
    g_sink = sink ? std::move(sink) : WarningSink(to_stderr);
}

void warn(const std::string& message)
{
    std::lock_guard lock(g_sink_mutex);
    g_sink(message);
}

DiscreteDistribution::DiscreteDistribution(std::vector<double> outcomes, std::vector<double> probabilities)
    : outcomes_(std::move(outcomes)), probabilities_(std::move(probabilities))
{
    if (outcomes_.size() != probabilities_.size())
        throw InvalidArgument("distribution: outcome and probability counts differ");
    if (outcomes_.empty())
        throw InvalidArgument("distribution: no outcomes");
    double total = 0.0;
    for (std::size_t i = 0; i < outcomes_.size(); ++i) {
        if (!std::isfinite(outcomes_[i]))
            throw InvalidArgument("distribution: outcome is not finite");
        if (!(probabilities_[i] >= 0.0) || !std::isfinite(probabilities_[i]))
            throw InvalidArgument("distribution: probability must be finite and >= 0");
        total += probabilities_[i];
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw InvalidArgument("distribution: probabilities sum to " + std::to_string(total));
}

DiscreteDistribution DiscreteDistribution::mixture(std::span<const DiscreteDistribution> components,
                                                   std::span<const double> weights)
{
    if (components.size() != weights.size() || components.empty())
        throw InvalidArgument("mixture: need one weight per component");
    std::vector<double> outcomes;
    std::vector<double> probs;
    for (std::size_t c = 0; c < components.size(); ++c) {
        for (std::size_t i = 0; i < components[c].size(); ++i) {
            outcomes.push_back(components[c].outcomes_[i]);
            probs.push_back(weights[c] * components[c].probabilities_[i]);
        }
    }
    return {std::move(outcomes), std::move(probs)};
}

double DiscreteDistribution::mean() const
{
    double m = 0.0;
    for (std::size_t i = 0; i < outcomes_.size(); ++i)
        m += outcomes_[i] * probabilities_[i];
    return m;
}

namespace cpt {

UtilityPair::UtilityPair(Fn gain, Fn loss, bool bounded)
    : gain_(std::move(gain)), loss_(std::move(loss)), bounded_(bounded)
{
}

UtilityPair UtilityPair::power(const PowerUtilityParams& p)
{
    if (!(p.alpha > 0.0 && p.alpha <= 1.0))
        throw InvalidArgument("utility: alpha must lie in (0, 1]");
    if (!(p.beta > 0.0 && p.beta <= 1.0))
        throw InvalidArgument("utility: beta must lie in (0, 1]");
    if (!(p.cap > 0.0))
        throw InvalidArgument("utility: cap must be > 0");
    if (!(p.loss_scale > 0.0) || !std::isfinite(p.loss_scale))
        throw InvalidArgument("utility: loss scale must be finite and > 0");
    auto gain = [alpha = p.alpha, cap = p.cap](double x) { return std::min(std::pow(x, alpha), cap); };
    auto loss = [k = p.loss_scale, beta = p.beta](double x) { return k * std::pow(x, beta); };
    return {gain, loss, std::isfinite(p.cap)};
}

UtilityPair UtilityPair::identity()
{
    auto id = [](double x) { return x; };
    return {id, id, false};
}

UtilityPair UtilityPair::custom(Fn gain, Fn loss, bool bounded)
{
    if (!gain || !loss)
        throw InvalidArgument("utility: empty function");
    if (gain(0.0) != 0.0 || loss(0.0) != 0.0)
        throw InvalidArgument("utility: u(0) must be 0");
    return {std::move(gain), std::move(loss), bounded};
}

Distortion::Distortion(Fn fn, std::string name) : fn_(std::move(fn)), name_(std::move(name)) {}

Distortion Distortion::identity()
{
    return {[](double p) { return p; }, "identity"};
}

Distortion Distortion::tversky_kahneman(double gamma)
{
    if (!(gamma > 0.28 && gamma <= 1.0))
        throw InvalidArgument("distortion: Tversky-Kahneman gamma must lie in (0.28, 1]");
    if (gamma == 1.0)
        return {[](double p) { return p; }, "tk(1)"};
    auto fn = [gamma](double p) {
        if (p <= 0.0)
            return 0.0;
        if (p >= 1.0)
            return 1.0;
        double a = std::pow(p, gamma);
        double b = std::pow(1.0 - p, gamma);
        return a / std::pow(a + b, 1.0 / gamma);
    };
    return {fn, "tk(" + std::to_string(gamma) + ")"};
}

Distortion Distortion::power(double exponent)
{
    if (!(exponent > 0.0) || !std::isfinite(exponent))
        throw InvalidArgument("distortion: exponent must be finite and > 0");
    return {[exponent](double p) { return std::pow(p, exponent); }, "power(" + std::to_string(exponent) + ")"};
}

Distortion Distortion::custom(Fn fn, std::string name)
{
    if (!fn)
        throw InvalidArgument("distortion: empty function");
    if (fn(0.0) != 0.0 || fn(1.0) != 1.0)
        throw InvalidArgument("distortion: must satisfy w(0) = 0 and w(1) = 1");
    return {std::move(fn), std::move(name)};
}

double Distortion::operator()(double p) const
{
    return fn_(std::clamp(p, 0.0, 1.0));
}

namespace {

// Layer-cake sum over the distinct utility levels of the mapped outcomes.
double layer_cake(std::vector<std::pair<double, double>> levels, const Distortion& w)
{
    std::sort(levels.begin(), levels.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // merge ties
    std::size_t k = 0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (k > 0 && levels[k - 1].first == levels[i].first)
            levels[k - 1].second += levels[i].second;
        else
            levels[k++] = levels[i];
    }
    levels.resize(k);

    std::vector<double> tail(levels.size());
    double acc = 0.0;
    for (std::size_t i = levels.size(); i-- > 0;) {
        acc += levels[i].second;
        tail[i] = std::min(acc, 1.0);
    }

    double value = 0.0;
    double previous = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        double a = levels[i].first;
        if (a <= 0.0)
            continue;
        value += (a - previous) * w(tail[i]);
        previous = a;
    }
    return value;
}

}  // namespace

double v_plus(const DiscreteDistribution& dist, const UtilityPair& u, const DistortionPair& w)
{
    std::vector<std::pair<double, double>> levels;
    levels.reserve(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i) {
        double x = dist.outcomes()[i];
        levels.emplace_back(x > 0.0 ? u.gain(x) : 0.0, dist.probabilities()[i]);
    }
    return layer_cake(std::move(levels), w.plus);
}

double v_minus(const DiscreteDistribution& dist, const UtilityPair& u, const DistortionPair& w)
{
    std::vector<std::pair<double, double>> levels;
    levels.reserve(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i) {
        double x = dist.outcomes()[i];
        levels.emplace_back(x < 0.0 ? u.loss(-x) : 0.0, dist.probabilities()[i]);
    }
    return layer_cake(std::move(levels), w.minus);
}

double cpt_value(const DiscreteDistribution& dist, const UtilityPair& u, const DistortionPair& w)
{
    if (!u.bounded()) {
        static std::atomic<bool> warned{false};
        if (!warned.exchange(true))
            warn("gain utility is not bounded above; existence of an optimizer is not guaranteed");
    }
    return v_plus(dist, u, w) - v_minus(dist, u, w);
}

double expected_utility(const DiscreteDistribution& dist, const std::function<double(double)>& u)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i)
        acc += dist.probabilities()[i] * u(dist.outcomes()[i]);
    return acc;
}

Preferences Preferences::prospect(CptSpec spec)
{
    Preferences p;
    p.is_cpt_ = true;
    p.spec_ = std::move(spec);
    p.description_ = "cpt";
    return p;
}

Preferences Preferences::expected(std::function<double(double)> u, std::string description)
{
    if (!u)
        throw InvalidArgument("expected utility: empty function");
    Preferences p;
    p.is_cpt_ = false;
    p.utility_ = std::move(u);
    p.description_ = std::move(description);
    return p;
}

double Preferences::evaluate(const DiscreteDistribution& dist) const
{
    return is_cpt_ ? cpt_value(dist, spec_) : expected_utility(dist, utility_);
}

}  // namespace cpt
}  // namespace conecpt
