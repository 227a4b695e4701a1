#include "ddlab/schedule.hpp"

#include "ddlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ddlab {

StepLevels StepLevels::from_pair(double alpha, double alpha_bar)
{
    StepLevels lv;
    lv.alpha = alpha;
    lv.beta = 1.0 - alpha;
    lv.alpha_bar = alpha_bar;
    lv.one_minus_alpha_bar = 1.0 - alpha_bar;
    lv.alpha_minus_alpha_bar = alpha - alpha_bar;
    return lv;
}

NoiseSchedule NoiseSchedule::build(int T, double c0, double c1)
{
    if (T < 2)
        throw NumericError("schedule out of range: T must be >= 2");
    if (!(c0 > 0.0) || !(c1 > 0.0))
        throw NumericError("schedule out of range: c0 and c1 must be positive");

    const double rate = c1 * std::log(static_cast<double>(T)) / T;
    std::vector<double> betas(static_cast<std::size_t>(T));
    betas[0] = std::pow(static_cast<double>(T), -c0);
    for (int t = 1; t < T; ++t)
        betas[static_cast<std::size_t>(t)] = rate * std::min(betas[0] * std::pow(1.0 + rate, t), 1.0);
    return NoiseSchedule(std::move(betas), c0, c1);
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas, double c1)
{
    if (betas.size() < 2)
        throw NumericError("schedule out of range: T must be >= 2");
    return NoiseSchedule(std::move(betas), 0.0, c1);
}

NoiseSchedule::NoiseSchedule(std::vector<double> betas, double c0, double c1)
    : c0_(c0), c1_(c1), beta_(std::move(betas))
{
    const std::size_t n = beta_.size();
    alpha_.resize(n);
    alpha_bar_.resize(n);
    one_minus_alpha_bar_.resize(n);
    // Neumaier-compensated running sum of ln(alpha_i).
    double log_sum = 0.0;
    double carry = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double b = beta_[i];
        if (!(b > 0.0 && b < 1.0))
            throw NumericError("schedule out of range: beta_" + std::to_string(i + 1) + " = " + std::to_string(b));
        alpha_[i] = 1.0 - b;
        const double term = std::log1p(-b);
        const double next = log_sum + term;
        carry += std::abs(log_sum) >= std::abs(term) ? (log_sum - next) + term : (term - next) + log_sum;
        log_sum = next;
        alpha_bar_[i] = std::exp(log_sum + carry);
        one_minus_alpha_bar_[i] = -std::expm1(log_sum + carry);
    }
    // alpha_bar_1 is alpha_1 itself, so alpha_1 - alpha_bar_1 vanishes exactly.
    alpha_bar_[0] = alpha_[0];
    one_minus_alpha_bar_[0] = beta_[0];
    for (std::size_t i = 1; i < n; ++i) {
        if (!(alpha_bar_[i] < alpha_bar_[i - 1]))
            throw NumericError("schedule out of range: alpha_bar not strictly decreasing at t = " + std::to_string(i + 1));
    }
}

std::size_t NoiseSchedule::index(int t) const
{
    if (t < 1 || t > T())
        throw NumericError("step index " + std::to_string(t) + " outside 1.." + std::to_string(T()));
    return static_cast<std::size_t>(t - 1);
}

StepLevels NoiseSchedule::levels(int t) const
{
    StepLevels lv;
    lv.alpha = alpha(t);
    lv.beta = beta(t);
    lv.alpha_bar = alpha_bar(t);
    lv.one_minus_alpha_bar = one_minus_alpha_bar(t);
    lv.alpha_minus_alpha_bar = alpha_minus_alpha_bar(t);
    return lv;
}

StepRatioReport validate_step_ratio(const NoiseSchedule& s)
{
    StepRatioReport report;
    const double bound = 4.0 * s.c1() * std::log(static_cast<double>(s.T())) / s.T();
    for (int t = 2; t <= s.T(); ++t) {
        StepRatio r;
        r.t = t;
        r.ratio = s.beta(t) / s.one_minus_alpha_bar(t - 1);
        r.bound = bound;
        r.pass = r.ratio <= bound;
        report.all_pass = report.all_pass && r.pass;
        report.steps.push_back(r);
    }
    return report;
}

} // namespace ddlab
