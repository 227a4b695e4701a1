#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace ddlab {

/// Noise levels seen by a single reverse step t -> t-1.
struct StepLevels {
    double alpha = 1.0;
    /// 1 - alpha_t, kept separately so small steps keep full relative precision.
    double beta = 0.0;
    double alpha_bar = 1.0;
    double one_minus_alpha_bar = 0.0;
    /// alpha_t - alpha_bar_t, evaluated as alpha_t * (1 - alpha_bar_{t-1}).
    double alpha_minus_alpha_bar = 0.0;

    /// Levels for a step described only by (alpha_t, alpha_bar_t).
    static StepLevels from_pair(double alpha, double alpha_bar);
    double alpha_bar_prev() const { return alpha_bar / alpha; }
    double one_minus_alpha_bar_prev() const { return alpha_minus_alpha_bar / alpha; }
};

/// Discrete forward-process schedule. Steps are indexed 1..T; accessors
/// take the step index, not a zero-based offset.
class NoiseSchedule {
public:
    /// Two-phase schedule: beta_1 = T^-c0, then exponential growth at rate
    /// c1 ln T / T until it saturates at c1 ln T / T.
    static NoiseSchedule build(int T, double c0, double c1);
    /// Arbitrary per-step betas (index 0 holds beta_1). `c1` is only used by
    /// the step-ratio report.
    static NoiseSchedule from_betas(std::vector<double> betas, double c1 = 1.0);

    int T() const { return static_cast<int>(beta_.size()); }
    double c0() const { return c0_; }
    double c1() const { return c1_; }

    double beta(int t) const { return beta_.at(index(t)); }
    double alpha(int t) const { return alpha_.at(index(t)); }
    double alpha_bar(int t) const { return alpha_bar_.at(index(t)); }
    /// 1 - alpha_bar_t without cancellation (from expm1 of the log-sum).
    double one_minus_alpha_bar(int t) const { return one_minus_alpha_bar_.at(index(t)); }
    /// alpha_bar_0 = 1 by convention.
    double alpha_bar_prev(int t) const { return t == 1 ? 1.0 : alpha_bar(t - 1); }
    double one_minus_alpha_bar_prev(int t) const { return t == 1 ? 0.0 : one_minus_alpha_bar(t - 1); }
    /// alpha_t - alpha_bar_t; exactly zero at t = 1.
    double alpha_minus_alpha_bar(int t) const { return alpha(t) * one_minus_alpha_bar_prev(t); }
    StepLevels levels(int t) const;

    const std::vector<double>& betas() const { return beta_; }
    const std::vector<double>& alphas() const { return alpha_; }
    const std::vector<double>& alpha_bars() const { return alpha_bar_; }

private:
    NoiseSchedule(std::vector<double> betas, double c0, double c1);
    std::size_t index(int t) const;

    double c0_ = 0.0;
    double c1_ = 0.0;
    std::vector<double> beta_;
    std::vector<double> alpha_;
    std::vector<double> alpha_bar_;
    std::vector<double> one_minus_alpha_bar_;
};

inline NoiseSchedule build_schedule(int T, double c0, double c1) { return NoiseSchedule::build(T, c0, c1); }

struct StepRatio {
    int t = 0;
    double ratio = 0.0; // (1 - alpha_t) / (1 - alpha_bar_{t-1})
    double bound = 0.0; // 4 c1 ln T / T
    bool pass = false;
};

struct StepRatioReport {
    std::vector<StepRatio> steps; // t = 2..T
    bool all_pass = true;
};

/// Audits (1 - alpha_t) / (1 - alpha_bar_{t-1}) <= 4 c1 ln T / T for 2 <= t <= T.
/// Report only; never throws on a failing step.
StepRatioReport validate_step_ratio(const NoiseSchedule& s);

} // namespace ddlab
