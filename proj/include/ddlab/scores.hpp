#pragma once

#include "ddlab/schedule.hpp"
#include "ddlab/targets.hpp"

#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace ddlab {

// Tweedie-formula quantities at a fixed noise level abar in [0, 1).
std::vector<double> posterior_mean(const TargetSpec& target, double abar, std::span<const double> x);
std::vector<double> posterior_cov_diag(const TargetSpec& target, double abar, std::span<const double> x);
std::vector<double> exact_score(const TargetSpec& target, double abar, std::span<const double> x);
std::vector<double> exact_score_jacobian_diag(const TargetSpec& target, double abar, std::span<const double> x);

namespace perturbation {
/// s = s* + magnitude_t * direction.
struct ConstantShift {
    std::vector<double> direction;
    std::vector<double> magnitude; // one entry (all steps) or T entries
};
/// s = s* + diag(D_t) x.
struct LinearField {
    std::vector<std::vector<double>> diag; // one entry (all steps) or T entries
};
} // namespace perturbation

struct PerturbationSpec {
    std::variant<perturbation::ConstantShift, perturbation::LinearField> kind;
    /// Root-mean over steps of E||s - s*||^2 under the forward marginal.
    double declared_epsilon = 0.0;

    /// Normalizes `direction`; declared epsilon is the RMS of the magnitudes.
    static PerturbationSpec constant_shift(std::vector<double> direction, std::vector<double> magnitude, int T);
    /// Declared epsilon must be supplied (see ScoreOracle::analytic_epsilon_score).
    static PerturbationSpec linear_field(std::vector<std::vector<double>> diag, double declared_epsilon);
};

/// Score of the form J x + b with diagonal J.
struct AffineScore {
    std::vector<double> slope;
    std::vector<double> offset;
};

/// Exact (optionally perturbed) score evaluator tied to a schedule.
class ScoreOracle {
public:
    ScoreOracle(TargetSpec target, NoiseSchedule schedule, std::optional<PerturbationSpec> perturbation = std::nullopt);

    const TargetSpec& target() const { return target_; }
    const NoiseSchedule& schedule() const { return schedule_; }
    const std::optional<PerturbationSpec>& perturbation() const { return perturbation_; }

    std::vector<double> posterior_mean(int t, std::span<const double> x) const;
    std::vector<double> posterior_cov_diag(int t, std::span<const double> x) const;
    /// Perturbed score when a perturbation is configured.
    std::vector<double> score(int t, std::span<const double> x) const;
    std::vector<double> score_jacobian_diag(int t, std::span<const double> x) const;
    /// s_t(x) - s*_t(x).
    std::vector<double> score_error(int t, std::span<const double> x) const;

    /// True when the score is affine in x, which is what analytic law propagation needs.
    bool affine() const;
    AffineScore affine_score(int t) const;

    /// Exact sqrt((1/T) sum_t E||s_t - s*_t||^2) for Gaussian targets.
    double analytic_epsilon_score() const;

private:
    TargetSpec target_;
    NoiseSchedule schedule_;
    std::optional<PerturbationSpec> perturbation_;
};

/// Monte-Carlo estimate of (1/T) sum_t E||s_t - s*_t||^2 with X_t drawn from the
/// forward marginal; returns {estimate, standard error}.
struct EpsilonAudit {
    double mean_sq_error = 0.0;
    double std_error = 0.0;
};
EpsilonAudit audit_score_error(const ScoreOracle& oracle, std::size_t n, const RngPolicy& policy);

} // namespace ddlab
