#pragma once

#include "ddlab/coefficients.hpp"
#include "ddlab/config.hpp"
#include "ddlab/csv.hpp"
#include "ddlab/metrics.hpp"
#include "ddlab/samplers.hpp"
#include "ddlab/schedule.hpp"
#include "ddlab/scores.hpp"
#include "ddlab/targets.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ddlab {

// Builders from a validated RunConfig.
TargetSpec make_target(const RunConfig& cfg);
NoiseSchedule make_schedule(const RunConfig& cfg, int T);
inline NoiseSchedule make_schedule(const RunConfig& cfg) { return make_schedule(cfg, cfg.schedule.T); }
CoefficientFamily make_family(const RunConfig& cfg, const std::string& name);
inline CoefficientFamily make_family(const RunConfig& cfg) { return make_family(cfg, cfg.sampler.family); }
/// Perturbation of magnitude epsilon (or cfg.perturbation.magnitude). For a
/// linear field the diagonal is scaled so the analytic epsilon equals it.
std::optional<PerturbationSpec> make_perturbation(const RunConfig& cfg, const TargetSpec& target,
                                                  const NoiseSchedule& s, std::optional<double> epsilon = std::nullopt);

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t points = 0;
};

/// OLS of ln y on ln x, skipping y below 1e-13 (numerically exact rows).
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct RateSweepRow {
    int T = 0;
    std::size_t d = 0;
    std::size_t k = 0;
    std::string family;
    FrobeniusProxy proxy;
    TvEstimate tv;
};

struct RateSweepGroup {
    std::size_t k = 0;
    std::string family;
    std::vector<RateSweepRow> rows;
    LogLogFit fit;
};

struct RateSweepResult {
    std::vector<RateSweepGroup> groups;
    CsvTable table() const;
};

/// Analytic propagation over the T grid; proxy of (forward law at abar_1,
/// sampler law of Y_1) and its log-log slope against T.
RateSweepResult exp_rate_sweep(const RunConfig& cfg, int threads = 1);

struct OneStepRow {
    double eta_scale = 0.0;
    double sigma_scale = 0.0;
    double eta = 0.0;
    double sigma = 0.0;
    double lower_bound = 0.0;
    TvEstimate tv;
    bool violation = false;
};

struct OneStepLbResult {
    int t = 0;
    StepLevels levels;
    std::vector<OneStepRow> rows;
    CsvTable table() const;
};

/// Scales the original-DDPM (eta, sigma) pair over the grid and compares the
/// one-step lower bound with the MC TV of the one-step output vs X_{t-1}.
OneStepLbResult exp_onestep_lb(const RunConfig& cfg, int threads = 1);
/// Step whose alpha_bar is nearest 0.5 (t >= 2).
int pick_half_noise_step(const NoiseSchedule& s);

struct ScoreErrorRow {
    double epsilon = 0.0;
    double declared_epsilon = 0.0;
    FrobeniusProxy proxy;
    double mean_shift = 0.0;
};

struct ScoreErrorResult {
    std::string kind;
    std::string family;
    std::vector<ScoreErrorRow> rows;
    LogLogFit fit; // degradation (mean shift, or proxy excess) against epsilon
    CsvTable table() const;
};

ScoreErrorResult exp_score_error(const RunConfig& cfg, int threads = 1);

struct CoeffAuditRow {
    int T = 0;
    std::string family;
    double xi = 0.0;
    bool relation_expected = false;
    double max_abs_residual = 0.0;
    double min_residual = 0.0;
    double max_residual = 0.0;
    std::size_t eta_cap_flags = 0;
};

struct CoeffAuditResult {
    std::vector<CoeffAuditRow> rows;
    CsvTable table() const;
};

CoeffAuditResult exp_coeff_audit(const RunConfig& cfg);

struct PosteriorTraceResult {
    std::vector<TracePoint> curve;
    std::vector<std::optional<double>> exact; // closed form for Gaussian targets
    CsvTable table() const;
};

PosteriorTraceResult exp_posterior_trace(const RunConfig& cfg, int threads = 1);

/// Closed-form E[tr Cov_{0|t}] for Gaussian targets.
double gaussian_posterior_trace(const TargetSpec& target, double abar);

/// Per-step schedule listing with the step-ratio audit (blank at t = 1).
CsvTable schedule_table(const NoiseSchedule& s);

/// Per-step eta, sigma, relation residual and constraint flag for one plan.
CsvTable coefficient_table(const NoiseSchedule& s, const CoefficientPlan& plan, double C1);

struct SampleResult {
    std::vector<double> mean;     // of Y_1
    std::vector<double> variance; // of Y_1
    std::vector<double> target_variance; // of X_1; empty for mixture targets
    std::vector<TrajectoryPoint> trajectory;
    CsvTable table() const;
    CsvTable trajectory_table() const;
};

/// One reverse run of cfg.sampler.family on the configured target, analytic or
/// with cfg.mc.n_samples particles.
SampleResult exp_sample(const RunConfig& cfg, bool record_trajectory, int threads = 1);

} // namespace ddlab
