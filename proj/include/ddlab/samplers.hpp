#pragma once

#include "ddlab/coefficients.hpp"
#include "ddlab/laws.hpp"
#include "ddlab/rng.hpp"
#include "ddlab/scores.hpp"

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace ddlab {

/// Particle cloud with one counter-based noise stream per particle, so the
/// draws a particle sees do not depend on how particles are split across threads.
struct Ensemble {
    ParticleMatrix particles;
    std::vector<Stream> streams;

    std::uint64_t draws_consumed() const;
};

struct AnalyticState {
    GaussianLaw law;
};

using SamplerState = std::variant<Ensemble, AnalyticState>;

/// Ensemble of n standard-normal points (n >= 1), streams derived from
/// (policy, "reverse", replicate, particle).
Ensemble init_ensemble(std::size_t d, std::size_t n, const RngPolicy& policy, std::uint64_t replicate = 0);
AnalyticState init_analytic(std::size_t d);

/// One reverse update t -> t-1, 2 <= t <= T:
/// y <- (y + eta_t s_t(y) + sigma_t z) / sqrt(alpha_t).
void reverse_step(SamplerState& state, int t, const CoefficientPlan& plan, const ScoreOracle& oracle, int threads = 1);

struct TrajectoryPoint {
    int t = 0; // state index after the step (the law of Y_t)
    std::vector<double> mean;
    std::vector<double> variance;
};

struct ReverseRunConfig {
    bool analytic = true;
    std::size_t n_particles = 0;
    std::uint64_t replicate = 0;
    int threads = 1;
    bool record_trajectory = false;
    /// Replaces the N(0, I) initialization of the analytic state.
    std::optional<GaussianLaw> initial_law;
};

struct ReverseRunResult {
    SamplerState final_state; // Y_1
    std::vector<TrajectoryPoint> trajectory; // Y_T, Y_{T-1}, ..., Y_1 when recorded
    int steps_taken = 0;
};

/// Folds reverse_step from t = T down to t = 2.
ReverseRunResult run_reverse(const CoefficientPlan& plan, const ScoreOracle& oracle, const ReverseRunConfig& config,
                             const RngPolicy& policy);

/// Law of an affine-score reverse step applied to `in`.
GaussianLaw propagate_law(const GaussianLaw& in, const AffineScore& score, double alpha, double eta, double sigma);

struct OneStepResult {
    ParticleMatrix samples; // Phi*_t(X_t, Z_t)
    GaussianLaw law;        // exact law of the same
};

/// Draws X_t from the forward marginal and applies one exact-score update.
/// Gaussian targets only.
OneStepResult one_step_from_truth(const TargetSpec& target, const StepLevels& levels, double eta, double sigma,
                                  std::size_t n, const RngPolicy& policy, std::uint64_t replicate = 0, int threads = 1);
/// Exact output law only.
GaussianLaw one_step_law(const TargetSpec& target, const StepLevels& levels, double eta, double sigma);

} // namespace ddlab
