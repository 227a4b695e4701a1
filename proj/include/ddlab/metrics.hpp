#pragma once

#include "ddlab/laws.hpp"
#include "ddlab/rng.hpp"
#include "ddlab/schedule.hpp"
#include "ddlab/targets.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace ddlab {

struct TvEstimate {
    double estimate = 0.0;
    double half_width = 0.0; // 95% normal-approximation CI
    std::size_t n_samples = 0;
};

/// D = ||Sigma1^{-1} Sigma2 - I||_F for same-mean diagonal laws, plus the
/// two-sided bracket it gives on TV: [min{1,D}/100, min{1, 1.5 min{1,D}}].
struct FrobeniusProxy {
    double D = 0.0;
    double tv_lower = 0.0;
    double tv_upper = 0.0;
};

FrobeniusProxy gaussian_frob_proxy(const GaussianLaw& law1, const GaussianLaw& law2);

/// ||Sigma1^{-1/2}(m2 - m1)||, the mean-shift counterpart of the proxy.
double mahalanobis_shift(const GaussianLaw& law1, const GaussianLaw& law2);

using LogDensityFn = std::function<double(std::span<const double>)>;
using SamplerFn = std::function<void(Stream&, std::span<double>)>;

/// Sample-block size for tv_monte_carlo. Fixed so that totals do not depend
/// on the thread count.
inline constexpr std::size_t kTvBlock = 4096;

/// TV(p, q) = E_p[(1 - q/p)_+]. Block b draws from substream
/// (policy, "tv_mc", replicate, b); block sums are reduced in block order.
TvEstimate tv_monte_carlo(const LogDensityFn& log_p, const LogDensityFn& log_q, const SamplerFn& sample_p,
                          std::size_t d, std::size_t n, const RngPolicy& policy, std::uint64_t replicate = 0,
                          int threads = 1);

/// Same estimator on samples already drawn from p.
TvEstimate tv_from_samples(const ParticleMatrix& samples_from_p, const LogDensityFn& log_p, const LogDensityFn& log_q);

/// Half the L1 distance between two 1D centered Gaussians by adaptive
/// trapezoid over +-12 of the larger standard deviation, refined until
/// successive estimates differ by < 1e-8.
double tv_quadrature_1d(double var1, double var2);

/// Exact TV between two centered diagonal Gaussians when they differ in at
/// most one coordinate (quadrature), otherwise Monte Carlo.
TvEstimate tv_diag_gaussians(const GaussianLaw& law1, const GaussianLaw& law2, std::size_t n, const RngPolicy& policy,
                             std::uint64_t replicate = 0, int threads = 1);

/// KL(law1 || law2) for diagonal Gaussians. law2 must be nondegenerate.
double kl_diag_gaussian(const GaussianLaw& law1, const GaussianLaw& law2);

/// (1/100) min{ sqrt(d/2) |(1-abar)/(alpha-abar) (1 - eta/(1-abar))^2 + sigma^2/(alpha-abar) - 1|, 1 }.
double one_step_lower_bound(const StepLevels& levels, double eta, double sigma, std::size_t d);
/// Schedule form; requires 2 <= t <= T.
double one_step_lower_bound(const NoiseSchedule& s, int t, double eta, double sigma, std::size_t d);

struct TracePoint {
    int t = 0;
    double alpha_bar = 0.0;
    double mean = 0.0;      // MC estimate of E[tr Cov_{0|t}(X_t)]
    double std_error = 0.0;
};

/// For each t, averages tr Cov_{0|t}(X_t) over n forward draws from
/// substream family (policy, "posterior_trace", t, i).
std::vector<TracePoint> posterior_trace_curve(const TargetSpec& target, const NoiseSchedule& s, std::size_t n,
                                              const RngPolicy& policy, int threads = 1);

} // namespace ddlab
