#include "ddlab/metrics.hpp"

#include "ddlab/moments.hpp"
#include "ddlab/errors.hpp"
#include "ddlab/parallel.hpp"
#include "ddlab/scores.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace ddlab {

FrobeniusProxy gaussian_frob_proxy(const GaussianLaw& law1, const GaussianLaw& law2)
{
    if (law1.dim() != law2.dim())
        throw NumericError("proxy undefined: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < law1.dim(); ++i) {
        if (!(law1.cov_diag[i] > 0.0))
            throw NumericError("proxy undefined: zero variance in the reference law");
        const double r = law2.cov_diag[i] / law1.cov_diag[i] - 1.0;
        acc += r * r;
    }
    FrobeniusProxy p;
    p.D = std::sqrt(acc);
    const double capped = std::min(1.0, p.D);
    p.tv_lower = capped / 100.0;
    p.tv_upper = std::min(1.0, 1.5 * capped);
    return p;
}

double mahalanobis_shift(const GaussianLaw& law1, const GaussianLaw& law2)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < law1.dim(); ++i) {
        const double m1 = law1.mean.empty() ? 0.0 : law1.mean[i];
        const double m2 = law2.mean.empty() ? 0.0 : law2.mean[i];
        acc += (m2 - m1) * (m2 - m1) / law1.cov_diag[i];
    }
    return std::sqrt(acc);
}

namespace {

TvEstimate finish(const std::vector<RunningMoments>& blocks)
{
    RunningMoments total;
    for (const auto& b : blocks)
        total.merge(b);
    TvEstimate est;
    est.n_samples = total.count;
    est.estimate = std::clamp(total.mean, 0.0, 1.0);
    // A single draw says nothing about spread; use the largest variance a [0, 1] summand can have.
    const double var = total.count > 1 ? total.variance() : 0.25;
    est.half_width = 1.96 * std::sqrt(var / static_cast<double>(total.count));
    return est;
}

double tv_summand(double log_p, double log_q)
{
    // (1 - q/p)_+ ; q = 0 gives 1.
    const double ratio = std::exp(log_q - log_p);
    return ratio < 1.0 ? 1.0 - ratio : 0.0;
}

} // namespace

TvEstimate tv_monte_carlo(const LogDensityFn& log_p, const LogDensityFn& log_q, const SamplerFn& sample_p,
                          std::size_t d, std::size_t n, const RngPolicy& policy, std::uint64_t replicate, int threads)
{
    if (n == 0)
        throw NumericError("tv estimate needs at least one sample");
    const std::size_t blocks = (n + kTvBlock - 1) / kTvBlock;
    std::vector<RunningMoments> partial(blocks);
    parallel_for(blocks, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> x(d);
        for (std::size_t b = begin; b < end; ++b) {
            Stream stream = policy.stream("tv_mc", replicate, b);
            const std::size_t count = std::min(kTvBlock, n - b * kTvBlock);
            RunningMoments m;
            for (std::size_t i = 0; i < count; ++i) {
                sample_p(stream, x);
                m.add(tv_summand(log_p(x), log_q(x)));
            }
            partial[b] = m;
        }
    });
    return finish(partial);
}

TvEstimate tv_from_samples(const ParticleMatrix& samples_from_p, const LogDensityFn& log_p, const LogDensityFn& log_q)
{
    if (samples_from_p.n == 0)
        throw NumericError("tv estimate needs at least one sample");
    RunningMoments m;
    for (std::size_t i = 0; i < samples_from_p.n; ++i) {
        const auto x = samples_from_p.row(i);
        m.add(tv_summand(log_p(x), log_q(x)));
    }
    return finish({m});
}

double tv_quadrature_1d(double var1, double var2)
{
    if (!(var1 > 0.0) || !(var2 > 0.0))
        throw NumericError("quadrature TV needs positive variances");
    const double s1 = std::sqrt(var1);
    const double s2 = std::sqrt(var2);
    const double half_range = 12.0 * std::max(s1, s2);
    const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    auto integrand = [&](double x) {
        const double p = c / s1 * std::exp(-0.5 * x * x / var1);
        const double q = c / s2 * std::exp(-0.5 * x * x / var2);
        return 0.5 * std::abs(p - q);
    };
    // Symmetric integrand: integrate [0, half_range] and double.
    std::size_t intervals = 64;
    double h = half_range / static_cast<double>(intervals);
    double sum = 0.5 * (integrand(0.0) + integrand(half_range));
    for (std::size_t i = 1; i < intervals; ++i)
        sum += integrand(static_cast<double>(i) * h);
    double estimate = 2.0 * h * sum;
    for (int level = 0; level < 30; ++level) {
        // Halve the spacing: add the midpoints of the current grid.
        double mid = 0.0;
        for (std::size_t i = 0; i < intervals; ++i)
            mid += integrand((static_cast<double>(i) + 0.5) * h);
        sum += mid;
        intervals *= 2;
        h /= 2.0;
        const double refined = 2.0 * h * sum;
        const bool done = std::abs(refined - estimate) < 1e-8;
        estimate = refined;
        if (done && level >= 2)
            break;
    }
    return std::min(estimate, 1.0);
}

TvEstimate tv_diag_gaussians(const GaussianLaw& law1, const GaussianLaw& law2, std::size_t n, const RngPolicy& policy,
                             std::uint64_t replicate, int threads)
{
    std::vector<std::size_t> differing;
    for (std::size_t i = 0; i < law1.dim(); ++i)
        if (law1.cov_diag[i] != law2.cov_diag[i])
            differing.push_back(i);
    if (differing.empty())
        return {0.0, 0.0, 0};
    if (differing.size() == 1) {
        const std::size_t i = differing.front();
        return {tv_quadrature_1d(law1.cov_diag[i], law2.cov_diag[i]), 0.0, 0};
    }
    auto log_p = [&](std::span<const double> x) { return log_density(law1, x); };
    auto log_q = [&](std::span<const double> x) { return log_density(law2, x); };
    auto sample = [&](Stream& s, std::span<double> x) {
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = (law1.mean.empty() ? 0.0 : law1.mean[i]) + std::sqrt(law1.cov_diag[i]) * s.normal();
    };
    return tv_monte_carlo(log_p, log_q, sample, law1.dim(), n, policy, replicate, threads);
}

double kl_diag_gaussian(const GaussianLaw& law1, const GaussianLaw& law2)
{
    if (law1.dim() != law2.dim())
        throw NumericError("KL undefined: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < law1.dim(); ++i) {
        const double v1 = law1.cov_diag[i];
        const double v2 = law2.cov_diag[i];
        if (!(v2 > 0.0))
            throw NumericError("KL undefined: degenerate entry in the second law");
        const double m1 = law1.mean.empty() ? 0.0 : law1.mean[i];
        const double m2 = law2.mean.empty() ? 0.0 : law2.mean[i];
        acc += v1 / v2 + (m2 - m1) * (m2 - m1) / v2 - 1.0 + std::log(v2 / v1);
    }
    return 0.5 * acc;
}

double one_step_lower_bound(const StepLevels& lv, double eta, double sigma, std::size_t d)
{
    if (!(lv.alpha_minus_alpha_bar > 0.0))
        throw NumericError("degenerate step: alpha_t equals alpha_bar_t");
    const double shrink = 1.0 - eta / lv.one_minus_alpha_bar;
    const double inner = lv.one_minus_alpha_bar / lv.alpha_minus_alpha_bar * shrink * shrink +
                         sigma * sigma / lv.alpha_minus_alpha_bar - 1.0;
    return std::min(std::sqrt(static_cast<double>(d) / 2.0) * std::abs(inner), 1.0) / 100.0;
}

double one_step_lower_bound(const NoiseSchedule& s, int t, double eta, double sigma, std::size_t d)
{
    if (t < 2 || t > s.T())
        throw NumericError("degenerate step: lower bound needs 2 <= t <= T");
    return one_step_lower_bound(s.levels(t), eta, sigma, d);
}

std::vector<TracePoint> posterior_trace_curve(const TargetSpec& target, const NoiseSchedule& s, std::size_t n,
                                              const RngPolicy& policy, int threads)
{
    if (n == 0)
        throw NumericError("posterior trace needs at least one sample");
    const int T = s.T();
    std::vector<TracePoint> curve(static_cast<std::size_t>(T));
    parallel_for(static_cast<std::size_t>(T), threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> x(target.dim());
        for (std::size_t idx = begin; idx < end; ++idx) {
            const int t = static_cast<int>(idx) + 1;
            const double abar = s.alpha_bar(t);
            RunningMoments m;
            for (std::size_t i = 0; i < n; ++i) {
                Stream stream = policy.stream("posterior_trace", static_cast<std::uint64_t>(t), i);
                sample_forward_into(target, abar, stream, x);
                const auto cov = posterior_cov_diag(target, abar, x);
                m.add(std::accumulate(cov.begin(), cov.end(), 0.0));
            }
            curve[idx] = {t, abar, m.mean, m.std_error()};
        }
    });
    return curve;
}

} // namespace ddlab
