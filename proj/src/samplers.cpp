#include "ddlab/samplers.hpp"

#include "ddlab/errors.hpp"
#include "ddlab/parallel.hpp"

#include <cmath>

namespace ddlab {

std::uint64_t Ensemble::draws_consumed() const
{
    std::uint64_t total = 0;
    for (const auto& s : streams)
        total += s.position();
    return total;
}

Ensemble init_ensemble(std::size_t d, std::size_t n, const RngPolicy& policy, std::uint64_t replicate)
{
    if (n == 0)
        throw NumericError("empty ensemble");
    Ensemble e{ParticleMatrix(n, d), {}};
    e.streams.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        e.streams.push_back(policy.stream("reverse", replicate, i));
        for (auto& v : e.particles.row(i))
            v = e.streams.back().normal();
    }
    return e;
}

AnalyticState init_analytic(std::size_t d)
{
    return {GaussianLaw::standard(d)};
}

GaussianLaw propagate_law(const GaussianLaw& in, const AffineScore& score, double alpha, double eta, double sigma)
{
    GaussianLaw out = in;
    const double sqrt_alpha = std::sqrt(alpha);
    for (std::size_t i = 0; i < in.dim(); ++i) {
        const double gain = 1.0 + eta * score.slope[i];
        out.mean[i] = (gain * in.mean[i] + eta * score.offset[i]) / sqrt_alpha;
        out.cov_diag[i] = (gain * gain * in.cov_diag[i] + sigma * sigma) / alpha;
    }
    return out;
}

void reverse_step(SamplerState& state, int t, const CoefficientPlan& plan, const ScoreOracle& oracle, int threads)
{
    const auto& sched = oracle.schedule();
    if (t < 2 || t > sched.T())
        throw NumericError("reverse step index must satisfy 2 <= t <= T");
    const double alpha = sched.alpha(t);
    const double eta = plan.eta_at(t);
    const double sigma = plan.sigma_at(t);

    if (auto* an = std::get_if<AnalyticState>(&state)) {
        an->law = propagate_law(an->law, oracle.affine_score(t), alpha, eta, sigma);
        return;
    }

    auto& ens = std::get<Ensemble>(state);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
    parallel_for(ens.particles.n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            auto y = ens.particles.row(p);
            const auto s = oracle.score(t, y);
            for (std::size_t i = 0; i < y.size(); ++i) {
                double next = y[i] + eta * s[i];
                if (sigma != 0.0)
                    next += sigma * ens.streams[p].normal();
                y[i] = next * inv_sqrt_alpha;
            }
        }
    });
}

namespace {

TrajectoryPoint snapshot(const SamplerState& state, int t)
{
    if (const auto* an = std::get_if<AnalyticState>(&state))
        return {t, an->law.mean, an->law.cov_diag};
    const auto& ens = std::get<Ensemble>(state);
    return {t, ens.particles.column_means(), ens.particles.column_variances()};
}

} // namespace

ReverseRunResult run_reverse(const CoefficientPlan& plan, const ScoreOracle& oracle, const ReverseRunConfig& config,
                             const RngPolicy& policy)
{
    const int T = oracle.schedule().T();
    if (plan.T() != T)
        throw NumericError("coefficient plan horizon does not match the schedule");
    const std::size_t d = oracle.target().dim();

    ReverseRunResult result;
    if (config.analytic) {
        if (!oracle.affine())
            throw NumericError("analytic propagation unavailable: score is not affine for this target");
        AnalyticState st = config.initial_law ? AnalyticState{*config.initial_law} : init_analytic(d);
        if (st.law.dim() != d)
            throw NumericError("initial law dimension does not match the target");
        result.final_state = std::move(st);
    } else {
        result.final_state = init_ensemble(d, config.n_particles, policy, config.replicate);
    }

    if (config.record_trajectory)
        result.trajectory.push_back(snapshot(result.final_state, T));
    for (int t = T; t >= 2; --t) {
        reverse_step(result.final_state, t, plan, oracle, config.threads);
        ++result.steps_taken;
        if (config.record_trajectory)
            result.trajectory.push_back(snapshot(result.final_state, t - 1));
    }
    return result;
}

GaussianLaw one_step_law(const TargetSpec& target, const StepLevels& levels, double eta, double sigma)
{
    if (!target.is_gaussian())
        throw NumericError("one-step law requires a Gaussian target");
    const auto v = target.data_variances();
    GaussianLaw in = GaussianLaw::centered(std::vector<double>(v.size()));
    AffineScore score{std::vector<double>(v.size()), std::vector<double>(v.size(), 0.0)};
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double var_t = levels.alpha_bar * v[i] + levels.one_minus_alpha_bar;
        in.cov_diag[i] = var_t;
        score.slope[i] = -1.0 / var_t;
    }
    return propagate_law(in, score, levels.alpha, eta, sigma);
}

OneStepResult one_step_from_truth(const TargetSpec& target, const StepLevels& levels, double eta, double sigma,
                                  std::size_t n, const RngPolicy& policy, std::uint64_t replicate, int threads)
{
    OneStepResult out{ParticleMatrix(n, target.dim()), one_step_law(target, levels, eta, sigma)};
    const double inv_sqrt_alpha = 1.0 / std::sqrt(levels.alpha);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            Stream stream = policy.stream("one_step", replicate, p);
            auto y = out.samples.row(p);
            sample_forward_into(target, levels.alpha_bar, stream, y);
            const auto s = exact_score(target, levels.alpha_bar, y);
            for (std::size_t i = 0; i < y.size(); ++i)
                y[i] = (y[i] + eta * s[i] + sigma * stream.normal()) * inv_sqrt_alpha;
        }
    });
    return out;
}

} // namespace ddlab
