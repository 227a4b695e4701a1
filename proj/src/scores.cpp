#include "ddlab/scores.hpp"

#include "ddlab/errors.hpp"
#include "ddlab/moments.hpp"
#include "ddlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ddlab {

namespace {

void check_level(double abar)
{
    if (!(abar >= 0.0 && abar < 1.0))
        throw NumericError("posterior quantities need abar in [0, 1), got " + std::to_string(abar));
}

/// Softmax weights of the atoms given x at level abar.
std::vector<double> atom_posterior(const target::AtomMixture& mix, double abar, std::span<const double> x)
{
    const double scale = std::sqrt(abar);
    const double noise = 1.0 - abar;
    std::vector<double> logits(mix.weights.size());
    for (std::size_t c = 0; c < mix.weights.size(); ++c) {
        double sq = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = x[i] - scale * mix.atoms[c][i];
            sq += r * r;
        }
        logits[c] = std::log(mix.weights[c]) - 0.5 * sq / noise;
    }
    const double lse = log_sum_exp(logits);
    for (auto& l : logits)
        l = std::exp(l - lse);
    return logits;
}

template <typename Vec>
const Vec& step_entry(const std::vector<Vec>& v, int t)
{
    return v.size() == 1 ? v.front() : v.at(static_cast<std::size_t>(t - 1));
}

} // namespace

std::vector<double> posterior_mean(const TargetSpec& target, double abar, std::span<const double> x)
{
    check_level(abar);
    std::vector<double> mu(target.dim(), 0.0);
    if (target.is_gaussian()) {
        const auto v = target.data_variances();
        const double scale = std::sqrt(abar);
        for (std::size_t i = 0; i < mu.size(); ++i)
            mu[i] = scale * v[i] / (abar * v[i] + 1.0 - abar) * x[i];
        return mu;
    }
    const auto& mix = std::get<target::AtomMixture>(target.kind());
    const auto p = atom_posterior(mix, abar, x);
    for (std::size_t c = 0; c < p.size(); ++c)
        for (std::size_t i = 0; i < mu.size(); ++i)
            mu[i] += p[c] * mix.atoms[c][i];
    return mu;
}

std::vector<double> posterior_cov_diag(const TargetSpec& target, double abar, std::span<const double> x)
{
    check_level(abar);
    std::vector<double> cov(target.dim(), 0.0);
    if (target.is_gaussian()) {
        const auto v = target.data_variances();
        for (std::size_t i = 0; i < cov.size(); ++i)
            cov[i] = (1.0 - abar) * v[i] / (abar * v[i] + 1.0 - abar);
        return cov;
    }
    const auto& mix = std::get<target::AtomMixture>(target.kind());
    const auto p = atom_posterior(mix, abar, x);
    std::vector<double> mu(target.dim(), 0.0);
    for (std::size_t c = 0; c < p.size(); ++c)
        for (std::size_t i = 0; i < mu.size(); ++i)
            mu[i] += p[c] * mix.atoms[c][i];
    // Centered second moment; nonnegative by construction.
    for (std::size_t c = 0; c < p.size(); ++c)
        for (std::size_t i = 0; i < cov.size(); ++i) {
            const double r = mix.atoms[c][i] - mu[i];
            cov[i] += p[c] * r * r;
        }
    return cov;
}

std::vector<double> exact_score(const TargetSpec& target, double abar, std::span<const double> x)
{
    check_level(abar);
    std::vector<double> s(target.dim());
    if (target.is_gaussian()) {
        // (sqrt(abar) mu - x)/(1 - abar) collapses to -x / (abar v + 1 - abar).
        const auto v = target.data_variances();
        for (std::size_t i = 0; i < s.size(); ++i)
            s[i] = -x[i] / (abar * v[i] + 1.0 - abar);
        return s;
    }
    const auto mu = posterior_mean(target, abar, x);
    const double scale = std::sqrt(abar);
    for (std::size_t i = 0; i < s.size(); ++i)
        s[i] = (scale * mu[i] - x[i]) / (1.0 - abar);
    return s;
}

std::vector<double> exact_score_jacobian_diag(const TargetSpec& target, double abar, std::span<const double> x)
{
    check_level(abar);
    std::vector<double> j(target.dim());
    if (target.is_gaussian()) {
        const auto v = target.data_variances();
        for (std::size_t i = 0; i < j.size(); ++i)
            j[i] = -1.0 / (abar * v[i] + 1.0 - abar);
        return j;
    }
    const auto cov = posterior_cov_diag(target, abar, x);
    const double noise = 1.0 - abar;
    for (std::size_t i = 0; i < j.size(); ++i)
        j[i] = abar / (noise * noise) * cov[i] - 1.0 / noise;
    return j;
}

PerturbationSpec PerturbationSpec::constant_shift(std::vector<double> direction, std::vector<double> magnitude, int T)
{
    const double norm = std::sqrt(std::inner_product(direction.begin(), direction.end(), direction.begin(), 0.0));
    if (!(norm > 0.0))
        throw ConfigError("perturbation direction must be nonzero");
    for (auto& v : direction)
        v /= norm;
    if (magnitude.empty() || (magnitude.size() != 1 && static_cast<int>(magnitude.size()) != T))
        throw ConfigError("perturbation magnitude needs 1 or T entries");
    double acc = 0.0;
    for (int t = 1; t <= T; ++t) {
        const double m = step_entry(magnitude, t);
        acc += m * m;
    }
    PerturbationSpec spec{perturbation::ConstantShift{std::move(direction), std::move(magnitude)}, std::sqrt(acc / T)};
    return spec;
}

PerturbationSpec PerturbationSpec::linear_field(std::vector<std::vector<double>> diag, double declared_epsilon)
{
    if (diag.empty())
        throw ConfigError("linear-field perturbation needs at least one diagonal");
    return PerturbationSpec{perturbation::LinearField{std::move(diag)}, declared_epsilon};
}

ScoreOracle::ScoreOracle(TargetSpec target, NoiseSchedule schedule, std::optional<PerturbationSpec> perturbation)
    : target_(std::move(target)), schedule_(std::move(schedule)), perturbation_(std::move(perturbation))
{
    if (!perturbation_)
        return;
    const std::size_t d = target_.dim();
    if (const auto* cs = std::get_if<perturbation::ConstantShift>(&perturbation_->kind)) {
        if (cs->direction.size() != d)
            throw ConfigError("perturbation direction dimension does not match the target");
        if (cs->magnitude.size() != 1 && static_cast<int>(cs->magnitude.size()) != schedule_.T())
            throw ConfigError("perturbation magnitude needs 1 or T entries");
    } else {
        const auto& lf = std::get<perturbation::LinearField>(perturbation_->kind);
        if (lf.diag.size() != 1 && static_cast<int>(lf.diag.size()) != schedule_.T())
            throw ConfigError("linear-field perturbation needs 1 or T diagonals");
        for (const auto& row : lf.diag)
            if (row.size() != d)
                throw ConfigError("linear-field diagonal dimension does not match the target");
    }
}

std::vector<double> ScoreOracle::posterior_mean(int t, std::span<const double> x) const
{
    return ddlab::posterior_mean(target_, schedule_.alpha_bar(t), x);
}

std::vector<double> ScoreOracle::posterior_cov_diag(int t, std::span<const double> x) const
{
    return ddlab::posterior_cov_diag(target_, schedule_.alpha_bar(t), x);
}

std::vector<double> ScoreOracle::score_error(int t, std::span<const double> x) const
{
    std::vector<double> e(target_.dim(), 0.0);
    if (!perturbation_)
        return e;
    if (const auto* cs = std::get_if<perturbation::ConstantShift>(&perturbation_->kind)) {
        const double m = step_entry(cs->magnitude, t);
        for (std::size_t i = 0; i < e.size(); ++i)
            e[i] = m * cs->direction[i];
    } else {
        const auto& diag = step_entry(std::get<perturbation::LinearField>(perturbation_->kind).diag, t);
        for (std::size_t i = 0; i < e.size(); ++i)
            e[i] = diag[i] * x[i];
    }
    return e;
}

std::vector<double> ScoreOracle::score(int t, std::span<const double> x) const
{
    auto s = exact_score(target_, schedule_.alpha_bar(t), x);
    if (perturbation_) {
        const auto e = score_error(t, x);
        for (std::size_t i = 0; i < s.size(); ++i)
            s[i] += e[i];
    }
    return s;
}

std::vector<double> ScoreOracle::score_jacobian_diag(int t, std::span<const double> x) const
{
    auto j = exact_score_jacobian_diag(target_, schedule_.alpha_bar(t), x);
    if (perturbation_) {
        if (const auto* lf = std::get_if<perturbation::LinearField>(&perturbation_->kind)) {
            const auto& diag = step_entry(lf->diag, t);
            for (std::size_t i = 0; i < j.size(); ++i)
                j[i] += diag[i];
        }
    }
    return j;
}

bool ScoreOracle::affine() const
{
    return target_.is_gaussian();
}

AffineScore ScoreOracle::affine_score(int t) const
{
    if (!affine())
        throw NumericError("analytic propagation unavailable: score is not affine for this target");
    const std::vector<double> origin(target_.dim(), 0.0);
    AffineScore a;
    a.slope = score_jacobian_diag(t, origin);
    a.offset = score(t, origin);
    return a;
}

double ScoreOracle::analytic_epsilon_score() const
{
    if (!perturbation_)
        return 0.0;
    const int T = schedule_.T();
    double acc = 0.0;
    if (const auto* cs = std::get_if<perturbation::ConstantShift>(&perturbation_->kind)) {
        for (int t = 1; t <= T; ++t) {
            const double m = step_entry(cs->magnitude, t);
            acc += m * m;
        }
        return std::sqrt(acc / T);
    }
    const auto& lf = std::get<perturbation::LinearField>(perturbation_->kind);
    for (int t = 1; t <= T; ++t) {
        const auto law = forward_gaussian(target_, schedule_.alpha_bar(t));
        const auto& diag = step_entry(lf.diag, t);
        for (std::size_t i = 0; i < diag.size(); ++i)
            acc += diag[i] * diag[i] * law.cov_diag[i];
    }
    return std::sqrt(acc / T);
}

EpsilonAudit audit_score_error(const ScoreOracle& oracle, std::size_t n, const RngPolicy& policy)
{
    const int T = oracle.schedule().T();
    const std::size_t d = oracle.target().dim();
    RunningMoments m;
    std::vector<double> x(d);
    // Each replicate draws one X_t per step and averages the squared error over steps.
    for (std::size_t r = 0; r < n; ++r) {
        Stream stream = policy.stream("score_error_audit", 0, r);
        double per = 0.0;
        for (int t = 1; t <= T; ++t) {
            sample_forward_into(oracle.target(), oracle.schedule().alpha_bar(t), stream, x);
            const auto e = oracle.score_error(t, x);
            per += std::inner_product(e.begin(), e.end(), e.begin(), 0.0);
        }
        per /= T;
        m.add(per);
    }
    return {m.mean, m.std_error()};
}

} // namespace ddlab
