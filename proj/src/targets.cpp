#include "ddlab/targets.hpp"

#include "ddlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace ddlab {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void check_noise_level(double abar)
{
    if (!(abar > 0.0 && abar <= 1.0))
        throw NumericError("invalid noise level: abar = " + std::to_string(abar));
}

} // namespace

std::vector<double> ParticleMatrix::column_means() const
{
    std::vector<double> m(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            m[j] += values[i * d + j];
    for (auto& v : m)
        v /= static_cast<double>(n);
    return m;
}

std::vector<double> ParticleMatrix::column_variances() const
{
    const auto m = column_means();
    std::vector<double> var(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = values[i * d + j] - m[j];
            var[j] += c * c;
        }
    for (auto& v : var)
        v /= static_cast<double>(n > 1 ? n - 1 : 1);
    return var;
}

TargetSpec TargetSpec::low_rank_gaussian(std::size_t d, std::size_t k)
{
    if (k < 1 || k > d)
        throw ConfigError("low-rank Gaussian requires 1 <= k <= d");
    return TargetSpec(target::LowRankGaussian{d, k}, d, k, std::numeric_limits<double>::infinity());
}

TargetSpec TargetSpec::diag_gaussian(std::vector<double> variances)
{
    if (variances.empty())
        throw ConfigError("diagonal Gaussian requires at least one variance");
    for (double v : variances)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ConfigError("diagonal Gaussian variances must be finite and nonnegative");
    const auto k = static_cast<std::size_t>(std::count_if(variances.begin(), variances.end(), [](double v) { return v > 0.0; }));
    const std::size_t d = variances.size();
    return TargetSpec(target::DiagGaussian{std::move(variances)}, d, k, std::numeric_limits<double>::infinity());
}

TargetSpec TargetSpec::atom_mixture(std::vector<std::vector<double>> atoms, std::vector<double> weights,
                                    std::size_t declared_k, double support_radius)
{
    if (atoms.empty() || atoms.size() != weights.size())
        throw ConfigError("atom mixture needs one weight per atom");
    const std::size_t d = atoms.front().size();
    if (d == 0)
        throw ConfigError("atom mixture atoms must have dimension >= 1");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0))
            throw ConfigError("atom mixture weights must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw ConfigError("atom mixture weights must sum to 1");
    double max_norm = 0.0;
    for (const auto& a : atoms) {
        if (a.size() != d)
            throw ConfigError("atom mixture atoms must share one dimension");
        max_norm = std::max(max_norm, std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0)));
    }
    if (support_radius < 0.0)
        support_radius = max_norm;
    else if (max_norm > support_radius)
        throw ConfigError("atom outside declared support radius");
    return TargetSpec(target::AtomMixture{std::move(atoms), std::move(weights), declared_k}, d, declared_k, support_radius);
}

std::vector<double> TargetSpec::data_variances() const
{
    if (const auto* lr = std::get_if<target::LowRankGaussian>(&kind_)) {
        std::vector<double> v(lr->d, 0.0);
        std::fill(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lr->k), 1.0);
        return v;
    }
    if (const auto* dg = std::get_if<target::DiagGaussian>(&kind_))
        return dg->variances;
    throw NumericError("data variances requested for a non-Gaussian target");
}

std::string TargetSpec::name() const
{
    if (std::holds_alternative<target::LowRankGaussian>(kind_)) return "low_rank_gaussian";
    if (std::holds_alternative<target::DiagGaussian>(kind_)) return "diag_gaussian";
    return "atom_mixture";
}

GaussianLaw forward_gaussian(const TargetSpec& target, double abar)
{
    check_noise_level(abar);
    auto v = target.data_variances();
    for (auto& c : v)
        c = abar * c + (1.0 - abar);
    return GaussianLaw::centered(std::move(v));
}

MarginalLaw forward_marginal(const TargetSpec& target, double abar)
{
    check_noise_level(abar);
    if (target.is_gaussian())
        return forward_gaussian(target, abar);
    const auto& mix = std::get<target::AtomMixture>(target.kind());
    GaussianMixtureLaw law;
    law.weights = mix.weights;
    law.variance = 1.0 - abar;
    const double scale = std::sqrt(abar);
    for (const auto& a : mix.atoms) {
        std::vector<double> m(a.size());
        std::transform(a.begin(), a.end(), m.begin(), [scale](double x) { return scale * x; });
        law.means.push_back(std::move(m));
    }
    return law;
}

double log_sum_exp(std::span<const double> v)
{
    if (v.empty())
        return -std::numeric_limits<double>::infinity();
    const double top = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(top))
        return top;
    double acc = 0.0;
    for (double x : v)
        acc += std::exp(x - top);
    return top + std::log(acc);
}

double log_density(const GaussianLaw& law, std::span<const double> x)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < law.dim(); ++i) {
        const double var = law.cov_diag[i];
        if (!(var > 0.0))
            throw NumericError("density undefined: degenerate covariance entry");
        const double c = x[i] - (law.mean.empty() ? 0.0 : law.mean[i]);
        acc += -0.5 * (kLog2Pi + std::log(var) + c * c / var);
    }
    return acc;
}

double log_density(const GaussianMixtureLaw& law, std::span<const double> x)
{
    if (!(law.variance > 0.0))
        throw NumericError("density undefined: mixture components are point masses");
    const std::size_t d = x.size();
    std::vector<double> terms;
    terms.reserve(law.weights.size());
    for (std::size_t c = 0; c < law.weights.size(); ++c) {
        if (law.weights[c] == 0.0)
            continue;
        double sq = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double r = x[i] - law.means[c][i];
            sq += r * r;
        }
        terms.push_back(std::log(law.weights[c]) - 0.5 * sq / law.variance);
    }
    return log_sum_exp(terms) - 0.5 * static_cast<double>(d) * (kLog2Pi + std::log(law.variance));
}

double log_density_t(const TargetSpec& target, double abar, std::span<const double> x)
{
    const auto law = forward_marginal(target, abar);
    return std::visit([x](const auto& l) { return log_density(l, x); }, law);
}

void sample_x0_into(const TargetSpec& target, Stream& stream, std::span<double> out)
{
    if (const auto* lr = std::get_if<target::LowRankGaussian>(&target.kind())) {
        for (std::size_t i = 0; i < lr->d; ++i)
            out[i] = i < lr->k ? stream.normal() : 0.0;
    } else if (const auto* dg = std::get_if<target::DiagGaussian>(&target.kind())) {
        for (std::size_t i = 0; i < dg->variances.size(); ++i)
            out[i] = dg->variances[i] > 0.0 ? std::sqrt(dg->variances[i]) * stream.normal() : 0.0;
    } else {
        const auto& mix = std::get<target::AtomMixture>(target.kind());
        const double u = stream.uniform();
        double cum = 0.0;
        std::size_t pick = mix.weights.size() - 1;
        for (std::size_t c = 0; c < mix.weights.size(); ++c) {
            cum += mix.weights[c];
            if (u < cum) {
                pick = c;
                break;
            }
        }
        std::copy(mix.atoms[pick].begin(), mix.atoms[pick].end(), out.begin());
    }
}

ParticleMatrix sample_x0(const TargetSpec& target, Stream& stream, std::size_t n)
{
    if (n == 0)
        throw NumericError("sample count must be >= 1");
    ParticleMatrix pts(n, target.dim());
    for (std::size_t i = 0; i < n; ++i)
        sample_x0_into(target, stream, pts.row(i));
    return pts;
}

void sample_forward_into(const TargetSpec& target, double abar, Stream& stream, std::span<double> out)
{
    sample_x0_into(target, stream, out);
    const double a = std::sqrt(abar);
    const double b = std::sqrt(1.0 - abar);
    for (auto& v : out)
        v = a * v + b * stream.normal();
}

} // namespace ddlab
