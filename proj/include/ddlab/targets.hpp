#pragma once

#include "ddlab/laws.hpp"
#include "ddlab/rng.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ddlab {

namespace target {
/// N(0, diag(I_k, 0)) in R^d.
struct LowRankGaussian {
    std::size_t d = 1;
    std::size_t k = 1;
};
/// N(0, diag(variances)).
struct DiagGaussian {
    std::vector<double> variances;
};
/// Weighted point masses. `declared_k` is a label, not a computed covering number.
struct AtomMixture {
    std::vector<std::vector<double>> atoms;
    std::vector<double> weights;
    std::size_t declared_k = 0;
};
} // namespace target

using TargetKind = std::variant<target::LowRankGaussian, target::DiagGaussian, target::AtomMixture>;

/// A validated data distribution plus its structural metadata.
class TargetSpec {
public:
    static TargetSpec low_rank_gaussian(std::size_t d, std::size_t k);
    static TargetSpec diag_gaussian(std::vector<double> variances);
    /// Throws if weights are not a probability vector or some atom lies
    /// outside `support_radius` (a negative radius means "use the max norm").
    static TargetSpec atom_mixture(std::vector<std::vector<double>> atoms, std::vector<double> weights,
                                   std::size_t declared_k, double support_radius = -1.0);

    const TargetKind& kind() const { return kind_; }
    std::size_t dim() const { return dim_; }
    std::size_t k_intrinsic() const { return k_; }
    /// Infinite for the Gaussian targets.
    double support_radius() const { return radius_; }
    bool is_gaussian() const { return !std::holds_alternative<target::AtomMixture>(kind_); }
    /// Diagonal data covariance; Gaussian targets only.
    std::vector<double> data_variances() const;
    std::string name() const;

private:
    TargetSpec(TargetKind kind, std::size_t dim, std::size_t k, double radius)
        : kind_(std::move(kind)), dim_(dim), k_(k), radius_(radius) {}

    TargetKind kind_;
    std::size_t dim_;
    std::size_t k_;
    double radius_;
};

using MarginalLaw = std::variant<GaussianLaw, GaussianMixtureLaw>;

/// Law of X_t = sqrt(abar) X_0 + sqrt(1 - abar) W. Requires abar in (0, 1];
/// abar = 1 is the data law itself.
MarginalLaw forward_marginal(const TargetSpec& target, double abar);
/// Same, for Gaussian targets only.
GaussianLaw forward_gaussian(const TargetSpec& target, double abar);

double log_density(const GaussianLaw& law, std::span<const double> x);
double log_density(const GaussianMixtureLaw& law, std::span<const double> x);
double log_density_t(const TargetSpec& target, double abar, std::span<const double> x);

/// Stable log(sum(exp(v))).
double log_sum_exp(std::span<const double> v);

ParticleMatrix sample_x0(const TargetSpec& target, Stream& stream, std::size_t n);
void sample_x0_into(const TargetSpec& target, Stream& stream, std::span<double> out);
/// One draw of X_t.
void sample_forward_into(const TargetSpec& target, double abar, Stream& stream, std::span<double> out);

} // namespace ddlab
