#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ddlab {

/// Gaussian with diagonal covariance.
struct GaussianLaw {
    std::vector<double> mean;
    std::vector<double> cov_diag;

    std::size_t dim() const { return cov_diag.size(); }
    static GaussianLaw standard(std::size_t d) { return {std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)}; }
    static GaussianLaw centered(std::vector<double> cov_diag)
    {
        const std::size_t d = cov_diag.size();
        return {std::vector<double>(d, 0.0), std::move(cov_diag)};
    }
};

/// Mixture of isotropic Gaussians sharing one variance.
struct GaussianMixtureLaw {
    std::vector<std::vector<double>> means;
    std::vector<double> weights;
    double variance = 1.0;
};

/// Row-major n x d block of points.
struct ParticleMatrix {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> values;

    ParticleMatrix() = default;
    ParticleMatrix(std::size_t rows, std::size_t cols) : n(rows), d(cols), values(rows * cols, 0.0) {}

    std::span<double> row(std::size_t i) { return {values.data() + i * d, d}; }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * d, d}; }

    std::vector<double> column_means() const;
    /// Unbiased per-coordinate sample variance.
    std::vector<double> column_variances() const;
};

} // namespace ddlab
