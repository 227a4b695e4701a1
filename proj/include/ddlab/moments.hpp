#pragma once

#include <cmath>
#include <cstddef>

namespace ddlab {

/// Streaming mean and variance (Welford). Blocks merge exactly in a fixed
/// order, so block-parallel totals do not depend on the thread count.
struct RunningMoments {
    std::size_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x)
    {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }

    void merge(const RunningMoments& o)
    {
        if (o.count == 0)
            return;
        if (count == 0) {
            *this = o;
            return;
        }
        const double na = static_cast<double>(count), nb = static_cast<double>(o.count);
        const double n = na + nb;
        const double delta = o.mean - mean;
        mean += delta * nb / n;
        m2 += o.m2 + delta * delta * na * nb / n;
        count += o.count;
    }

    /// Unbiased sample variance; 0 below two samples.
    double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
    double std_error() const { return count > 0 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0; }
};

} // namespace ddlab
