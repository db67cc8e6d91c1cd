#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <limits>

#include "errors.hpp"

namespace wavechaos {

struct MCConfig {
    std::size_t samples = 100000;
    std::uint64_t seed = 1;
    double importance_beta = std::nan(""); // gap density exponent; NaN: 2H - 2
    std::size_t nested_samples = 2000;    // MC size when each sample needs nested quadrature
    int threads = 1;

    void validate() const { require(samples >= 1000, "MC config: samples must be >= 1000"); }
};

// Sample mean and standard error of per-sample statistics.
struct MeanSE {
    double mean = 0, se = 0;
};

template <class F>
MeanSE sample_stat(std::size_t n, F&& f)
{
    double m = 0, m2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double v = f(i);
        double d = v - m;
        m += d / static_cast<double>(i + 1);
        m2 += d * (v - m);
    }
    MeanSE r;
    r.mean = m;
    r.se = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    return r;
}

} // namespace wavechaos
