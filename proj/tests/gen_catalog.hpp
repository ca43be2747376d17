#pragma once

#include "spt/generator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace testing_support {

using spt::Generator;
using spt::Mat;
using spt::Vec;

inline std::vector<Generator> generator_catalog(int n) {
    using namespace spt;
    const int m = std::max(1, n / 2);
    std::vector<Generator> gs = {
        constant_generator(2.0),
        power_generator(0.5),
        power_generator(-0.7),
        power_generator(2.0),
        geometric_mean_generator(),
        entropy_generator(1.0),
        entropy_generator(10.0),
        sum_power_generator(0.5),
        sum_power_generator(-0.5),
        incomplete_gamma_generator(3.0),
        large_stock_generator(m),
        rank_power_generator(0.5, m, true),
        rank_power_generator(-1.0, std::max(1, n - m), false),
        affine(power_generator(0.5), 1.0, 2.0),
        power(entropy_generator(1.0), 0.5),
        exp_of(power_generator(0.5)),
        product({power_generator(0.5), entropy_generator(1.0)}),
        sum({power_generator(0.5), power_generator(-0.5)}),
        product({large_stock_generator(m), rank_power_generator(0.5, m, true)}),
        power(sum({dwp_generator(0.3), geometric_mean_generator()}), 0.8),
    };
    return gs;
}

// Random point of the open simplex, sorted decreasingly for ranked generators,
// with coordinates kept apart so small perturbations do not reorder them.
inline Vec interior_point(int n, std::mt19937_64& rng, bool sorted) {
    std::gamma_distribution<double> gam(2.0, 1.0);
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = gam(rng) + 0.05;
    x /= x.sum();
    if (sorted) {
        std::sort(x.data(), x.data() + n, std::greater<double>());
        for (int i = 1; i < n; ++i)
            if (x[i - 1] - x[i] < 1e-3 * x[i]) x[i] = x[i - 1] * (1 - 2e-3);
        x /= x.sum();
    }
    return x;
}

inline Vec fd_gradient(const Generator& g, const Vec& x) {
    Vec out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = 1e-5 * x[i];
        Vec a = x, b = x;
        a[i] += h;
        b[i] -= h;
        out[i] = (g.value(a) - g.value(b)) / (2 * h);
    }
    return out;
}

inline Mat fd_hessian(const Generator& g, const Vec& x) {
    Mat out(x.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = 1e-5 * x[j];
        Vec a = x, b = x;
        a[j] += h;
        b[j] -= h;
        out.col(j) = (g.grad(a) - g.grad(b)) / (2 * h);
    }
    return out;
}

inline double rel_err(const Mat& approx, const Mat& exact) {
    // absolute error when the exact value vanishes identically
    const double m = exact.cwiseAbs().maxCoeff();
    const double scale = m < 1e-12 ? 1.0 : m;
    return (approx - exact).cwiseAbs().maxCoeff() / scale;
}

}  // namespace testing_support
