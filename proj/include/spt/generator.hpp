#pragma once

#include "spt/common.hpp"

#include <functional>
#include <string>
#include <vector>

namespace spt {

struct Generator {
    std::string name;
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> grad;
    std::function<Mat(const Vec&)> hess;
    // x_i D_i log G(x); set only by generators that extend continuously to
    // points with zero coordinates.
    std::function<Vec(const Vec&)> boundary_dlog;
    // Ranked generators take the sorted (non-increasing) weight vector.
    bool ranked = false;
    // Rank boundaries k (between ranks k and k+1, 1-based) where exact ties are rejected.
    std::vector<int> tie_sensitive;

    double operator()(const Vec& x) const { return value(x); }
    bool extends_to_boundary() const { return static_cast<bool>(boundary_dlog); }
};

Generator constant_generator(double c = 1.0);
// (sum x_i^p)^(1/p), p != 0
Generator power_generator(double p);
// (prod x_i)^(1/n), the p = 0 member of the power family
Generator geometric_mean_generator();
// power_generator(p) for p != 0, geometric mean for p = 0
Generator dwp_generator(double p);
// c - sum x_i log x_i
Generator entropy_generator(double c);
// sum x_i^p
Generator sum_power_generator(double p);
// sum_i Q(c+1, -log x_i); a positive multiple of sum_i Gamma(c+1, -log x_i)
Generator incomplete_gamma_generator(double c);

// Ranked: x_(1) + ... + x_(m)
Generator large_stock_generator(int m);
// Ranked: (sum over selected ranks of x_(k)^r)^(1/r); top = ranks 1..m, bottom = ranks m..n
Generator rank_power_generator(double r, int m, bool top);

Generator affine(const Generator& g, double a, double b);
Generator power(const Generator& g, double q);
Generator exp_of(const Generator& g);
Generator product(const std::vector<Generator>& gs);
Generator sum(const std::vector<Generator>& gs);

}  // namespace spt
