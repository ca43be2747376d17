#include "spt/special.hpp"
#include "spt/common.hpp"

#include <cmath>
#include <limits>

namespace spt {

namespace {

constexpr int kMaxIter = 100000;
constexpr double kEps = 1e-16;

// log P(a, x) by the power series, used for x < a + 1.
double log_p_series(double a, double x) {
    double term = 1.0 / a, sum = term;
    for (int k = 1; k < kMaxIter; ++k) {
        term *= x / (a + k);
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * kEps) break;
    }
    return -x + a * std::log(x) - std::lgamma(a) + std::log(sum);
}

// log Q(a, x) by the modified Lentz continued fraction, used for x >= a + 1.
double log_q_fraction(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return -x + a * std::log(x) - std::lgamma(a) + std::log(h);
}

}  // namespace

double log_gamma_q(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) throw ValidationError("incomplete gamma: need a > 0 and x >= 0");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
    if (x < a + 1.0) return std::log1p(-std::exp(log_p_series(a, x)));
    return log_q_fraction(a, x);
}

double gamma_q(double a, double x) {
    return std::exp(log_gamma_q(a, x));
}

}  // namespace spt
