#include "spt/generator.hpp"
#include "spt/special.hpp"

#include <cmath>
#include <sstream>

namespace spt {

namespace {

std::string fmt_param(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

Generator constant_generator(double c) {
    require(c > 0.0, "constant generator must be positive");
    Generator g;
    g.name = "constant";
    g.value = [c](const Vec&) { return c; };
    g.grad = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
    g.hess = [](const Vec& x) { return Mat(Mat::Zero(x.size(), x.size())); };
    g.boundary_dlog = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
    return g;
}

Generator power_generator(double p) {
    require(p != 0.0, "power generator needs p != 0");
    Generator g;
    g.name = "power(" + fmt_param(p) + ")";
    g.value = [p](const Vec& x) { return std::pow(x.array().pow(p).sum(), 1.0 / p); };
    g.grad = [p](const Vec& x) {
        double G = std::pow(x.array().pow(p).sum(), 1.0 / p);
        return Vec(std::pow(G, 1.0 - p) * x.array().pow(p - 1.0));
    };
    g.hess = [p](const Vec& x) {
        double S = x.array().pow(p).sum();
        double G = std::pow(S, 1.0 / p);
        Vec xp1 = x.array().pow(p - 1.0);
        Mat h = (1.0 - p) * std::pow(G, 1.0 - 2.0 * p) * xp1 * xp1.transpose();
        for (Eigen::Index i = 0; i < x.size(); ++i)
            h(i, i) = (1.0 - p) * std::pow(G, 1.0 - 2.0 * p) * std::pow(x[i], p - 2.0) * (std::pow(x[i], p) - S);
        return h;
    };
    if (p > 0.0) {
        g.boundary_dlog = [p](const Vec& x) {
            Vec xp = x.array().pow(p);
            return Vec(xp / xp.sum());
        };
    }
    return g;
}

Generator geometric_mean_generator() {
    Generator g;
    g.name = "geometric_mean";
    g.value = [](const Vec& x) { return std::exp(x.array().log().mean()); };
    g.grad = [](const Vec& x) {
        double G = std::exp(x.array().log().mean());
        return Vec(G / static_cast<double>(x.size()) * x.array().inverse());
    };
    g.hess = [](const Vec& x) {
        const double n = static_cast<double>(x.size());
        double G = std::exp(x.array().log().mean());
        Vec inv = x.array().inverse();
        Mat h = G / (n * n) * inv * inv.transpose();
        for (Eigen::Index i = 0; i < x.size(); ++i) h(i, i) -= G / n * inv[i] * inv[i];
        return h;
    };
    return g;
}

Generator dwp_generator(double p) {
    return p == 0.0 ? geometric_mean_generator() : power_generator(p);
}

Generator entropy_generator(double c) {
    require(c > 0.0, "entropy generator needs c > 0");
    auto xlogx = [](double v) { return v > 0.0 ? v * std::log(v) : 0.0; };
    Generator g;
    g.name = "entropy(" + fmt_param(c) + ")";
    g.value = [c, xlogx](const Vec& x) {
        double s = c;
        for (Eigen::Index i = 0; i < x.size(); ++i) s -= xlogx(x[i]);
        return s;
    };
    g.grad = [](const Vec& x) { return Vec(-x.array().log() - 1.0); };
    g.hess = [](const Vec& x) { return Mat((-x.array().inverse()).matrix().asDiagonal()); };
    g.boundary_dlog = [c, xlogx](const Vec& x) {
        double H = c;
        for (Eigen::Index i = 0; i < x.size(); ++i) H -= xlogx(x[i]);
        Vec out(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = (-xlogx(x[i]) - x[i]) / H;
        return out;
    };
    return g;
}

Generator sum_power_generator(double p) {
    require(p != 0.0, "sum-power generator needs p != 0");
    Generator g;
    g.name = "sum_power(" + fmt_param(p) + ")";
    g.value = [p](const Vec& x) { return x.array().pow(p).sum(); };
    g.grad = [p](const Vec& x) { return Vec(p * x.array().pow(p - 1.0)); };
    g.hess = [p](const Vec& x) { return Mat((p * (p - 1.0) * x.array().pow(p - 2.0)).matrix().asDiagonal()); };
    if (p > 0.0) {
        g.boundary_dlog = [p](const Vec& x) {
            Vec xp = x.array().pow(p);
            return Vec(p * xp / xp.sum());
        };
    }
    return g;
}

namespace {

double neg_log_unit(double y) {
    if (!(y >= 0.0 && y <= 1.0)) throw ValidationError("incomplete-gamma generator is defined on [0,1] coordinates");
    return y == 0.0 ? HUGE_VAL : -std::log(y);
}

}  // namespace

Generator incomplete_gamma_generator(double c) {
    require(c > 0.0, "incomplete-gamma generator needs c > 0");
    const double lg = std::lgamma(c + 1.0);
    Generator g;
    g.name = "incomplete_gamma(" + fmt_param(c) + ")";
    g.value = [c](const Vec& x) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) s += gamma_q(c + 1.0, neg_log_unit(x[i]));
        return s;
    };
    auto fprime = [c, lg](double y) {
        double L = neg_log_unit(y);
        if (y == 0.0 || L == 0.0) return 0.0;
        return std::exp(c * std::log(L) - lg);
    };
    g.grad = [fprime](const Vec& x) {
        Vec out(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = fprime(x[i]);
        return out;
    };
    g.hess = [c, lg](const Vec& x) {
        Mat h = Mat::Zero(x.size(), x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            double L = neg_log_unit(x[i]);
            if (L > 0.0) h(i, i) = -std::exp((c - 1.0) * std::log(L) + std::log(c) - lg) / x[i];
        }
        return h;
    };
    Generator copy = g;
    g.boundary_dlog = [copy, fprime](const Vec& x) {
        double G = copy.value(x);
        Vec out(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] * fprime(x[i]) / G : 0.0;
        return out;
    };
    return g;
}

namespace {

std::pair<Eigen::Index, Eigen::Index> selection(Eigen::Index n, int m, bool top) {
    if (m < 1 || m > n) throw ValidationError("rank selection m=" + std::to_string(m) + " outside 1..n");
    return top ? std::make_pair(Eigen::Index(0), Eigen::Index(m)) : std::make_pair(Eigen::Index(m - 1), n);
}

}  // namespace

Generator large_stock_generator(int m) {
    require(m >= 1, "large-stock generator needs m >= 1");
    Generator g;
    g.name = "large_stock(" + std::to_string(m) + ")";
    g.ranked = true;
    g.tie_sensitive = {m};
    g.value = [m](const Vec& x) {
        auto [lo, hi] = selection(x.size(), m, true);
        return x.segment(lo, hi - lo).sum();
    };
    g.grad = [m](const Vec& x) {
        auto [lo, hi] = selection(x.size(), m, true);
        Vec out = Vec::Zero(x.size());
        out.segment(lo, hi - lo).setOnes();
        return out;
    };
    g.hess = [](const Vec& x) { return Mat(Mat::Zero(x.size(), x.size())); };
    g.boundary_dlog = [m](const Vec& x) {
        auto [lo, hi] = selection(x.size(), m, true);
        Vec out = Vec::Zero(x.size());
        out.segment(lo, hi - lo) = x.segment(lo, hi - lo) / x.segment(lo, hi - lo).sum();
        return out;
    };
    return g;
}

Generator rank_power_generator(double r, int m, bool top) {
    require(r != 0.0, "rank power generator needs r != 0");
    require(m >= 1, "rank power generator needs m >= 1");
    Generator g;
    g.name = std::string(top ? "large" : "small") + "_dwp(" + fmt_param(r) + "," + std::to_string(m) + ")";
    g.ranked = true;
    g.tie_sensitive = top ? std::vector<int>{m} : std::vector<int>{m - 1};
    g.value = [r, m, top](const Vec& x) {
        auto [lo, hi] = selection(x.size(), m, top);
        return std::pow(x.segment(lo, hi - lo).array().pow(r).sum(), 1.0 / r);
    };
    g.grad = [r, m, top](const Vec& x) {
        auto [lo, hi] = selection(x.size(), m, top);
        auto seg = x.segment(lo, hi - lo).array();
        double G = std::pow(seg.pow(r).sum(), 1.0 / r);
        Vec out = Vec::Zero(x.size());
        out.segment(lo, hi - lo) = std::pow(G, 1.0 - r) * seg.pow(r - 1.0);
        return out;
    };
    g.hess = [r, m, top](const Vec& x) {
        auto [lo, hi] = selection(x.size(), m, top);
        Vec seg = x.segment(lo, hi - lo);
        double S = seg.array().pow(r).sum();
        double G = std::pow(S, 1.0 / r);
        Vec xp1 = seg.array().pow(r - 1.0);
        Mat block = (1.0 - r) * std::pow(G, 1.0 - 2.0 * r) * xp1 * xp1.transpose();
        for (Eigen::Index i = 0; i < seg.size(); ++i)
            block(i, i) = (1.0 - r) * std::pow(G, 1.0 - 2.0 * r) * std::pow(seg[i], r - 2.0) * (std::pow(seg[i], r) - S);
        Mat h = Mat::Zero(x.size(), x.size());
        h.block(lo, lo, hi - lo, hi - lo) = block;
        return h;
    };
    if (r > 0.0) {
        g.boundary_dlog = [r, m, top](const Vec& x) {
            auto [lo, hi] = selection(x.size(), m, top);
            Vec out = Vec::Zero(x.size());
            Vec xp = x.segment(lo, hi - lo).array().pow(r);
            out.segment(lo, hi - lo) = xp / xp.sum();
            return out;
        };
    }
    return g;
}

Generator affine(const Generator& g, double a, double b) {
    Generator out;
    out.name = "affine(" + fmt_param(a) + "," + fmt_param(b) + "," + g.name + ")";
    out.ranked = g.ranked;
    out.tie_sensitive = g.tie_sensitive;
    out.value = [g, a, b](const Vec& x) {
        double v = a + b * g.value(x);
        if (!(v > 0.0)) throw ValidationError("affine generator is not positive at a probed point");
        return v;
    };
    out.grad = [g, b](const Vec& x) { return Vec(b * g.grad(x)); };
    out.hess = [g, b](const Vec& x) { return Mat(b * g.hess(x)); };
    return out;
}

Generator power(const Generator& g, double q) {
    Generator out;
    out.name = "power(" + fmt_param(q) + "," + g.name + ")";
    out.ranked = g.ranked;
    out.tie_sensitive = g.tie_sensitive;
    out.value = [g, q](const Vec& x) { return std::pow(g.value(x), q); };
    out.grad = [g, q](const Vec& x) { return Vec(q * std::pow(g.value(x), q - 1.0) * g.grad(x)); };
    out.hess = [g, q](const Vec& x) {
        double G = g.value(x);
        Vec dg = g.grad(x);
        return Mat(q * (q - 1.0) * std::pow(G, q - 2.0) * dg * dg.transpose() + q * std::pow(G, q - 1.0) * g.hess(x));
    };
    if (g.boundary_dlog)
        out.boundary_dlog = [g, q](const Vec& x) { return Vec(q * g.boundary_dlog(x)); };
    return out;
}

Generator exp_of(const Generator& g) {
    Generator out;
    out.name = "exp(" + g.name + ")";
    out.ranked = g.ranked;
    out.tie_sensitive = g.tie_sensitive;
    out.value = [g](const Vec& x) { return std::exp(g.value(x)); };
    out.grad = [g](const Vec& x) { return Vec(std::exp(g.value(x)) * g.grad(x)); };
    out.hess = [g](const Vec& x) {
        Vec dg = g.grad(x);
        return Mat(std::exp(g.value(x)) * (dg * dg.transpose() + g.hess(x)));
    };
    return out;
}

namespace {

void check_family(const std::vector<Generator>& gs, const char* what) {
    require(!gs.empty(), std::string(what) + " of no generators");
    for (const auto& g : gs)
        require(g.ranked == gs.front().ranked, std::string(what) + " mixes ranked and name-based generators");
}

std::vector<int> merged_ties(const std::vector<Generator>& gs) {
    std::vector<int> out;
    for (const auto& g : gs) out.insert(out.end(), g.tie_sensitive.begin(), g.tie_sensitive.end());
    return out;
}

}  // namespace

Generator product(const std::vector<Generator>& gs) {
    check_family(gs, "product");
    Generator out;
    out.name = "product(";
    for (std::size_t k = 0; k < gs.size(); ++k) out.name += (k ? "," : "") + gs[k].name;
    out.name += ")";
    out.ranked = gs.front().ranked;
    out.tie_sensitive = merged_ties(gs);
    out.value = [gs](const Vec& x) {
        double v = 1.0;
        for (const auto& g : gs) v *= g.value(x);
        return v;
    };
    out.grad = [gs](const Vec& x) {
        double P = 1.0;
        Vec u = Vec::Zero(x.size());
        for (const auto& g : gs) {
            double G = g.value(x);
            P *= G;
            u += g.grad(x) / G;
        }
        return Vec(P * u);
    };
    out.hess = [gs](const Vec& x) {
        const Eigen::Index n = x.size();
        double P = 1.0;
        Vec u = Vec::Zero(n);
        Mat h = Mat::Zero(n, n);
        for (const auto& g : gs) {
            double G = g.value(x);
            Vec dg = g.grad(x);
            P *= G;
            u += dg / G;
            h += g.hess(x) / G - dg * dg.transpose() / (G * G);
        }
        return Mat(P * (h + u * u.transpose()));
    };
    return out;
}

Generator sum(const std::vector<Generator>& gs) {
    check_family(gs, "sum");
    Generator out;
    out.name = "sum(";
    for (std::size_t k = 0; k < gs.size(); ++k) out.name += (k ? "," : "") + gs[k].name;
    out.name += ")";
    out.ranked = gs.front().ranked;
    out.tie_sensitive = merged_ties(gs);
    out.value = [gs](const Vec& x) {
        double v = 0.0;
        for (const auto& g : gs) v += g.value(x);
        return v;
    };
    out.grad = [gs](const Vec& x) {
        Vec v = Vec::Zero(x.size());
        for (const auto& g : gs) v += g.grad(x);
        return v;
    };
    out.hess = [gs](const Vec& x) {
        Mat h = Mat::Zero(x.size(), x.size());
        for (const auto& g : gs) h += g.hess(x);
        return h;
    };
    return out;
}

}  // namespace spt
