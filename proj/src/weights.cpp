#include "spt/weights.hpp"

#include <cmath>

namespace spt {

RankMap rank_map(const std::vector<Vec>& weights) {
    RankMap rm;
    rm.perm.reserve(weights.size());
    rm.ranked.reserve(weights.size());
    for (const auto& row : weights) {
        auto order = rank_order(row);
        Vec sorted(row.size());
        for (std::size_t k = 0; k < order.size(); ++k) sorted[k] = row[order[k]];
        rm.perm.push_back(std::move(order));
        rm.ranked.push_back(std::move(sorted));
    }
    return rm;
}

void check_weight_row(const Vec& mu, double tol) {
    require(mu.size() >= 1, "empty weight row");
    require(mu.allFinite(), "weight row has non-finite entries");
    require(all_nonnegative(mu), "weight row has negative entries");
    require(std::fabs(mu.sum() - 1.0) <= tol, "weight row does not sum to 1");
}

namespace {

Vec finish(Vec pi) {
    const double residue = std::fabs(pi.sum() - 1.0);
    if (!(residue <= 1e-9 * std::max(1.0, pi.cwiseAbs().sum())))
        throw RuntimeAbort("portfolio row failed to sum to 1 (residue " + std::to_string(residue) + ")");
    close_row(pi);
    return pi;
}

// pi_i = (g_i + 1 - sum_j x_j g_j) x_i with g = D log G, in whatever coordinates x is given.
Vec fernholz_map(const Generator& G, const Vec& x) {
    if (all_positive(x)) {
        Vec g = G.grad(x) / G.value(x);
        const double s = x.dot(g);
        return finish((g.array() + 1.0 - s).matrix().cwiseProduct(x));
    }
    if (!G.extends_to_boundary()) {
        Eigen::Index i = 0;
        x.minCoeff(&i);
        throw ValidationError("weight of coordinate " + std::to_string(i + 1) + " is zero and generator " + G.name +
                              " has no boundary extension");
    }
    Vec h = G.boundary_dlog(x);
    return finish(h + x * (1.0 - h.sum()));
}

}  // namespace

Vec fgp_weights(const Generator& G, const Vec& mu) {
    require(!G.ranked, "generator " + G.name + " is rank-based; use rank_fgp_weights");
    check_weight_row(mu);
    return fernholz_map(G, mu);
}

Vec rank_fgp_weights(const Generator& G, const Vec& mu) {
    check_weight_row(mu);
    auto order = rank_order(mu);
    const Eigen::Index n = mu.size();
    Vec x(n);
    for (Eigen::Index k = 0; k < n; ++k) x[k] = mu[order[k]];
    for (int b : G.tie_sensitive) {
        if (b >= 1 && b < n && x[b - 1] == x[b])
            throw ValidationError("exact tie between ranks " + std::to_string(b) + " and " + std::to_string(b + 1));
    }
    Vec pr = fernholz_map(G, x);
    Vec pi(n);
    for (Eigen::Index k = 0; k < n; ++k) pi[order[k]] = pr[k];
    return pi;
}

Vec dwp_weights(const Vec& mu, double p) {
    check_weight_row(mu);
    if (p <= 0.0 && !all_positive(mu))
        throw ValidationError("diversity weights with p <= 0 are undefined when a market weight is zero");
    Vec w(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) w[i] = mu[i] > 0.0 ? std::pow(mu[i], p) : 0.0;
    return finish(w / w.sum());
}

Vec ewp_weights(const Vec& mu, double c) {
    require(c > 0.0, "entropy weights need c > 0");
    check_weight_row(mu);
    require(all_positive(mu), "entropy weights need strictly positive market weights");
    Vec w = mu.cwiseProduct((c - mu.array().log()).matrix());
    return finish(w / w.sum());
}

Vec rank_dwp_weights(const Vec& mu, double r, int m, bool top) {
    check_weight_row(mu);
    const Eigen::Index n = mu.size();
    require(m >= 1 && m <= n, "rank diversity weights need 1 <= m <= n");
    auto order = rank_order(mu);
    const Eigen::Index lo = top ? 0 : m - 1, hi = top ? m : n;
    Vec pi = Vec::Zero(n);
    double total = 0.0;
    for (Eigen::Index k = lo; k < hi; ++k) {
        double v = mu[order[k]];
        if (r <= 0.0 && v == 0.0)
            throw ValidationError("rank diversity weights with r <= 0 hit a zero weight at rank " + std::to_string(k + 1));
        pi[order[k]] = v > 0.0 ? std::pow(v, r) : 0.0;
        total += pi[order[k]];
    }
    return finish(pi / total);
}

Vec q_mirror(const Vec& pi, const Vec& mu, double q) {
    require(pi.size() == mu.size(), "q_mirror: size mismatch");
    return q * pi + (1.0 - q) * mu;
}

Vec fk05_mirror_dwp(const Vec& mu, double p) {
    require(p > 0.0 && p < 1.0, "fk05 mirror needs p in (0,1)");
    return finish(q_mirror(dwp_weights(mu, p), mu, p));
}

Vec gamma_shape_weights(const Vec& mu, double k, double theta) {
    require(k > 1.0, "gamma-shaped weights need k > 1");
    require(theta > 0.0, "gamma-shaped weights need theta > 0");
    check_weight_row(mu);
    require(mu.maxCoeff() > 0.0, "gamma-shaped weights need a positive market weight");
    Vec lw(mu.size());
    double top = -HUGE_VAL;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        lw[i] = mu[i] > 0.0 ? (k - 1.0) * std::log(mu[i]) - mu[i] / theta : -HUGE_VAL;
        top = std::max(top, lw[i]);
    }
    Vec w(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) w[i] = mu[i] > 0.0 ? std::exp(lw[i] - top) : 0.0;
    return finish(w / w.sum());
}

}  // namespace spt
