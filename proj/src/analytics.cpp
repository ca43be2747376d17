#include "spt/analytics.hpp"
#include "spt/weights.hpp"

#include <cmath>
#include <sstream>

namespace spt {

Mat psd_project(const Mat& a, double* norm) {
    Mat sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    Vec ev = es.eigenvalues();
    if ((ev.array() >= 0.0).all()) {
        if (norm) *norm = (sym - a).norm();
        return sym;
    }
    Vec clipped = ev.cwiseMax(0.0);
    Mat out = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
    out = 0.5 * (out + out.transpose());
    if (norm) *norm = (out - a).norm();
    return out;
}

CovEstimate realized_covariance(const MarketPath& path, int window) {
    require(window >= 2, "realized_covariance: window must be >= 2");
    require(static_cast<int>(path.size()) > window, "realized_covariance: path shorter than window");
    const int n = path.n();
    const std::size_t N = path.size();
    std::vector<Vec> dlog(N - 1);
    std::vector<std::vector<bool>> dead(N, std::vector<bool>(n, false));
    for (std::size_t k = 0; k < N; ++k)
        for (int i = 0; i < n; ++i) dead[k][i] = !(path.caps[k][i] > 0.0);
    for (std::size_t s = 0; s + 1 < N; ++s) {
        dlog[s] = Vec::Zero(n);
        for (int i = 0; i < n; ++i)
            if (!dead[s][i] && !dead[s + 1][i]) dlog[s][i] = std::log(path.caps[s + 1][i] / path.caps[s][i]);
    }
    CovEstimate est;
    for (std::size_t k = window; k < N; ++k) {
        std::vector<int> excl;
        for (int i = 0; i < n; ++i)
            for (std::size_t s = k - window; s <= k; ++s)
                if (dead[s][i]) {
                    excl.push_back(i);
                    break;
                }
        Mat a = Mat::Zero(n, n);
        for (std::size_t s = k - window; s < k; ++s) a += dlog[s] * dlog[s].transpose();
        a /= path.times[k] - path.times[k - window];
        for (int i : excl) {
            a.row(i).setZero();
            a.col(i).setZero();
        }
        double pn = 0.0;
        est.a.push_back(psd_project(a, &pn));
        est.projection_norm.push_back(pn);
        est.times.push_back(path.times[k]);
        est.excluded.push_back(std::move(excl));
    }
    return est;
}

Mat relative_covariance(const Mat& a, const Vec& pi) {
    require(a.rows() == pi.size() && a.cols() == pi.size(), "relative_covariance: size mismatch");
    // tau_ij = a_ij - (a pi)_i - (a pi)_j + pi'a pi
    Vec api = a * pi;
    const double v = pi.dot(api);
    Mat tau = a;
    tau.colwise() -= api;
    tau.rowwise() -= api.transpose();
    tau.array() += v;
    return tau;
}

double excess_growth_rate(const Vec& pi, const Mat& a) {
    require(a.rows() == pi.size() && a.cols() == pi.size(), "excess_growth_rate: size mismatch");
    return 0.5 * (pi.dot(a.diagonal()) - pi.dot(a * pi));
}

double numeraire_invariant_egr(const Vec& pi, const Vec& rho, const Mat& a) {
    Mat tau = relative_covariance(a, rho);
    return 0.5 * (pi.dot(tau.diagonal()) - pi.dot(tau * pi));
}

RealizedMarketStats realized_market_stats(const MarketPath& path) {
    require(path.size() >= 2, "realized_market_stats: need at least two grid points");
    RealizedMarketStats st;
    const double T = path.times.back() - path.times.front();
    for (std::size_t s = 0; s + 1 < path.size(); ++s) {
        const Vec& x0 = path.caps[s];
        const Vec& x1 = path.caps[s + 1];
        Vec mu = market_weight_row(x0);
        Vec dl = (x1.array() / x0.array()).log().matrix();
        double dtot = std::log(x1.sum() / x0.sum());
        double m1 = mu.dot(dl);
        st.a_mumu += dtot * dtot;
        st.gamma_star += 0.5 * (mu.dot(dl.cwiseProduct(dl)) - m1 * m1);
    }
    st.a_mumu /= T;
    st.gamma_star /= T;
    return st;
}

double log_relative_step(const Vec& pi, const Vec& mu0, const Vec& mu1) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < pi.size(); ++i) {
        if (pi[i] == 0.0) continue;
        s += pi[i] * (mu1[i] / mu0[i]);
    }
    if (!(s > 0.0)) throw RuntimeAbort("relative wealth became nonpositive");
    return std::log(s);
}

std::vector<double> discrete_lhs(const std::vector<Vec>& weights, const std::vector<Vec>& pis) {
    require(weights.size() == pis.size(), "discrete_lhs: grids differ");
    std::vector<double> out(weights.size(), 0.0);
    for (std::size_t s = 0; s + 1 < weights.size(); ++s)
        out[s + 1] = out[s] + log_relative_step(pis[s], weights[s], weights[s + 1]);
    return out;
}

namespace {

void check_interior(const std::vector<double>& times, const std::vector<Vec>& weights) {
    for (std::size_t k = 0; k < weights.size(); ++k) {
        for (Eigen::Index i = 0; i < weights[k].size(); ++i) {
            if (!(weights[k][i] > 0.0)) {
                std::ostringstream os;
                os << "weight path touches the boundary at t=" << times[k] << " (stock " << i + 1 << ")";
                throw RuntimeAbort(os.str());
            }
        }
    }
}

void check_pis(const std::vector<double>& times, const std::vector<Vec>& weights, const std::vector<Vec>& pis,
               const Generator& G, bool ranked) {
    require(times.size() == weights.size() && weights.size() == pis.size(), "decomposition: grids differ");
    for (std::size_t k = 0; k < weights.size(); ++k) {
        Vec expect = ranked ? rank_fgp_weights(G, weights[k]) : fgp_weights(G, weights[k]);
        if ((expect - pis[k]).cwiseAbs().maxCoeff() > 1e-9) {
            std::ostringstream os;
            os << "portfolio at t=" << times[k] << " is not generated by " << G.name;
            throw ValidationError(os.str());
        }
    }
}

void finish_decomposition(Decomposition& d) {
    d.residual.resize(d.times.size());
    for (std::size_t k = 0; k < d.times.size(); ++k)
        d.residual[k] = d.lhs[k] - (d.gterm[k] + d.drift_int[k] + d.lt_term[k]);
}

}  // namespace

Decomposition master_decomposition(const Generator& G, const std::vector<double>& times,
                                   const std::vector<Vec>& weights, const std::vector<Vec>& pi_path) {
    require(!G.ranked, "master_decomposition: generator is rank-based");
    require(!weights.empty(), "master_decomposition: empty path");
    check_interior(times, weights);
    check_pis(times, weights, pi_path, G, false);
    const std::size_t N = weights.size();
    Decomposition d;
    d.times = times;
    d.lhs = discrete_lhs(weights, pi_path);
    d.gterm.assign(N, 0.0);
    d.drift_int.assign(N, 0.0);
    d.lt_term.assign(N, 0.0);
    const double G0 = G.value(weights[0]);
    for (std::size_t s = 0; s + 1 < N; ++s) {
        Vec dmu = weights[s + 1] - weights[s];
        double step = -0.5 / G.value(weights[s]) * dmu.dot(G.hess(weights[s]) * dmu);
        d.drift_rate.push_back(step / (times[s + 1] - times[s]));
        d.drift_int[s + 1] = d.drift_int[s] + step;
        d.gterm[s + 1] = std::log(G.value(weights[s + 1]) / G0);
    }
    finish_decomposition(d);
    return d;
}

Decomposition master_decomposition(const Generator& G, const MarketPath& path, const std::vector<Vec>& pi_path) {
    return master_decomposition(G, path.times, market_weights(path), pi_path);
}

LocalTimeMethod parse_local_time_method(const std::string& s) {
    if (s == "tanaka") return LocalTimeMethod::Tanaka;
    if (s == "fernholz") return LocalTimeMethod::Fernholz;
    throw ValidationError("unknown local-time method '" + s + "'");
}

namespace {

void check_persistent_ties(const RankMap& rm) {
    const std::size_t N = rm.ranked.size();
    if (N == 0) return;
    const Eigen::Index n = rm.ranked[0].size();
    for (std::size_t s = 0; s + 1 < N; ++s)
        for (Eigen::Index k = 0; k + 1 < n; ++k)
            if (rm.ranked[s][k] == rm.ranked[s][k + 1] && rm.ranked[s + 1][k] == rm.ranked[s + 1][k + 1])
                throw RuntimeAbort("persistent exact tie between ranks " + std::to_string(k + 1) + " and " +
                                   std::to_string(k + 2) + " at grid point " + std::to_string(s));
}

}  // namespace

Mat local_time_increments(const std::vector<Vec>& weights, LocalTimeMethod method) {
    require(!weights.empty(), "local time: empty path");
    const std::size_t N = weights.size();
    const Eigen::Index n = weights[0].size();
    RankMap rm = rank_map(weights);
    check_persistent_ties(rm);
    Mat inc = Mat::Zero(N - 1, std::max<Eigen::Index>(n - 1, 0));
    for (std::size_t s = 0; s + 1 < N; ++s) {
        const auto& perm = rm.perm[s];
        const Vec& now = rm.ranked[s];
        const Vec& next = rm.ranked[s + 1];
        const Vec& mu1 = weights[s + 1];
        if (method == LocalTimeMethod::Tanaka) {
            // Top-k log sums: the reflected part of the ranked log-weight dynamics.
            double top = 0.0, old = 0.0;
            for (Eigen::Index k = 0; k + 1 < n; ++k) {
                if (!(next[k] > 0.0) || !(mu1[perm[k]] > 0.0))
                    throw RuntimeAbort("local time: zero weight at grid point " + std::to_string(s + 1));
                top += std::log(next[k]);
                old += std::log(mu1[perm[k]]);
                inc(s, k) = std::max(0.0, 2.0 * (top - old));
            }
        } else {
            double cum_now = 0.0, top = 0.0, old = 0.0;
            for (Eigen::Index k = 0; k + 1 < n; ++k) {
                cum_now += now[k];
                top += next[k];
                old += mu1[perm[k]];
                if (!(old > 0.0) || !(cum_now > 0.0))
                    throw RuntimeAbort("local time: large-cap portfolio wealth nonpositive at grid point " +
                                       std::to_string(s + 1));
                const double zeta_k = now[k] / cum_now;
                if (!(zeta_k > 0.0))
                    throw RuntimeAbort("local time: zero weight at rank " + std::to_string(k + 1));
                inc(s, k) = std::max(0.0, 2.0 / zeta_k * std::log(top / old));
            }
        }
    }
    return inc;
}

std::vector<double> local_time_profile(const std::vector<Vec>& weights, int k, LocalTimeMethod method) {
    require(!weights.empty(), "local time: empty path");
    const int n = static_cast<int>(weights[0].size());
    require(k >= 1 && k <= n - 1, "local time: boundary k must lie in 1..n-1");
    Mat inc = local_time_increments(weights, method);
    std::vector<double> out(weights.size(), 0.0);
    for (std::size_t s = 0; s + 1 < weights.size(); ++s) out[s + 1] = out[s] + inc(s, k - 1);
    return out;
}

Decomposition rank_master_decomposition(const Generator& G, const std::vector<double>& times,
                                        const std::vector<Vec>& weights, const std::vector<Vec>& pi_path,
                                        LocalTimeMethod method) {
    require(G.ranked, "rank_master_decomposition: generator is not rank-based");
    require(!weights.empty(), "rank_master_decomposition: empty path");
    check_interior(times, weights);
    check_pis(times, weights, pi_path, G, true);
    const std::size_t N = weights.size();
    const Eigen::Index n = weights[0].size();
    RankMap rm = rank_map(weights);
    Mat lt = local_time_increments(weights, method);
    Decomposition d;
    d.times = times;
    d.lhs = discrete_lhs(weights, pi_path);
    d.gterm.assign(N, 0.0);
    d.drift_int.assign(N, 0.0);
    d.lt_term.assign(N, 0.0);
    const double G0 = G.value(rm.ranked[0]);
    for (std::size_t s = 0; s + 1 < N; ++s) {
        const auto& perm = rm.perm[s];
        Vec dmu(n);
        for (Eigen::Index k = 0; k < n; ++k) dmu[k] = weights[s + 1][perm[k]] - weights[s][perm[k]];
        double step = -0.5 / G.value(rm.ranked[s]) * dmu.dot(G.hess(rm.ranked[s]) * dmu);
        d.drift_rate.push_back(step / (times[s + 1] - times[s]));
        d.drift_int[s + 1] = d.drift_int[s] + step;
        double lts = 0.0;
        for (Eigen::Index k = 0; k + 1 < n; ++k)
            lts += 0.5 * (pi_path[s][perm[k + 1]] - pi_path[s][perm[k]]) * lt(s, k);
        d.lt_term[s + 1] = d.lt_term[s] + lts;
        d.gterm[s + 1] = std::log(G.value(rm.ranked[s + 1]) / G0);
    }
    finish_decomposition(d);
    return d;
}

Decomposition rank_master_decomposition(const Generator& G, const MarketPath& path, const std::vector<Vec>& pi_path,
                                        LocalTimeMethod method) {
    return rank_master_decomposition(G, path.times, market_weights(path), pi_path, method);
}

double free_energy_step(const Vec& pi, const Vec& mu0, const Vec& mu1) {
    double b = 0.0;
    for (Eigen::Index i = 0; i < pi.size(); ++i) b += pi[i] * std::log(mu1[i] / mu0[i]);
    return log_relative_step(pi, mu0, mu1) - b;
}

PalWongLedger palwong_decomposition(const std::vector<double>& times, const std::vector<Vec>& weights,
                                    const std::vector<Vec>& pi_path) {
    require(times.size() == weights.size() && weights.size() == pi_path.size(), "palwong: grids differ");
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (!all_positive(weights[k]) || !all_positive(pi_path[k])) {
            std::ostringstream os;
            os << "palwong: zero or negative weight at t=" << times[k] << " (entropy undefined)";
            throw RuntimeAbort(os.str());
        }
    }
    const std::size_t N = weights.size();
    PalWongLedger L;
    L.times = times;
    L.lhs = discrete_lhs(weights, pi_path);
    L.entropy.resize(N);
    for (std::size_t k = 0; k < N; ++k) L.entropy[k] = relative_entropy(pi_path[k], weights[k]);
    L.residual.assign(N, 0.0);
    double fe = 0.0, cr = 0.0;
    for (std::size_t s = 0; s + 1 < N; ++s) {
        L.free_energy.push_back(free_energy_step(pi_path[s], weights[s], weights[s + 1]));
        L.cross.push_back(relative_entropy(pi_path[s + 1], weights[s + 1]) - relative_entropy(pi_path[s], weights[s + 1]));
        fe += L.free_energy.back();
        cr += L.cross.back();
        L.residual[s + 1] = L.lhs[s + 1] - (fe + L.entropy[0] - L.entropy[s + 1] + cr);
    }
    return L;
}

double diversity_D(const Vec& x, bool* boundary) {
    if (boundary) *boundary = false;
    if (!all_positive(x)) {
        if (boundary) *boundary = true;
        return 0.0;
    }
    return x.array().log().mean();
}

double shannon_entropy(const Vec& x) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x[i] > 0.0) h -= x[i] * std::log(x[i]);
    return h;
}

double relative_entropy(const Vec& pi, const Vec& mu) {
    require(pi.size() == mu.size(), "relative_entropy: size mismatch");
    double h = 0.0;
    for (Eigen::Index i = 0; i < pi.size(); ++i) {
        if (pi[i] == 0.0) continue;
        if (pi[i] < 0.0) throw ValidationError("relative_entropy: negative weight");
        if (!(mu[i] > 0.0)) throw ValidationError("relative_entropy: reference weight zero where the portfolio is not");
        h += pi[i] * std::log(pi[i] / mu[i]);
    }
    return h;
}

DiversityMeasures diversity_entropy_measures(const Vec& mu, const Vec& pi) {
    DiversityMeasures m;
    m.D = diversity_D(mu, &m.boundary);
    m.H_shannon = shannon_entropy(mu);
    m.H_rel = relative_entropy(pi, mu);
    return m;
}

double generalized_egr_integral(const std::vector<Vec>& weights, double p) {
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < weights.size(); ++s) {
        const Vec& m0 = weights[s];
        const Vec& m1 = weights[s + 1];
        for (Eigen::Index i = 0; i < m0.size(); ++i) {
            if (!(m0[i] > 0.0)) continue;
            double r = (m1[i] - m0[i]) / m0[i];
            total += 0.5 * std::pow(m0[i], p) * r * r;
        }
    }
    return total;
}

std::vector<RegimeVerdict> regime_checks(const std::vector<double>& times, const std::vector<Vec>& weights,
                                         const RegimeParams& params) {
    require(times.size() == weights.size() && !weights.empty(), "regime_checks: grids differ");
    std::vector<RegimeVerdict> out;
    const double n = static_cast<double>(weights[0].size());
    if (params.diverse_delta) {
        RegimeVerdict v;
        v.condition = "diverse";
        v.threshold = 1.0 - *params.diverse_delta;
        v.value = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            double top = weights[k].maxCoeff();
            v.value = std::max(v.value, top);
            if (!(top < v.threshold) && !v.first_violation) v.first_violation = times[k];
        }
        v.holds = !v.first_violation;
        v.margin = v.threshold - v.value;
        out.push_back(v);
    }
    if (params.weak_diverse_delta) {
        RegimeVerdict v;
        v.condition = "weakly_diverse";
        v.threshold = 1.0 - *params.weak_diverse_delta;
        double integral = 0.0;
        for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
            integral += weights[k].maxCoeff() * (times[k + 1] - times[k]);
            double avg = integral / (times[k + 1] - times[0]);
            if (!(avg < v.threshold) && !v.first_violation) v.first_violation = times[k + 1];
        }
        const double span = times.back() - times.front();
        v.value = span > 0.0 ? integral / span : weights[0].maxCoeff();
        v.holds = !v.first_violation && v.value < v.threshold;
        v.margin = v.threshold - v.value;
        out.push_back(v);
    }
    if (params.nofail_delta) {
        RegimeVerdict v;
        v.condition = "nofail";
        v.threshold = *params.nofail_delta;
        v.value = 1.0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            double low = weights[k].minCoeff();
            v.value = std::min(v.value, low);
            if (!(low >= v.threshold) && !v.first_violation) v.first_violation = times[k];
        }
        v.holds = !v.first_violation;
        v.margin = v.value - v.threshold;
        out.push_back(v);
    }
    if (params.fk05_p) {
        const double p = *params.fk05_p;
        require(p > 0.0 && p < 1.0, "fk05 condition needs p in (0,1)");
        RegimeVerdict v;
        v.condition = "fk05";
        v.threshold = std::pow(n, 1.0 - p) / p * std::log(n) + params.fk05_zeta;
        v.value = generalized_egr_integral(weights, p);
        v.holds = v.value >= v.threshold;
        v.margin = v.value - v.threshold;
        if (!v.holds) v.first_violation = times.back();
        out.push_back(v);
    }
    return out;
}

double turnover_estimate(double p, double delta_band, double egr_integral) {
    require(delta_band > 0.0, "turnover_estimate: band must be positive");
    require(egr_integral >= 0.0, "turnover_estimate: integral must be nonnegative");
    return 2.0 / delta_band * (1.0 - p) * (1.0 - p) * egr_integral;
}

}  // namespace spt
