#include "gen_catalog.hpp"
#include "spt/analytics.hpp"
#include "spt/backtest.hpp"
#include "spt/bounds.hpp"
#include "spt/json_util.hpp"
#include "spt/market.hpp"
#include "spt/rules.hpp"
#include "spt/weights.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

using namespace spt;
using namespace testing_support;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, double budget_s, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > budget_s) {
        o.pass = false;
        o.detail += "; over the " + std::to_string(static_cast<int>(budget_s)) + " s budget";
    }
    if (!o.pass) ++failures;
    std::printf("[%s] criterion %2d: %s (%s; %.2f s)\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(),
                secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

Mat random_psd(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Mat b(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) b(i, j) = nd(rng);
    return b * b.transpose() / n;
}

std::vector<Vec> random_weight_path(int n, int steps, double vol, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    std::vector<Vec> out;
    Vec logx = Vec::Zero(n);
    for (int i = 0; i < n; ++i) logx[i] = 0.5 * nd(rng);
    for (int k = 0; k <= steps; ++k) {
        Vec x = logx.array().exp();
        out.push_back(x / x.sum());
        for (int i = 0; i < n; ++i) logx[i] += vol * nd(rng);
    }
    return out;
}

MarketPath path_of(const std::vector<Vec>& caps) {
    MarketPath p;
    for (std::size_t k = 0; k < caps.size(); ++k) {
        p.times.push_back(static_cast<double>(k));
        p.caps.push_back(caps[k]);
    }
    return p;
}

Outcome identities() {
    std::mt19937_64 rng(101);
    double zeroo = 0, numinv = 0, norm = 0, pw = 0;
    for (int k = 0; k < 1000; ++k) {
        const int n = 2 + k % 9;
        Mat a = random_psd(n, rng);
        Vec pi = interior_point(n, rng, false);
        Vec rho = interior_point(n, rng, false);
        zeroo = std::max(zeroo, (relative_covariance(a, pi) * pi).cwiseAbs().maxCoeff());
        const double g = excess_growth_rate(pi, a);
        numinv = std::max(numinv, std::fabs(numeraire_invariant_egr(pi, rho, a) - g));
    }
    auto gens = generator_catalog(6);
    for (int k = 0; k < 1000; ++k) {
        const Generator& g = gens[k % gens.size()];
        Vec mu = interior_point(6, rng, g.ranked);
        Vec w = g.ranked ? rank_fgp_weights(g, mu) : fgp_weights(g, mu);
        norm = std::max(norm, std::fabs(w.sum() - 1.0));
    }
    std::uniform_real_distribution<double> U(0.05, 1.0);
    for (int k = 0; k < 1000; ++k) {
        auto w = random_weight_path(4, 20, 0.05, rng);
        std::vector<Vec> pis;
        std::vector<double> t;
        for (std::size_t s = 0; s < w.size(); ++s) {
            Vec p(4);
            for (int i = 0; i < 4; ++i) p[i] = U(rng);
            pis.push_back(p / p.sum());
            t.push_back(0.01 * s);
        }
        auto L = palwong_decomposition(t, w, pis);
        for (double r : L.residual) pw = std::max(pw, std::fabs(r));
    }
    const double worst = std::max({zeroo, numinv, norm, pw});
    char buf[256];
    std::snprintf(buf, sizeof buf, "max errors: zeroo %.1e, numeraire %.1e, row sum %.1e, pal-wong %.1e", zeroo, numinv,
                  norm, pw);
    return {worst <= 1e-10, buf};
}

Outcome generator_calculus() {
    std::mt19937_64 rng(202);
    double worst = 0;
    std::string where;
    int count = 0;
    for (int n : {2, 5, 50}) {
        for (const auto& g : generator_catalog(n)) {
            for (int k = 0; k < 100; ++k) {
                Vec x = interior_point(n, rng, g.ranked);
                const double e = std::max(rel_err(fd_gradient(g, x), g.grad(x)), rel_err(fd_hessian(g, x), g.hess(x)));
                ++count;
                if (e > worst) {
                    worst = e;
                    where = g.name + " n=" + std::to_string(n);
                }
            }
        }
    }
    return {worst < 1e-6, std::to_string(count) + " checks, max relative error " + fmt("%.2e", worst) + " at " + where};
}

Outcome closed_forms() {
    std::mt19937_64 rng(303);
    double worst = 0;
    for (int k = 0; k < 1000; ++k) {
        const int n = 2 + k % 30;
        Vec mu = interior_point(n, rng, false);
        for (double p : {-2.0, -0.5, 0.25, 0.5, 0.9}) {
            Vec direct = mu.array().pow(p);
            direct /= direct.sum();
            worst = std::max(worst, (fgp_weights(dwp_generator(p), mu) - direct).cwiseAbs().maxCoeff());
        }
        for (double c : {0.1, 1.0, 10.0}) {
            Vec direct = mu.array() * (c - mu.array().log());
            direct /= direct.sum();
            worst = std::max(worst, (fgp_weights(entropy_generator(c), mu) - direct).cwiseAbs().maxCoeff());
        }
    }
    return {worst <= 1e-12, "max deviation " + fmt("%.2e", worst)};
}

Outcome vsm_constants() {
    auto spec = vsm_spec(10, 0.0);
    SimGrid g{1.0, 1000, Scheme::EulerLog};
    auto paths = simulate_paths(spec, g, 100, 404);
    double gs = 0, am = 0;
    int aborted = 0;
    for (const auto& p : paths) {
        if (p.aborted) {
            ++aborted;
            continue;
        }
        auto st = realized_market_stats(p);
        gs += st.gamma_star;
        am += st.a_mumu;
    }
    const int used = 100 - aborted;
    gs /= used;
    am /= used;
    const bool ok = aborted == 0 && std::fabs(gs / 4.5 - 1) < 0.02 && std::fabs(am - 1) < 0.02;
    return {ok, fmt("mean realized gamma* %.4f (target 4.5), a_mumu %.4f (target 1)", gs, am) +
                    ", aborted " + std::to_string(aborted)};
}

Outcome master_convergence() {
    Mat sigma = 0.25 * Mat::Identity(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            if (i != j) sigma(i, j) = 0.05;
    Vec gamma(5);
    gamma << 0.02, 0.0, -0.01, 0.03, 0.01;
    auto spec = constant_spec(gamma, sigma);
    spec.x0 = Eigen::Matrix<double, 5, 1>(5, 4, 3, 2, 1);
    const int fine = 1000, n_paths = 400;
    SimGrid g{4.0, 4 * fine, Scheme::ExactLogGbm};
    auto paths = simulate_paths(spec, g, n_paths, 505);
    std::string detail;
    bool ok = true;
    for (int which = 0; which < 2; ++which) {
        Generator G = which == 0 ? dwp_generator(0.5) : entropy_generator(1.0);
        double res[3] = {0, 0, 0};
        for (const auto& p : paths) {
            auto mu = market_weights(p);
            int idx = 0;
            for (int stride : {4, 2, 1}) {
                std::vector<Vec> w;
                std::vector<double> t;
                for (std::size_t k = 0; k < mu.size(); k += stride) {
                    w.push_back(mu[k]);
                    t.push_back(p.times[k]);
                }
                std::vector<Vec> pis;
                for (const auto& x : w) pis.push_back(fgp_weights(G, x));
                res[idx++] += std::fabs(master_decomposition(G, t, w, pis).residual.back()) / n_paths;
            }
        }
        const double r1 = res[1] / res[0], r2 = res[2] / res[1];
        ok = ok && r1 >= 0.35 && r1 <= 0.65 && r2 >= 0.35 && r2 <= 0.65;
        char buf[200];
        std::snprintf(buf, sizeof buf, "%s%s: |residual| %.2e/%.2e/%.2e ratios %.3f %.3f", which ? "; " : "",
                      G.name.c_str(), res[0], res[1], res[2], r1, r2);
        detail += buf;
    }
    return {ok, detail};
}

Outcome ensemble_check(EnsembleConfig cfg, const std::string& label) {
    auto s = verify_ensemble(cfg);
    const double frac = static_cast<double>(s.terminal_pass) / s.paths;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s: T=%.4f, %d/%d terminal passes (%.1f%%), aborted %d, min lhs(T) %.4f", label.c_str(),
                  cfg.grid.T, s.terminal_pass, s.paths, 100 * frac, s.aborted, s.min_terminal_lhs);
    return {frac >= 0.99, buf};
}

SimGrid grid_covering(double horizon, double dt) {
    const int steps = static_cast<int>(std::ceil(horizon / dt - 1e-9));
    return SimGrid{steps * dt, steps, Scheme::EulerLog};
}

Outcome vsm_arbitrage() {
    EnsembleConfig cfg;
    cfg.spec = vsm_spec(10, 0.0);
    auto b = horizon_bound("vsm_dwp_half", {{"n", 10}});
    cfg.bound = b;
    cfg.grid = grid_covering(1.1 * *b.value, 1e-3);
    cfg.n_paths = 1000;
    cfg.seed = 606;
    cfg.generator = dwp_generator(0.5);
    cfg.floor = floor_function(b);
    return ensemble_check(cfg, "dwp p=0.5 on vsm n=10");
}

Outcome entropy_horizon() {
    EnsembleConfig cfg;
    cfg.spec = vsm_spec(10, 0.0);
    auto b = horizon_bound("entropy", {{"n", 10}, {"zeta", 4.5}, {"c", 10}});
    cfg.bound = b;
    cfg.grid = grid_covering(*b.value, 1e-3);
    cfg.n_paths = 1000;
    cfg.seed = 707;
    cfg.generator = entropy_generator(10.0);
    cfg.floor = floor_function(b);
    return ensemble_check(cfg, "entropy c=10, horizon " + fmt("%.4f", *b.value));
}

Outcome negative_p() {
    const int n = 5;
    Vec x0(n);
    x0 << 0.25, 0.2, 0.2, 0.2, 0.15;
    const double delta = 0.8 * x0.minCoeff();
    const double s = 0.3, eps = s * s;
    const double lo = std::log(double(n)) / std::log(n * delta);
    const double p = 0.5 * lo;
    EnsembleConfig cfg;
    cfg.spec = log_mean_reverting_spec(n, 5.0, s);
    cfg.spec.x0 = x0;
    auto b = horizon_bound("neg_p_dwp", {{"n", n}, {"p", p}, {"eps", eps}, {"delta", delta}});
    cfg.bound = b;
    cfg.grid = grid_covering(*b.value, 1e-3);
    cfg.n_paths = 1000;
    cfg.seed = 808;
    cfg.generator = dwp_generator(p);
    cfg.floor = floor_function(b);
    cfg.regime = RegimeParams{};
    cfg.regime->nofail_delta = delta;
    auto r = verify_ensemble(cfg);
    char buf[300];
    std::snprintf(buf, sizeof buf,
                  "delta=%.3f p=%.4f eps=%.3f T*=%.4f: qualifying %d/%d (%.1f%%), floor met at T on %d, min margin %.4f, "
                  "aborted %d",
                  delta, p, eps, *b.value, r.qualifying, r.paths, 100.0 * r.qualifying / r.paths, r.terminal_floor_pass,
                  r.qualifying ? r.min_terminal_margin : 0.0, r.aborted);
    return {r.qualifying > 0 && r.terminal_floor_pass == r.qualifying && r.aborted == 0, buf};
}

Outcome bound_arithmetic() {
    const double a = 2.0 * std::log(100.0) / (0.5 * 1.0 * 0.1);
    const double b = 8.0 * std::log(10.0) / 9.0;
    const double c = std::log(10.0) / 4.5;
    const double va = *horizon_bound("diverse_dwp", {{"n", 100}, {"p", 0.5}, {"eps", 1}, {"delta", 0.1}}).value;
    const double vb = *horizon_bound("vsm_dwp_half", {{"n", 10}}).value;
    const double vc = *horizon_bound("entropy_limit", {{"n", 10}, {"zeta", 4.5}}).value;
    const bool ok = std::fabs(va - a) <= 1e-9 && std::fabs(vb - b) <= 1e-9 && std::fabs(vc - c) <= 1e-9 &&
                    std::fabs(va - 184.207) < 1e-3 && std::fabs(vb - 2.0467) < 1e-4 && std::fabs(vc - 0.51168) < 1e-5;
    char buf[200];
    std::snprintf(buf, sizeof buf, "values %.6f, %.6f, %.6f", va, vb, vc);
    return {ok, buf};
}

Outcome backtest_golden() {
    bool ok = true;
    std::string detail;
    auto single = path_of({Vec::Constant(1, 2.0), Vec::Constant(1, 3.0), Vec::Constant(1, 2.5)});
    MapRule one("one", [](const Vec& m) { return Vec::Ones(m.size()); });
    auto r1 = run_backtest(one, single, CostModel{}, RebalancePolicy::every(1));
    for (std::size_t k = 0; k < single.size(); ++k) ok = ok && r1.V[k] == single.caps[k][0] / 2.0;

    Vec a(2), b(2);
    a << 1, 1;
    b << 2, 1;
    auto two = path_of({a, b});
    auto eq = make_rule(json::parse(R"({"rule": "equal"})"));
    auto r3 = run_backtest(*eq, two, CostModel{}, RebalancePolicy::every(1));
    ok = ok && r3.V[1] == 1.5 && std::fabs(r3.traded[1] - 0.5) < 1e-15;
    auto r3c = run_backtest(*eq, two, CostModel{0.01, CostConvention::RoundTrip}, RebalancePolicy::every(1));
    ok = ok && std::fabs(r3c.total_costs - 0.01 * 1.5 * (1.0 / 3) * 2) < 1e-15;

    std::mt19937_64 rng(1010);
    auto mkt = make_rule(json::parse(R"({"rule": "market"})"));
    int market_trades = 0;
    double market_costs = 0;
    for (int k = 0; k < 20; ++k) {
        auto p = path_of(random_weight_path(6, 100, 0.03, rng));
        auto r2 = run_backtest(*mkt, p, CostModel{0.01, CostConvention::OneWay}, RebalancePolicy::every(1));
        market_trades += r2.n_trades;
        market_costs += r2.total_costs;
        for (std::size_t s = 0; s < p.size(); ++s) ok = ok && std::fabs(r2.V[s] / r2.V_mkt[s] - 1) < 1e-12;
    }
    ok = ok && market_trades == 0 && market_costs == 0.0;

    auto fixed = path_of(random_weight_path(5, 500, 0.02, rng));
    auto dwp = make_rule(json::parse(R"({"rule": "dwp", "p": 0.5})"));
    double prev = 1e300;
    bool mono = true;
    for (double rate : {0.0, 0.001, 0.01}) {
        auto r = run_backtest(*dwp, fixed, CostModel{rate, CostConvention::OneWay}, RebalancePolicy::every(1));
        mono = mono && r.log_V < prev;
        prev = r.log_V;
    }
    ok = ok && mono;
    detail = "golden examples, market rule trades " + std::to_string(market_trades) + ", cost monotone " +
             (mono ? "yes" : "no");
    return {ok, detail};
}

Outcome frictionless() {
    std::mt19937_64 rng(1111);
    auto w = random_weight_path(8, 1000, 0.02, rng);
    auto p = path_of(w);
    auto rule = make_rule(json::parse(R"({"rule": "fgp", "generator": {"name": "power", "p": 0.3}})"));
    auto r = run_backtest(*rule, p, CostModel{}, RebalancePolicy::every(1));
    std::vector<Vec> pis;
    for (const auto& x : w) pis.push_back(dwp_weights(x, 0.3));
    const double diff = std::fabs(r.terminal_log_relative - discrete_lhs(w, pis).back());
    return {diff <= 1e-12, "difference " + fmt("%.2e", diff)};
}

Outcome diversity_implication() {
    std::mt19937_64 rng(1212);
    auto eq = make_rule(json::parse(R"({"rule": "equal"})"));
    int applicable = 0, holds = 0;
    double worst = 1e300;
    for (int k = 0; k < 1000; ++k) {
        const int n = 2 + k % 8;
        auto w = random_weight_path(n, 50, 0.05, rng);
        const double dD = diversity_D(w.back()) - diversity_D(w.front());
        if (dD < 0.0) continue;
        ++applicable;
        auto r = run_backtest(*eq, path_of(w), CostModel{}, RebalancePolicy::every(1));
        const double margin = r.terminal_log_relative - dD;
        worst = std::min(worst, margin);
        if (margin >= -1e-10) ++holds;
    }
    return {applicable > 0 && holds == applicable,
            std::to_string(holds) + "/" + std::to_string(applicable) + " paths with rising diversity, min margin " +
                fmt("%.3e", worst)};
}

}  // namespace

int main() {
    apply_thread_limit_from_env();
    criterion(1, "algebraic identities", 10, identities);
    criterion(2, "generator gradients and hessians", 30, generator_calculus);
    criterion(3, "closed-form weight agreement", 1e9, closed_forms);
    criterion(4, "volatility-stabilised constants", 60, vsm_constants);
    criterion(5, "master equation convergence", 60, master_convergence);
    criterion(6, "volatility-stabilised relative arbitrage", 300, vsm_arbitrage);
    criterion(7, "entropy portfolio horizon", 300, entropy_horizon);
    criterion(8, "negative-p conditional bound", 300, negative_p);
    criterion(9, "bound arithmetic", 1e9, bound_arithmetic);
    criterion(10, "backtest golden tests", 1e9, backtest_golden);
    criterion(11, "frictionless consistency", 1e9, frictionless);
    criterion(12, "equal-weight diversity implication", 1e9, diversity_implication);
    std::printf("%d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
