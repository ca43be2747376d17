#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gen_catalog.hpp"
#include "spt/analytics.hpp"
#include "spt/market.hpp"
#include "spt/weights.hpp"

#include <cmath>
#include <random>

using namespace spt;
using namespace testing_support;

namespace {

Vec v(std::initializer_list<double> xs) {
    Vec r(xs.size());
    int i = 0;
    for (double x : xs) r[i++] = x;
    return r;
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
    for (int k = 0; k <= steps; ++k) {
        Vec x = logx.array().exp();
        out.push_back(x / x.sum());
        for (int i = 0; i < n; ++i) logx[i] += vol * nd(rng);
    }
    return out;
}

std::vector<double> grid(int steps, double dt) {
    std::vector<double> t(steps + 1);
    for (int k = 0; k <= steps; ++k) t[k] = k * dt;
    return t;
}

}  // namespace

TEST_CASE("relative covariance identities") {
    std::mt19937_64 rng(1);
    Mat I = Mat::Identity(2, 2);
    Mat tau = relative_covariance(I, v({0.5, 0.5}));
    Mat expect(2, 2);
    expect << 0.5, -0.5, -0.5, 0.5;
    CHECK((tau - expect).norm() < 1e-15);
    CHECK(relative_covariance(I, v({0.0, 1.0}))(1, 1) == 0.0);
    for (int k = 0; k < 100; ++k) {
        const int n = 2 + k % 7;
        Mat a = random_psd(n, rng);
        Vec pi = interior_point(n, rng, false);
        Mat t = relative_covariance(a, pi);
        CHECK((t * pi).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((t - t.transpose()).norm() < 1e-14);
        CHECK(t.diagonal().minCoeff() >= -1e-14);
    }
}

TEST_CASE("excess growth rate and numeraire invariance") {
    Mat I = Mat::Identity(2, 2);
    CHECK(excess_growth_rate(v({0.5, 0.5}), I) == doctest::Approx(0.25));
    CHECK(excess_growth_rate(v({1.0, 0.0}), I) == 0.0);
    CHECK(numeraire_invariant_egr(v({0.5, 0.5}), v({1.0, 0.0}), I) == doctest::Approx(0.25));
    std::mt19937_64 rng(2);
    for (int k = 0; k < 100; ++k) {
        const int n = 2 + k % 6;
        Mat a = random_psd(n, rng);
        Vec pi = interior_point(n, rng, false);
        Vec rho = interior_point(n, rng, false);
        const double g = excess_growth_rate(pi, a);
        CHECK(numeraire_invariant_egr(pi, rho, a) == doctest::Approx(g).epsilon(1e-12));
        CHECK(0.5 * pi.dot(relative_covariance(a, pi).diagonal()) == doctest::Approx(g).epsilon(1e-12));
        CHECK(g >= -1e-12);
        // nondegeneracy lower bound
        const double eps = 0.3;
        Mat an = eps * Mat::Identity(n, n) + a;
        CHECK(excess_growth_rate(pi, an) >= eps / 2 * (1 - pi.maxCoeff()) - 1e-12);
    }
    // exact volatility-stabilised covariance gives (n-1)/2
    const int n = 6;
    Vec mu = interior_point(n, rng, false);
    Mat a = mu.cwiseInverse().asDiagonal();
    CHECK(excess_growth_rate(mu, a) == doctest::Approx((n - 1) / 2.0).epsilon(1e-12));
}

TEST_CASE("realized covariance of exact gbm") {
    MarketPath flat;
    for (int k = 0; k <= 10; ++k) {
        flat.times.push_back(k * 0.1);
        flat.caps.push_back(v({2.0}));
    }
    auto ez = realized_covariance(flat, 5);
    for (const auto& a : ez.a) CHECK(a.norm() == 0.0);

    auto one = constant_spec(v({0.0}), Mat::Constant(1, 1, 0.2));
    auto two = constant_spec(v({0.0, 0.0}), 0.2 * Mat::Identity(2, 2));
    SimGrid g{1.0, 10000, Scheme::ExactLogGbm};
    auto p1 = simulate_paths(one, g, 200, 5);
    auto p2 = simulate_paths(two, g, 200, 6);
    int ok1 = 0, ok2 = 0;
    for (int s = 0; s < 200; ++s) {
        auto e1 = realized_covariance(p1[s], 10000);
        REQUIRE(e1.a.size() == 1);
        if (std::fabs(e1.a[0](0, 0) / 0.04 - 1) < 0.05) ++ok1;
        auto e2 = realized_covariance(p2[s], 10000);
        if (std::fabs(e2.a[0](0, 1)) < 0.02) ++ok2;
    }
    CHECK(ok1 >= 190);
    CHECK(ok2 >= 190);
}

TEST_CASE("realized covariance excludes dead stocks and projects") {
    MarketPath p;
    for (int k = 0; k <= 6; ++k) {
        p.times.push_back(k);
        p.caps.push_back(v({1.0 + 0.1 * (k % 2), k < 4 ? 1.0 + 0.05 * k : 0.0}));
    }
    auto e = realized_covariance(p, 2);
    REQUIRE(e.a.size() == 5);
    CHECK(e.excluded.front().empty());
    CHECK(e.excluded.back() == std::vector<int>{1});
    CHECK(e.a.back()(1, 1) == 0.0);
    Mat bad(2, 2);
    bad << 1, 2, 2, 1;
    double nrm = 0;
    Mat pr = psd_project(bad, &nrm);
    CHECK(nrm > 0.0);
    Eigen::SelfAdjointEigenSolver<Mat> es(pr);
    CHECK(es.eigenvalues().minCoeff() >= -1e-14);
    CHECK_THROWS_AS(realized_covariance(p, 1), ValidationError);
}

TEST_CASE("master decomposition of the market portfolio is trivial") {
    std::mt19937_64 rng(3);
    auto w = random_weight_path(4, 200, 0.01, rng);
    auto t = grid(200, 0.005);
    auto d = master_decomposition(constant_generator(1.0), t, w, w);
    for (std::size_t k = 0; k < t.size(); ++k) {
        CHECK(std::fabs(d.lhs[k]) < 1e-14);
        CHECK(d.gterm[k] == 0.0);
        CHECK(d.drift_int[k] == 0.0);
    }
}

TEST_CASE("master decomposition drift matches the closed forms") {
    std::mt19937_64 rng(4);
    const int n = 5, steps = 300;
    const double dt = 1e-3;
    auto w = random_weight_path(n, steps, 0.02, rng);
    auto t = grid(steps, dt);
    const double p = 0.4;
    std::vector<Vec> pis;
    for (const auto& x : w) pis.push_back(dwp_weights(x, p));
    auto d = master_decomposition(dwp_generator(p), t, w, pis);
    REQUIRE(d.residual.front() == 0.0);
    for (int s = 0; s < steps; ++s) {
        Vec r = (w[s + 1] - w[s]).cwiseQuotient(w[s]);
        Mat tau = r * r.transpose() / dt;
        const Vec& pi = pis[s];
        const double g = 0.5 * (pi.dot(tau.diagonal()) - pi.dot(tau * pi));
        CHECK(d.drift_rate[s] == doctest::Approx((1 - p) * g).epsilon(1e-10));
    }
    const double c = 2.0;
    std::vector<Vec> pe;
    for (const auto& x : w) pe.push_back(ewp_weights(x, c));
    auto de = master_decomposition(entropy_generator(c), t, w, pe);
    for (int s = 0; s < steps; ++s) {
        Vec r = (w[s + 1] - w[s]).cwiseQuotient(w[s]);
        const double gstar = 0.5 * w[s].dot(r.cwiseProduct(r)) / dt;
        const double H = entropy_generator(c).value(w[s]);
        CHECK(de.drift_rate[s] == doctest::Approx(gstar / H).epsilon(1e-10));
    }
    CHECK(std::fabs(de.residual.back()) < 1e-3);
    pis[3][0] += 1e-6;
    pis[3][1] -= 1e-6;
    CHECK_THROWS_AS(master_decomposition(dwp_generator(p), t, w, pis), ValidationError);
    w[7][2] = 0.0;
    CHECK_THROWS_AS(master_decomposition(dwp_generator(p), t, w, pe), RuntimeAbort);
}

TEST_CASE("master decomposition residual shrinks with the step") {
    auto spec = constant_spec(Vec::Constant(3, 0.0), 0.3 * Mat::Identity(3, 3));
    spec.x0 = v({3, 2, 1});
    double prev = 0.0;
    for (int steps : {250, 500, 1000}) {
        SimGrid g{1.0, steps, Scheme::ExactLogGbm};
        double total = 0.0;
        auto paths = simulate_paths(spec, g, 40, 77);
        for (const auto& path : paths) {
            auto w = market_weights(path);
            std::vector<Vec> pis;
            for (const auto& x : w) pis.push_back(dwp_weights(x, 0.5));
            total += std::fabs(master_decomposition(dwp_generator(0.5), path, pis).residual.back());
        }
        if (prev > 0.0) CHECK(total < prev);
        prev = total;
    }
}

TEST_CASE("rank decomposition of rank-uniform and large-stock portfolios") {
    auto spec = atlas_spec(4, 0.5, v({0.3, 0.3, 0.3, 0.3}));
    spec.x0 = v({1.0, 1.01, 1.02, 1.03});
    SimGrid g{0.5, 2000, Scheme::EulerLog};
    auto path = simulate_path(spec, g, 11, 0);
    auto w = market_weights(path);

    Generator geo = geometric_mean_generator();
    geo.ranked = true;
    std::vector<Vec> ew(w.size(), Vec::Constant(4, 0.25));
    auto d = rank_master_decomposition(geo, path, ew);
    for (double x : d.lt_term) CHECK(x == 0.0);

    const int m = 2;
    std::vector<Vec> ls;
    for (const auto& x : w) ls.push_back(rank_fgp_weights(large_stock_generator(m), x));
    auto dl = rank_master_decomposition(large_stock_generator(m), path, ls);
    for (double x : dl.drift_int) CHECK(x == 0.0);
    Mat inc = local_time_increments(w, LocalTimeMethod::Tanaka);
    RankMap rm = rank_map(w);
    double lt = 0.0;
    for (std::size_t s = 0; s + 1 < w.size(); ++s) {
        const double zeta_m = rm.ranked[s][m - 1] / (rm.ranked[s][0] + rm.ranked[s][1]);
        lt += -0.5 * zeta_m * inc(s, m - 1);
    }
    // the upper boundaries only contribute through the discrete weight gap at a crossing
    CHECK(dl.lt_term.back() == doctest::Approx(lt).epsilon(0.02));
    CHECK(std::fabs(dl.residual.back()) < 0.05 * std::max(1e-3, std::fabs(dl.lhs.back())) + 1e-3);
    CHECK_THROWS_AS(rank_master_decomposition(dwp_generator(0.5), path, ls), ValidationError);
}

TEST_CASE("local time estimators") {
    std::vector<Vec> fixed(50, v({0.5, 0.3, 0.2}));
    for (int k : {1, 2})
        for (auto m : {LocalTimeMethod::Tanaka, LocalTimeMethod::Fernholz})
            for (double x : local_time_profile(fixed, k, m)) CHECK(x == 0.0);
    std::mt19937_64 rng(8);
    for (int r = 0; r < 100; ++r) {
        auto w = random_weight_path(3, 100, 0.05, rng);
        for (auto m : {LocalTimeMethod::Tanaka, LocalTimeMethod::Fernholz}) {
            auto lt = local_time_profile(w, 1 + r % 2, m);
            CHECK(lt.front() == 0.0);
            for (std::size_t s = 1; s < lt.size(); ++s) CHECK(lt[s] >= lt[s - 1]);
        }
    }
    CHECK_THROWS_AS(local_time_profile(fixed, 3, LocalTimeMethod::Tanaka), ValidationError);
    CHECK(parse_local_time_method("fernholz") == LocalTimeMethod::Fernholz);
    CHECK_THROWS_AS(parse_local_time_method("x"), ValidationError);
}

TEST_CASE("tanaka estimate on a reflected walk") {
    // log(mu_1 / mu_2) = Y is a lattice walk started off zero, so
    // log(mu_(1)/mu_(2)) = |Y| is a reflected walk; each zero crossing
    // contributes one lattice step of local time.
    const double h = 0.01;
    std::mt19937_64 rng(12);
    std::bernoulli_distribution coin(0.5);
    double y = h / 2;
    std::vector<Vec> w;
    int crossings = 0;
    for (int k = 0; k <= 10000; ++k) {
        Vec x = v({std::exp(y / 2), std::exp(-y / 2)});
        w.push_back(x / x.sum());
        const double next = y + (coin(rng) ? h : -h);
        if ((next > 0) != (y > 0)) ++crossings;
        y = next;
    }
    REQUIRE(crossings > 10);
    auto lt = local_time_profile(w, 1, LocalTimeMethod::Tanaka);
    CHECK(std::fabs(lt.back() / (crossings * h) - 1.0) < 0.1);
}

TEST_CASE("pal-wong ledger") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(0.05, 1.0);
    auto w = random_weight_path(3, 1000, 0.05, rng);
    auto t = grid(1000, 1e-3);
    std::vector<Vec> pis;
    for (std::size_t k = 0; k < w.size(); ++k) {
        Vec p = v({U(rng), U(rng), U(rng)});
        pis.push_back(p / p.sum());
    }
    auto L = palwong_decomposition(t, w, pis);
    double fe = 0, cr = 0, lhs = 0;
    for (std::size_t s = 0; s + 1 < w.size(); ++s) {
        double gain = 0, b = 0;
        for (int i = 0; i < 3; ++i) {
            gain += pis[s][i] * w[s + 1][i] / w[s][i];
            b += pis[s][i] * std::log(w[s + 1][i] / w[s][i]);
        }
        lhs += std::log(gain);
        fe += std::log(gain) - b;
        double h1 = 0, h0 = 0;
        for (int i = 0; i < 3; ++i) {
            h1 += pis[s + 1][i] * std::log(pis[s + 1][i] / w[s + 1][i]);
            h0 += pis[s][i] * std::log(pis[s][i] / w[s + 1][i]);
        }
        cr += h1 - h0;
        CHECK(std::fabs(L.lhs[s + 1] - lhs) < 1e-10);
        CHECK(std::fabs(L.residual[s + 1]) < 1e-10);
    }
    double ent0 = 0, entT = 0;
    for (int i = 0; i < 3; ++i) {
        ent0 += pis[0][i] * std::log(pis[0][i] / w[0][i]);
        entT += pis.back()[i] * std::log(pis.back()[i] / w.back()[i]);
    }
    CHECK(std::fabs(lhs - (fe + ent0 - entT + cr)) < 1e-10);

    auto M = palwong_decomposition(t, w, w);
    for (std::size_t k = 0; k < w.size(); ++k) {
        CHECK(std::fabs(M.lhs[k]) < 1e-12);
        CHECK(M.entropy[k] == 0.0);
    }
    std::vector<Vec> eq(w.size(), Vec::Constant(3, 1.0 / 3));
    auto E = palwong_decomposition(t, w, eq);
    double gsum = 0;
    for (std::size_t s = 0; s + 1 < w.size(); ++s) {
        CHECK(std::fabs(E.cross[s]) < 1e-14);
        gsum += E.free_energy[s];
    }
    const double dterm = (w.back().array() / w.front().array()).log().mean();
    CHECK(E.lhs.back() == doctest::Approx(gsum + dterm).epsilon(1e-12));
    w[5][0] = 0.0;
    CHECK_THROWS_AS(palwong_decomposition(t, w, eq), RuntimeAbort);
}

TEST_CASE("diversity and entropy measures") {
    auto m = diversity_entropy_measures(Vec::Constant(4, 0.25), Vec::Constant(4, 0.25));
    CHECK(m.D == doctest::Approx(-1.3863).epsilon(1e-4));
    CHECK(m.H_shannon == doctest::Approx(1.3863).epsilon(1e-4));
    CHECK(m.H_rel == 0.0);
    CHECK_FALSE(m.boundary);
    auto b = diversity_entropy_measures(v({1.0, 0.0}), v({1.0, 0.0}));
    CHECK(b.boundary);
    CHECK(b.D == 0.0);
    CHECK(b.H_rel == 0.0);
    CHECK_THROWS_AS(relative_entropy(v({0.5, 0.5}), v({1.0, 0.0})), ValidationError);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 50; ++k) {
        Vec a = interior_point(4, rng, false), c = interior_point(4, rng, false);
        CHECK(relative_entropy(a, c) > 0.0);
        CHECK(diversity_D(a) <= std::log(0.25) + 1e-15);
    }
}

TEST_CASE("regime checks") {
    std::vector<Vec> w(10, v({0.4, 0.3, 0.3}));
    auto t = grid(9, 0.1);
    RegimeParams p;
    p.diverse_delta = 0.59;
    p.nofail_delta = 0.3;
    p.weak_diverse_delta = 0.5;
    auto r = regime_checks(t, w, p);
    REQUIRE(r.size() == 3);
    for (const auto& x : r) CHECK(x.holds);
    w[4] = v({0.95, 0.03, 0.02});
    RegimeParams q;
    q.diverse_delta = 0.1;
    auto r2 = regime_checks(t, w, q);
    CHECK_FALSE(r2[0].holds);
    REQUIRE(r2[0].first_violation);
    CHECK(*r2[0].first_violation == doctest::Approx(0.4));
    CHECK(r2[0].value == 0.95);
}

TEST_CASE("generalized excess growth at p = 1") {
    std::mt19937_64 rng(13);
    auto w = random_weight_path(4, 500, 0.01, rng);
    double direct = 0.0;
    for (std::size_t s = 0; s + 1 < w.size(); ++s) {
        Vec r = (w[s + 1] - w[s]).cwiseQuotient(w[s]);
        Mat tau = r * r.transpose();
        direct += excess_growth_rate(w[s], tau);
    }
    CHECK(generalized_egr_integral(w, 1.0) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("turnover estimate") {
    CHECK(turnover_estimate(0.5, 0.02, 0.1) == doctest::Approx(2.5));
    CHECK(turnover_estimate(1.0, 0.02, 0.1) == 0.0);
    CHECK(turnover_estimate(0.5, 0.04, 0.1) == doctest::Approx(1.25));
    CHECK_THROWS_AS(turnover_estimate(0.5, 0.0, 0.1), ValidationError);
}
