#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "gen_catalog.hpp"
#include "spt/json_util.hpp"
#include "spt/rules.hpp"
#include "spt/weights.hpp"

#include <boost/math/special_functions/gamma.hpp>

using namespace spt;
using namespace testing_support;

TEST_CASE("gradients and hessians match finite differences") {
    std::mt19937_64 rng(17);
    for (int n : {2, 5, 12}) {
        for (const auto& g : generator_catalog(n)) {
            for (int k = 0; k < 10; ++k) {
                Vec x = interior_point(n, rng, g.ranked);
                INFO(g.name << " n=" << n);
                CHECK(rel_err(fd_gradient(g, x), g.grad(x)) < 1e-6);
                CHECK(rel_err(fd_hessian(g, x), g.hess(x)) < 1e-6);
            }
        }
    }
}

TEST_CASE("incomplete gamma generator endpoint values") {
    auto g = incomplete_gamma_generator(2.5);
    Vec one(1), zero(1);
    one << 1.0;
    zero << 0.0;
    CHECK(g.value(one) == doctest::Approx(1.0));
    CHECK(g.value(zero) == 0.0);
    Vec x(2);
    x << 0.3, 0.7;
    const double ref = boost::math::gamma_q(3.5, -std::log(0.3)) + boost::math::gamma_q(3.5, -std::log(0.7));
    CHECK(g.value(x) == doctest::Approx(ref).epsilon(1e-12));
    Vec bad(2);
    bad << 1.5, 0.1;
    CHECK_THROWS_AS(g.value(bad), ValidationError);
}

TEST_CASE("combinators") {
    CHECK_THROWS_AS(sum({power_generator(0.5), large_stock_generator(1)}), ValidationError);
    CHECK_THROWS_AS(product({}), ValidationError);
    auto neg = affine(power_generator(0.5), -5.0, 1.0);
    Vec x(2);
    x << 0.5, 0.5;
    CHECK_THROWS_AS(neg.value(x), ValidationError);
    auto r = product({large_stock_generator(1), rank_power_generator(0.5, 2, true)});
    CHECK(r.ranked);
    CHECK(r.tie_sensitive.size() == 2);
}

TEST_CASE("catalog construction from json") {
    auto g = make_generator(json::parse(R"({"name": "power_of", "q": 0.5, "of": {"name": "entropy", "c": 1}})"));
    Vec x(3);
    x << 0.5, 0.3, 0.2;
    CHECK(g.value(x) == doctest::Approx(std::sqrt(entropy_generator(1.0).value(x))));
    auto s = make_generator(json::parse(R"({"name": "sum", "of": [{"name": "dwp", "p": 0.5}, {"name": "dwp", "p": -0.5}]})"));
    CHECK(s.value(x) == doctest::Approx(power_generator(0.5).value(x) + power_generator(-0.5).value(x)));
    CHECK_THROWS_AS(make_generator(json::parse(R"({"name": "dwp", "p": 0.5, "extra": 1})")), ValidationError);
    CHECK_THROWS_AS(make_generator(json::parse(R"({"name": "nope"})")), ValidationError);
    auto rk = make_generator(json::parse(R"({"name": "rank_power", "r": 0.5, "m": 2, "side": "top"})"));
    CHECK(rk.ranked);
}
