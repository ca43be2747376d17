#include "spt/rules.hpp"
#include "spt/json_util.hpp"
#include "spt/special.hpp"
#include "spt/weights.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

namespace spt {

MapRule::MapRule(std::string name, std::function<Vec(const Vec&)> f, std::shared_ptr<const Generator> g)
    : PortfolioRule(std::move(name)), f_(std::move(f)), gen_(std::move(g)) {}

Vec MapRule::weights_at(std::span<const Vec> history, double) {
    require(!history.empty(), name_ + ": empty history");
    return f_(history.back());
}

RulePtr MapRule::clone() const {
    return std::make_unique<MapRule>(*this);
}

void TrackedRule::reset() {
    rel_ = 1.0;
    last_ = Vec();
    seen_ = 0;
}

void TrackedRule::advance(std::span<const Vec> history) {
    require(!history.empty(), name_ + ": empty history");
    if (history.size() == 1) {
        reset();
        seen_ = 1;
        return;
    }
    if (history.size() != seen_ + 1)
        throw RuntimeAbort(name_ + ": stateful rule must be evaluated once per step in order");
    const Vec& prev = history[history.size() - 2];
    const Vec& cur = history.back();
    double growth = 0.0;
    for (Eigen::Index i = 0; i < cur.size(); ++i) {
        if (last_[i] == 0.0) continue;
        if (!(prev[i] > 0.0)) throw RuntimeAbort(name_ + ": position in a stock with zero weight");
        growth += last_[i] * cur[i] / prev[i];
    }
    rel_ *= growth;
    ++seen_;
}

StoppedDwpRule::StoppedDwpRule(double p, double delta, StopVariant variant)
    : TrackedRule(std::string("stopped_dwp_") + (variant == StopVariant::Hat ? "hat" : "tilde")),
      p_(p), delta_(delta), variant_(variant) {
    require(p < 0.0, "stopped_dwp: p must be negative");
    require(delta > 0.0 && delta < 1.0, "stopped_dwp: delta must lie in (0,1)");
}

void StoppedDwpRule::reset() {
    TrackedRule::reset();
    stopped_ = false;
    stop_step_ = -1;
    pot_ = 0.0;
    last_dwp_ = Vec();
}

Vec StoppedDwpRule::weights_at(std::span<const Vec> history, double) {
    advance(history);
    const Vec& mu = history.back();
    const double n = static_cast<double>(mu.size());
    if (seen_ == 1) {
        if (!(delta_ < 1.0 / n))
            throw ValidationError("stopped_dwp: delta must be below 1/n = " + std::to_string(1.0 / n));
        valid_ = p_ > std::log(n) / std::log(n * delta_);
    }
    if (stopped_ && variant_ == StopVariant::Tilde) {
        const Vec& prev = history[history.size() - 2];
        double g = 0.0;
        for (Eigen::Index i = 0; i < mu.size(); ++i) g += last_dwp_[i] * mu[i] / prev[i];
        pot_ *= g;
    }
    if (!stopped_ && mu.minCoeff() <= delta_) {
        stopped_ = true;
        stop_step_ = static_cast<long>(history.size()) - 1;
        pot_ = rel_ - 1.0;
    }
    Vec out;
    if (!stopped_) {
        out = dwp_weights(mu, p_);
    } else if (variant_ == StopVariant::Hat) {
        out = mu;
    } else {
        last_dwp_ = dwp_weights(mu, p_);
        out = (mu + pot_ * last_dwp_) / (1.0 + pot_);
    }
    emitted(out);
    return out;
}

std::vector<std::string> StoppedDwpRule::flags() const {
    std::vector<std::string> f;
    if (!valid_) f.push_back("p outside the horizon-bound validity range");
    if (stopped_) f.push_back("stopped at step " + std::to_string(stop_step_));
    return f;
}

double bf08_c(int n, double T) {
    require(n >= 2, "bf08: n must be >= 2");
    require(T > 0.0, "bf08: T must be positive");
    return 8.0 * n * (n - 1) / T * (1.0 / n) * (1.0 + std::log(static_cast<double>(n)));
}

namespace {

constexpr double kBf08Floor = 1e-300;
constexpr int kBf08Segments = 240;

}  // namespace

Bf08Clock::Bf08Clock(int n, double T) : n_(n), T_(T), c_(bf08_c(n, T)) {
    const double top = 1.0 / n;
    const double span = std::log(top) - std::log(kBf08Floor);
    grid_.resize(kBf08Segments + 1);
    tail_.resize(kBf08Segments + 1);
    for (int j = 0; j <= kBf08Segments; ++j) grid_[j] = top * std::exp(-span * j / kBf08Segments);
    grid_.back() = kBf08Floor;
    tail_[0] = 0.0;
    for (int j = 1; j <= kBf08Segments; ++j) tail_[j] = tail_[j - 1] + segment_integral(grid_[j], grid_[j - 1]);
}

double Bf08Clock::integrand(double r) const {
    const double a = c_ + 1.0;
    const double m = n_ - 1.0;
    auto f = [a](double y) { return gamma_q(a, -std::log(y)); };
    const double L1 = -std::log(r);
    const double L2 = -std::log1p(-m * r);
    const double A = m * f(r) + f(1.0 - m * r);
    const double B = f(r) + m * f((1.0 - r) / m);
    double second = 0.0;
    if (L2 > 0.0) second = std::exp(c_ * std::log(L2) - (c_ - 1.0) * std::log(L1) - std::log(c_));
    return m * 4.0 * B / A * (L1 / c_ - second);
}

double Bf08Clock::segment_integral(double a, double b) const {
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
        [this](double u) {
            const double r = std::exp(u);
            return integrand(r) * r;
        },
        std::log(a), std::log(b), 8, 1e-12, &err);
    if (!std::isfinite(v)) throw RuntimeAbort("bf08: quadrature failed on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
    return v;
}

double Bf08Clock::T1(double y) const {
    require(y > 0.0 && y <= 1.0 / n_, "bf08: T1 argument outside (0, 1/n]");
    if (y <= grid_.back()) return T_ / 2 + tail_.back() + segment_integral(y, grid_.back());
    auto it = std::lower_bound(grid_.begin(), grid_.end(), y, std::greater<double>());
    std::size_t j = static_cast<std::size_t>(it - grid_.begin());
    if (grid_[j] == y) return T_ / 2 + tail_[j];
    --j;
    return T_ / 2 + tail_[j] + segment_integral(y, grid_[j]);
}

double Bf08Clock::Y(double t) const {
    const double s = t - T_ / 2;
    if (s <= 0.0) return 1.0 / n_;
    if (s >= tail_.back()) return 0.0;
    auto it = std::upper_bound(tail_.begin(), tail_.end(), s);
    std::size_t j = static_cast<std::size_t>(it - tail_.begin()) - 1;
    double lo = std::log(grid_[j + 1]), hi = std::log(grid_[j]);
    for (int iter = 0; iter < 200; ++iter) {
        double mid = 0.5 * (lo + hi);
        double v = tail_[j] + segment_integral(std::exp(mid), grid_[j]);
        if (!std::isfinite(v)) throw RuntimeAbort("bf08: inversion failed at t=" + std::to_string(t));
        if (v > s) lo = mid;
        else hi = mid;
        if (hi - lo < 1e-8) return std::exp(0.5 * (lo + hi));
    }
    throw RuntimeAbort("bf08: inversion did not converge at t=" + std::to_string(t));
}

Bf08Rule::Bf08Rule(int n, double T, const Vec& mu0)
    : TrackedRule("bf08"), n_(n), T_(T) {
    require(n >= 2, "bf08: n must be >= 2");
    require(T > 0.0, "bf08: T must be positive");
    require(mu0.size() == n, "bf08: initial weights must have n entries");
    check_weight_row(mu0);
    clock_ = std::make_shared<Bf08Clock>(n, T);
    gen_ = std::make_shared<Generator>(incomplete_gamma_generator(clock_->c()));
}

void Bf08Rule::reset() {
    TrackedRule::reset();
    switched_ = false;
    switch_time_ = -1.0;
}

Vec Bf08Rule::weights_at(std::span<const Vec> history, double t) {
    advance(history);
    const Vec& mu = history.back();
    require(mu.size() == n_, "bf08: weight row has the wrong size");
    if (!switched_ && t >= T_ / 2 && mu.minCoeff() > clock_->Y(t)) {
        switched_ = true;
        switch_time_ = t;
    }
    Vec out = switched_ ? mu : fgp_weights(*gen_, mu);
    emitted(out);
    return out;
}

double short_term_q_threshold(double eps, double delta, double T, double mu1_0) {
    require(eps > 0.0 && delta > 0.0 && T > 0.0, "q threshold needs positive eps, delta, T");
    require(mu1_0 > 0.0 && mu1_0 < 1.0, "q threshold needs mu_1(0) in (0,1)");
    return 1.0 + 2.0 / (eps * delta * delta * T) * std::log(1.0 / mu1_0);
}

ShortTermArbitrageRule::ShortTermArbitrageRule(double q, double T)
    : TrackedRule("short_term_arbitrage"), q_(q), T_(T) {
    require(q > 1.0, "short_term_arbitrage: q must exceed 1");
    require(T > 0.0, "short_term_arbitrage: T must be positive");
}

void ShortTermArbitrageRule::reset() {
    TrackedRule::reset();
    seed_rel_ = 1.0;
    last_seed_ = Vec();
}

Vec ShortTermArbitrageRule::seed_weights(const Vec& mu, double q) {
    Vec e1 = Vec::Zero(mu.size());
    e1[0] = 1.0;
    return q_mirror(e1, mu, q);
}

Vec ShortTermArbitrageRule::weights_at(std::span<const Vec> history, double) {
    advance(history);
    const Vec& mu = history.back();
    if (seen_ == 1) {
        const double beta = mu[0];
        require(beta > 0.0 && beta < 1.0, "short_term_arbitrage: mu_1(0) must lie in (0,1)");
        long_units_ = q_ / std::pow(beta, q_);
        z_ = long_units_ - 1.0;
        seed_rel_ = 1.0;
    } else {
        const Vec& prev = history[history.size() - 2];
        double g = 0.0;
        for (Eigen::Index i = 0; i < mu.size(); ++i)
            if (last_seed_[i] != 0.0) g += last_seed_[i] * mu[i] / prev[i];
        seed_rel_ *= g;
    }
    const double wealth = long_units_ - seed_rel_;
    if (!(wealth > 0.0))
        throw RuntimeAbort("short_term_arbitrage: combined wealth nonpositive at step " + std::to_string(history.size() - 1));
    last_seed_ = seed_weights(mu, q_);
    Vec out = (long_units_ * mu - seed_rel_ * last_seed_) / wealth;
    emitted(out);
    return out;
}

namespace {

std::shared_ptr<const Generator> shared(Generator g) {
    return std::make_shared<const Generator>(std::move(g));
}

RulePtr generator_rule(const std::string& name, Generator g) {
    auto sg = shared(std::move(g));
    if (sg->ranked)
        return std::make_unique<MapRule>(name, [sg](const Vec& mu) { return rank_fgp_weights(*sg, mu); }, sg);
    return std::make_unique<MapRule>(name, [sg](const Vec& mu) { return fgp_weights(*sg, mu); }, sg);
}

bool parse_side(const json& j, const std::string& where) {
    std::string side = get_str(j, "side", "top", where);
    if (side == "top") return true;
    if (side == "bottom") return false;
    throw ValidationError(where + ": side must be 'top' or 'bottom'");
}

}  // namespace

Generator make_generator(const json& j) {
    const std::string where = "generator";
    require(j.is_object(), "generator: expected a JSON object");
    const std::string name = get_str(j, "name", "", where);
    auto of_list = [&](const json& v) {
        require(v.is_array() && !v.empty(), where + ": 'of' must be a nonempty array");
        std::vector<Generator> gs;
        for (const auto& e : v) gs.push_back(make_generator(e));
        return gs;
    };
    if (name == "constant") {
        check_keys(j, {"name", "c"}, where);
        return constant_generator(get_num(j, "c", 1.0, where));
    }
    if (name == "dwp" || name == "power") {
        check_keys(j, {"name", "p"}, where);
        double p = get_num(j, "p", where);
        return name == "dwp" ? dwp_generator(p) : power_generator(p);
    }
    if (name == "geometric_mean") {
        check_keys(j, {"name"}, where);
        return geometric_mean_generator();
    }
    if (name == "entropy") {
        check_keys(j, {"name", "c"}, where);
        return entropy_generator(get_num(j, "c", where));
    }
    if (name == "sum_power") {
        check_keys(j, {"name", "p"}, where);
        return sum_power_generator(get_num(j, "p", where));
    }
    if (name == "incomplete_gamma") {
        check_keys(j, {"name", "c"}, where);
        return incomplete_gamma_generator(get_num(j, "c", where));
    }
    if (name == "large_stock") {
        check_keys(j, {"name", "m"}, where);
        return large_stock_generator(get_int(j, "m", where));
    }
    if (name == "rank_power") {
        check_keys(j, {"name", "r", "m", "side"}, where);
        return rank_power_generator(get_num(j, "r", where), get_int(j, "m", where), parse_side(j, where));
    }
    if (name == "affine") {
        check_keys(j, {"name", "a", "b", "of"}, where);
        require(j.contains("of"), where + ": missing 'of'");
        return affine(make_generator(j["of"]), get_num(j, "a", where), get_num(j, "b", 1.0, where));
    }
    if (name == "power_of") {
        check_keys(j, {"name", "q", "of"}, where);
        require(j.contains("of"), where + ": missing 'of'");
        return power(make_generator(j["of"]), get_num(j, "q", where));
    }
    if (name == "exp") {
        check_keys(j, {"name", "of"}, where);
        require(j.contains("of"), where + ": missing 'of'");
        return exp_of(make_generator(j["of"]));
    }
    if (name == "product" || name == "sum") {
        check_keys(j, {"name", "of"}, where);
        require(j.contains("of"), where + ": missing 'of'");
        auto gs = of_list(j["of"]);
        return name == "product" ? product(gs) : sum(gs);
    }
    throw ValidationError("unknown generator '" + name + "'");
}

std::vector<std::string> rule_names() {
    return {"market", "equal", "dwp", "ewp", "rank_dwp", "large_stock", "fk05_mirror", "gamma_shape",
            "q_mirror", "stopped_dwp", "bf08", "short_term_arbitrage", "fgp"};
}

RulePtr make_rule(const json& j) {
    require(j.is_object(), "rule: expected a JSON object");
    const std::string name = get_str(j, "rule", "", "rule");
    const std::string where = "rule '" + name + "'";
    if (name == "market") {
        check_keys(j, {"rule"}, where);
        return generator_rule("market", constant_generator());
    }
    if (name == "equal") {
        check_keys(j, {"rule"}, where);
        return std::make_unique<MapRule>("equal", [](const Vec& mu) { return dwp_weights(mu, 0.0); },
                                         shared(geometric_mean_generator()));
    }
    if (name == "dwp") {
        check_keys(j, {"rule", "p"}, where);
        double p = get_num(j, "p", where);
        return std::make_unique<MapRule>("dwp", [p](const Vec& mu) { return dwp_weights(mu, p); }, shared(dwp_generator(p)));
    }
    if (name == "ewp") {
        check_keys(j, {"rule", "c"}, where);
        double c = get_num(j, "c", where);
        require(c > 0.0, where + ": c must be positive");
        return std::make_unique<MapRule>("ewp", [c](const Vec& mu) { return ewp_weights(mu, c); }, shared(entropy_generator(c)));
    }
    if (name == "rank_dwp") {
        check_keys(j, {"rule", "r", "m", "side"}, where);
        double r = get_num(j, "r", where);
        int m = get_int(j, "m", where);
        bool top = parse_side(j, where);
        require(m >= 1, where + ": m must be >= 1");
        std::shared_ptr<const Generator> g = r != 0.0 ? shared(rank_power_generator(r, m, top)) : nullptr;
        return std::make_unique<MapRule>("rank_dwp", [r, m, top](const Vec& mu) { return rank_dwp_weights(mu, r, m, top); }, g);
    }
    if (name == "large_stock") {
        check_keys(j, {"rule", "m"}, where);
        return generator_rule("large_stock", large_stock_generator(get_int(j, "m", where)));
    }
    if (name == "fk05_mirror") {
        check_keys(j, {"rule", "p"}, where);
        double p = get_num(j, "p", where);
        require(p > 0.0 && p < 1.0, where + ": p must lie in (0,1)");
        return std::make_unique<MapRule>("fk05_mirror", [p](const Vec& mu) { return fk05_mirror_dwp(mu, p); },
                                         shared(sum_power_generator(p)));
    }
    if (name == "gamma_shape") {
        check_keys(j, {"rule", "k", "theta"}, where);
        double k = get_num(j, "k", where), theta = get_num(j, "theta", where);
        require(k > 1.0, where + ": k must exceed 1");
        require(theta > 0.0, where + ": theta must be positive");
        return std::make_unique<MapRule>("gamma_shape", [k, theta](const Vec& mu) { return gamma_shape_weights(mu, k, theta); });
    }
    if (name == "q_mirror") {
        check_keys(j, {"rule", "q", "base"}, where);
        double q = get_num(j, "q", where);
        require(j.contains("base"), where + ": missing 'base'");
        std::shared_ptr<PortfolioRule> base = make_rule(j["base"]);
        require(!base->stateful(), where + ": base rule must be stateless");
        return std::make_unique<MapRule>("q_mirror", [q, base](const Vec& mu) {
            std::vector<Vec> h{mu};
            return q_mirror(base->weights_at(h, 0.0), mu, q);
        });
    }
    if (name == "stopped_dwp") {
        check_keys(j, {"rule", "p", "delta", "variant"}, where);
        std::string v = get_str(j, "variant", "hat", where);
        require(v == "hat" || v == "tilde", where + ": variant must be 'hat' or 'tilde'");
        return std::make_unique<StoppedDwpRule>(get_num(j, "p", where), get_num(j, "delta", where),
                                                v == "hat" ? StopVariant::Hat : StopVariant::Tilde);
    }
    if (name == "bf08") {
        check_keys(j, {"rule", "n", "T", "mu0"}, where);
        int n = get_int(j, "n", where);
        require(n >= 2, where + ": n must be >= 2");
        Vec mu0 = j.contains("mu0") ? get_vec(j, "mu0", where) : Vec(Vec::Constant(n, 1.0 / n));
        return std::make_unique<Bf08Rule>(n, get_num(j, "T", where), mu0);
    }
    if (name == "short_term_arbitrage") {
        check_keys(j, {"rule", "q", "T"}, where);
        return std::make_unique<ShortTermArbitrageRule>(get_num(j, "q", where), get_num(j, "T", where));
    }
    if (name == "fgp") {
        check_keys(j, {"rule", "generator"}, where);
        require(j.contains("generator"), where + ": missing 'generator'");
        Generator g = make_generator(j["generator"]);
        return generator_rule("fgp:" + g.name, std::move(g));
    }
    throw ValidationError("unknown rule '" + name + "'");
}

}  // namespace spt
