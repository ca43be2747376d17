#pragma once

#include "spt/common.hpp"
#include "spt/generator.hpp"

#include "json.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace spt {

class PortfolioRule {
public:
    explicit PortfolioRule(std::string name) : name_(std::move(name)) {}
    virtual ~PortfolioRule() = default;

    // history holds the market weight rows observed up to and including time t.
    virtual Vec weights_at(std::span<const Vec> history, double t) = 0;
    virtual void reset() {}
    virtual bool stateful() const { return false; }
    virtual std::unique_ptr<PortfolioRule> clone() const = 0;
    virtual std::vector<std::string> flags() const { return {}; }
    // Generator behind the rule when it is functionally generated.
    virtual const Generator* generator() const { return nullptr; }

    const std::string& name() const { return name_; }

protected:
    std::string name_;
};

using RulePtr = std::unique_ptr<PortfolioRule>;

// Stateless rule depending on the current weight row only.
class MapRule : public PortfolioRule {
public:
    MapRule(std::string name, std::function<Vec(const Vec&)> f, std::shared_ptr<const Generator> g = nullptr);
    Vec weights_at(std::span<const Vec> history, double t) override;
    RulePtr clone() const override;
    const Generator* generator() const override { return gen_.get(); }

private:
    std::function<Vec(const Vec&)> f_;
    std::shared_ptr<const Generator> gen_;
};

// Base for rules that track their own wealth relative to the market.
// Calls must arrive in sequence; a history of length one restarts the rule.
class TrackedRule : public PortfolioRule {
public:
    using PortfolioRule::PortfolioRule;
    bool stateful() const override { return true; }
    void reset() override;
    double relative_wealth() const { return rel_; }

protected:
    void advance(std::span<const Vec> history);
    void emitted(const Vec& pi) { last_ = pi; }

    double rel_ = 1.0;
    Vec last_;
    std::size_t seen_ = 0;
};

enum class StopVariant { Hat, Tilde };

class StoppedDwpRule : public TrackedRule {
public:
    StoppedDwpRule(double p, double delta, StopVariant variant);
    Vec weights_at(std::span<const Vec> history, double t) override;
    void reset() override;
    RulePtr clone() const override { return std::make_unique<StoppedDwpRule>(*this); }
    std::vector<std::string> flags() const override;

    bool stopped() const { return stopped_; }
    long stop_step() const { return stop_step_; }
    bool in_validity_range() const { return valid_; }

private:
    double p_, delta_;
    StopVariant variant_;
    bool stopped_ = false;
    long stop_step_ = -1;
    bool valid_ = true;
    double pot_ = 0.0;  // DWP holding after the stop, in units of the market holding
    Vec last_dwp_;
};

// Time-to-threshold map of the incomplete-gamma construction; y is the
// smallest market weight and the clock runs from T/2 at y = 1/n.
class Bf08Clock {
public:
    Bf08Clock(int n, double T);
    double c() const { return c_; }
    double integrand(double r) const;  // S_1'(r) / Theta_1(r)
    double T1(double y) const;
    double Y(double t) const;  // inverse of T1 on [T/2, T1(0+)]; 0 beyond
    double horizon_limit() const { return tail_.back() + T_ / 2; }

private:
    double segment_integral(double a, double b) const;
    int n_;
    double T_, c_;
    std::vector<double> grid_;  // decreasing from 1/n
    std::vector<double> tail_;  // integral of the integrand from grid_[j] to 1/n
};

double bf08_c(int n, double T);

class Bf08Rule : public TrackedRule {
public:
    Bf08Rule(int n, double T, const Vec& mu0);
    Vec weights_at(std::span<const Vec> history, double t) override;
    void reset() override;
    RulePtr clone() const override { return std::make_unique<Bf08Rule>(*this); }
    const Generator* generator() const override { return gen_.get(); }
    bool switched() const { return switched_; }
    double switch_time() const { return switch_time_; }
    const Bf08Clock& clock() const { return *clock_; }

private:
    int n_;
    double T_;
    std::shared_ptr<const Generator> gen_;
    std::shared_ptr<const Bf08Clock> clock_;
    bool switched_ = false;
    double switch_time_ = -1.0;
};

double short_term_q_threshold(double eps, double delta, double T, double mu1_0);

class ShortTermArbitrageRule : public TrackedRule {
public:
    ShortTermArbitrageRule(double q, double T);
    Vec weights_at(std::span<const Vec> history, double t) override;
    void reset() override;
    RulePtr clone() const override { return std::make_unique<ShortTermArbitrageRule>(*this); }
    double initial_capital() const { return z_; }
    static Vec seed_weights(const Vec& mu, double q);

private:
    double q_, T_;
    double long_units_ = 0.0;  // q / mu_1(0)^q
    double z_ = 0.0;
    double seed_rel_ = 1.0;
    Vec last_seed_;
};

// Catalog: {"rule": name, ...params}. Unknown names or keys raise ValidationError.
RulePtr make_rule(const nlohmann::json& cfg);
Generator make_generator(const nlohmann::json& cfg);
std::vector<std::string> rule_names();

}  // namespace spt
