#pragma once

#include "spt/common.hpp"
#include "spt/market.hpp"
#include "spt/rules.hpp"

#include <istream>
#include <string>
#include <vector>

namespace spt {

enum class CostConvention { OneWay, RoundTrip };

struct CostModel {
    double rate = 0.0;
    CostConvention convention = CostConvention::OneWay;
};

enum class RebalanceMetric { TotalVariation, RelativeEntropy };

struct RebalancePolicy {
    enum Kind { EveryK, Threshold } kind = EveryK;
    int k = 1;
    RebalanceMetric metric = RebalanceMetric::TotalVariation;
    double band = 0.0;

    static RebalancePolicy every(int k);
    static RebalancePolicy threshold(RebalanceMetric metric, double band);
};

struct LoadedData {
    MarketPath path;
    std::vector<std::string> dates;
    std::vector<std::string> ids;
    std::vector<std::string> forward_filled;  // ids of stocks whose trailing values were filled
};

LoadedData load_caps_csv(const std::string& file);
LoadedData load_caps_csv(std::istream& in, const std::string& source);

bool rebalance_decision(const Vec& drifted, const Vec& target, const RebalancePolicy& policy, long step);

struct BacktestOptions {
    bool zero_weight_adjustment = false;
};

struct BacktestReport {
    std::string rule;
    std::vector<double> times;
    std::vector<double> V;
    std::vector<double> V_mkt;
    std::vector<double> traded;  // traded dollar value at each step
    std::vector<double> costs_cum;
    std::vector<Vec> held;       // weights held after trading at each step
    double log_V = 0.0;
    double total_costs = 0.0;
    double terminal_log_relative = 0.0;
    long n_trades = 0;
    std::vector<std::string> flags;
};

BacktestReport run_backtest(PortfolioRule& rule, const MarketPath& path, const CostModel& costs,
                            const RebalancePolicy& policy, const BacktestOptions& options = {});

void write_report_csv(const BacktestReport& r, const std::string& file);
void write_report_json(const BacktestReport& r, const std::string& file);

}  // namespace spt
