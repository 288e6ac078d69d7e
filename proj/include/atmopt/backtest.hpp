#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "atmopt/baumol_tobin.hpp"
#include "atmopt/control.hpp"
#include "atmopt/evaluation.hpp"
#include "atmopt/series.hpp"

namespace atmopt {

struct IncomparableBaseline : Error {
    using Error::Error;
};

struct BacktestOutcome {
    std::size_t horizon = 0;
    double w0 = 0.0;
    std::vector<std::size_t> exhausted_days;
    double lost_demand = 0.0;           // withdrawals that could not be served
    double total_loaded = 0.0;
    std::size_t collections = 0;
    double final_wealth = 0.0;
    double investment_income = 0.0;     // accrued interest net of collection costs
    std::vector<double> wealth_path;    // horizon + 1
    std::vector<double> terminal_path;  // horizon + 1, end-of-day balances

    std::size_t exhaustion_count() const { return exhausted_days.size(); }
};

namespace detail {

// Withdrawals smaller than this are float dust, not real shortfalls.
inline constexpr double kExhaustionEps = 1e-6;

inline BacktestOutcome simulate(
    const std::function<std::pair<double, int>(std::size_t, double)>& decide,
    const WithdrawalSeries& actual, const ControlParams& params, double w0) {
    BacktestOutcome out;
    out.horizon = actual.size();
    out.w0 = w0;
    out.wealth_path.reserve(out.horizon + 1);
    out.terminal_path.reserve(out.horizon + 1);

    double balance = params.initial_terminal;
    double wealth = w0;
    double interest = 0.0;
    out.wealth_path.push_back(wealth);
    out.terminal_path.push_back(balance);

    for (std::size_t t = 0; t < out.horizon; ++t) {
        auto [x, y] = decide(t, balance);
        double loaded = std::clamp(x, 0.0, params.capacity - balance);
        balance += loaded;
        out.total_loaded += loaded;
        out.collections += static_cast<std::size_t>(y);

        interest += params.daily_rate * wealth;
        wealth = (1.0 + params.daily_rate) * wealth - loaded -
                 params.collection_cost * static_cast<double>(y);

        double demand = actual[t];
        if (demand > balance + kExhaustionEps) {
            out.exhausted_days.push_back(t);
            out.lost_demand += demand - balance;
            balance = 0.0;
        } else {
            balance = std::max(0.0, balance - demand);
        }
        out.wealth_path.push_back(wealth);
        out.terminal_path.push_back(balance);
    }

    out.final_wealth = wealth;
    out.investment_income =
        interest - params.collection_cost * static_cast<double>(out.collections);
    return out;
}

}  // namespace detail

/// Replays a fixed plan against what was actually withdrawn.  Loads stay on
/// the planned days; a load is truncated if the terminal cannot hold it.
inline BacktestOutcome run_backtest(const ReplenishmentPlan& plan,
                                    const WithdrawalSeries& actual,
                                    const ControlParams& params) {
    if (actual.size() != plan.horizon)
        throw LengthMismatch("plan covers " + std::to_string(plan.horizon) +
                             " days but actuals have " + std::to_string(actual.size()));
    return detail::simulate(
        [&plan](std::size_t t, double) {
            return std::pair<double, int>{plan.x[t], plan.y[t]};
        },
        actual, params, plan.w0);
}

/// Replays a reactive threshold policy; decisions depend on the balance it
/// actually sees each morning.
inline BacktestOutcome run_backtest(const BaumolPolicy& policy,
                                    const WithdrawalSeries& actual,
                                    const ControlParams& params, double w0) {
    return detail::simulate(
        [&policy, &params](std::size_t, double balance) {
            return bt_step(policy, balance, params.capacity);
        },
        actual, params, w0);
}

/// Relative income gain of strategy a over baseline b.
inline double compare(const BacktestOutcome& a, const BacktestOutcome& b) {
    if (b.investment_income <= 0.0)
        throw IncomparableBaseline("baseline income " +
                                   num::to_string(b.investment_income) +
                                   " is not positive");
    return (a.investment_income - b.investment_income) / b.investment_income;
}

}  // namespace atmopt
