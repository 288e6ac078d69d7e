#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "atmopt/forecast.hpp"

namespace atmopt {

struct HorizonMismatch : Error {
    using Error::Error;
};
struct InsufficientWealth : InfeasibleError {
    using InfeasibleError::InfeasibleError;
};
struct CapacityInfeasible : InfeasibleError {
    using InfeasibleError::InfeasibleError;
};
struct SafetyInfeasible : InfeasibleError {
    using InfeasibleError::InfeasibleError;
};

struct ControlParams {
    double collection_cost = 1000.0;   // P, rupees per collector visit
    double daily_rate = 0.0001567;     // RuOnIa, interest per day
    double initial_terminal = 0.0;     // s(0)
    double capacity = 13'000'000.0;    // C, terminal cassette limit
    double safety_alpha = 0.2;         // fraction of dispersion held back
};

/// Upper-triangular matrix over day pairs 0 <= i < j <= T.
template <class Tag>
struct DayPairMatrix {
    std::size_t horizon = 0;
    std::vector<double> cells;  // (T+1)^2, row-major, lower half unused

    explicit DayPairMatrix(std::size_t t = 0)
        : horizon(t), cells((t + 1) * (t + 1), 0.0) {}

    double operator()(std::size_t i, std::size_t j) const {
        return cells[i * (horizon + 1) + j];
    }
    double& at(std::size_t i, std::size_t j) { return cells[i * (horizon + 1) + j]; }
};

using DemandMatrix = DayPairMatrix<struct DemandTag>;   // L[i][j]
using IncomeMatrix = DayPairMatrix<struct IncomeTag>;   // I[i][j]
using CapitalMatrix = DayPairMatrix<struct CapitalTag>; // bank balance diagnostic

/// L[i][j] = forecast demand over days [i, j): the amount a single
/// replenishment on day i must cover when the next one lands on day j.
inline DemandMatrix demand_matrix(const ForecastResult& forecast, std::size_t horizon) {
    if (forecast.horizon != horizon || forecast.expected.size() != horizon)
        throw HorizonMismatch("forecast horizon " + std::to_string(forecast.horizon) +
                              " does not match requested " + std::to_string(horizon));
    DemandMatrix m(horizon);
    for (std::size_t i = 0; i < horizon; ++i) {
        double acc = 0.0;
        for (std::size_t j = i + 1; j <= horizon; ++j) {
            acc += forecast.expected[j - 1];
            m.at(i, j) = acc;
        }
    }
    return m;
}

/// Bank balance left after funding demand through day i and loading the
/// segment [i, j): w0 - L[0][i] - L[i][j].
inline CapitalMatrix capital_matrix(const DemandMatrix& demand, double w0) {
    std::size_t t = demand.horizon;
    CapitalMatrix m(t);
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = i + 1; j <= t; ++j)
            m.at(i, j) = w0 - (i > 0 ? demand(0, i) : 0.0) - demand(i, j);
    return m;
}

/**
 * Edge profit of replenishing on day i with the next visit on day j:
 * the remaining bank balance earns compound interest for j - i days, and
 * j - i - 1 collector visits are avoided relative to collecting daily,
 *
 *   I[i][j] = (w0 - L[0][i] - L[i][j]) * ((1 + r)^(j-i) - 1) + (j-i-1) * P.
 */
inline IncomeMatrix income_matrix(const DemandMatrix& demand, const ControlParams& params,
                                  double w0) {
    std::size_t t = demand.horizon;
    if (t == 0) throw HorizonMismatch("demand matrix is empty");
    if (w0 < demand(0, t))
        throw InsufficientWealth("initial wealth " + num::to_string(w0) +
                                 " cannot fund total demand " +
                                 num::to_string(demand(0, t)));
    std::vector<double> growth(t + 1, 1.0);  // (1 + r)^d
    for (std::size_t d = 1; d <= t; ++d) growth[d] = growth[d - 1] * (1.0 + params.daily_rate);

    IncomeMatrix m(t);
    for (std::size_t i = 0; i < t; ++i) {
        double funded = i > 0 ? demand(0, i) : 0.0;
        for (std::size_t j = i + 1; j <= t; ++j) {
            double balance = w0 - funded - demand(i, j);
            m.at(i, j) = balance * (growth[j - i] - 1.0) +
                         static_cast<double>(j - i - 1) * params.collection_cost;
        }
    }
    return m;
}

struct CollectionSchedule {
    std::vector<std::size_t> days;  // strictly increasing, starts at 0
};

/// Sum of edge incomes along a schedule, accumulated left to right.
inline double schedule_income(const IncomeMatrix& income, const CollectionSchedule& schedule) {
    double total = 0.0;
    for (std::size_t k = 0; k < schedule.days.size(); ++k) {
        std::size_t from = schedule.days[k];
        std::size_t to = k + 1 < schedule.days.size() ? schedule.days[k + 1] : income.horizon;
        total += income(from, to);
    }
    return total;
}

/**
 * Maximum-income path from day 0 to day T in the complete forward graph
 * whose edge i -> j pays I[i][j]; visited nodes are the collection days.
 * Single relaxation sweep in day order (the graph is a DAG).  Exact ties
 * prefer fewer collections, then the lexicographically smallest day list.
 */
inline CollectionSchedule optimal_schedule(const IncomeMatrix& income) {
    std::size_t t = income.horizon;
    if (t == 0) throw HorizonMismatch("income matrix is empty");

    std::vector<double> value(t + 1, -std::numeric_limits<double>::infinity());
    std::vector<std::vector<std::size_t>> days(t + 1);
    value[0] = 0.0;
    days[0] = {0};
    std::vector<std::size_t> cand;
    for (std::size_t j = 1; j <= t; ++j) {
        for (std::size_t i = 0; i < j; ++i) {
            if (!std::isfinite(value[i])) continue;
            double v = value[i] + income(i, j);
            cand = days[i];
            if (j < t) cand.push_back(j);
            bool better = v > value[j];
            if (!better && v == value[j]) {
                better = cand.size() < days[j].size() ||
                         (cand.size() == days[j].size() && cand < days[j]);
            }
            if (better) {
                value[j] = v;
                days[j] = cand;
            }
        }
    }
    return CollectionSchedule{days[t]};
}

/**
 * Per-day replenishment plan projected against the forecast: x(t) loaded,
 * y(t) collector visit, s(t) terminal balance entering day t, w(t) bank
 * wealth.  s and w carry one extra slot for the end-of-horizon state.
 */
struct ReplenishmentPlan {
    std::size_t horizon = 0;
    double w0 = 0.0;
    std::vector<double> x;
    std::vector<int> y;
    std::vector<double> s;  // horizon + 1
    std::vector<double> w;  // horizon + 1
};

/// Bank wealth recurrence w(t+1) = (1 + r) * w(t) - x(t) - P * y(t).
inline std::vector<double> wealth_trajectory(const ReplenishmentPlan& plan,
                                             const ControlParams& params) {
    std::vector<double> w(plan.horizon + 1);
    w[0] = plan.w0;
    for (std::size_t t = 0; t < plan.horizon; ++t)
        w[t + 1] = (1.0 + params.daily_rate) * w[t] - plan.x[t] -
                   params.collection_cost * static_cast<double>(plan.y[t]);
    return w;
}

/**
 * Turns a schedule into concrete loads.  Each segment [i, j) is loaded on
 * day i with its forecast demand plus a safety buffer of
 * max over t in [i, j) of alpha * dispersion(t), so the balance entering
 * every later day of the segment stays above the buffer.  w0 defaults to
 * the total forecast demand.
 */
inline ReplenishmentPlan build_plan(const CollectionSchedule& schedule,
                                    const ForecastResult& forecast,
                                    const ControlParams& params,
                                    double w0 = std::numeric_limits<double>::quiet_NaN()) {
    std::size_t t = forecast.horizon;
    if (schedule.days.empty() || schedule.days[0] != 0)
        throw Error("schedule must start with a collection on day 0");
    for (std::size_t k = 0; k + 1 < schedule.days.size(); ++k)
        if (schedule.days[k + 1] <= schedule.days[k])
            throw Error("schedule days must be strictly increasing");
    if (schedule.days.back() >= t)
        throw HorizonMismatch("schedule day " + std::to_string(schedule.days.back()) +
                              " is outside the horizon " + std::to_string(t));

    ReplenishmentPlan plan;
    plan.horizon = t;
    plan.x.assign(t, 0.0);
    plan.y.assign(t, 0);
    plan.s.assign(t + 1, 0.0);
    plan.s[0] = params.initial_terminal;

    double total = 0.0;
    for (double e : forecast.expected) total += e;
    plan.w0 = std::isnan(w0) ? total : w0;

    for (std::size_t k = 0; k < schedule.days.size(); ++k) {
        std::size_t from = schedule.days[k];
        std::size_t to = k + 1 < schedule.days.size() ? schedule.days[k + 1] : t;

        double needed = 0.0;
        double buffer = 0.0;
        for (std::size_t d = from; d < to; ++d) {
            needed += forecast.expected[d];
            buffer = std::max(buffer, params.safety_alpha * forecast.dispersion[d]);
        }
        if (buffer > params.capacity)
            throw SafetyInfeasible("safety buffer " + num::to_string(buffer) +
                                   " exceeds capacity " + num::to_string(params.capacity));

        plan.y[from] = 1;
        plan.x[from] = std::max(0.0, needed + buffer - plan.s[from]);
        if (plan.s[from] + plan.x[from] > params.capacity)
            throw CapacityInfeasible("day " + std::to_string(from) + " load of " +
                                     num::to_string(plan.x[from]) +
                                     " overflows capacity; segment through day " +
                                     std::to_string(to) + " is too long");

        for (std::size_t d = from; d < to; ++d)
            plan.s[d + 1] = plan.s[d] + plan.x[d] - forecast.expected[d];
    }

    plan.w = wealth_trajectory(plan, params);
    return plan;
}

}  // namespace atmopt
