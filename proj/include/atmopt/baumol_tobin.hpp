#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "atmopt/common.hpp"

namespace atmopt {

struct NonPositiveInput : Error {
    using Error::Error;
};

/// Classic square-root lot size: Q = sqrt(2 * P * demand_rate / r).
inline double economic_order_quantity(double collection_cost, double demand_rate,
                                      double daily_rate) {
    if (collection_cost <= 0.0 || demand_rate <= 0.0 || daily_rate <= 0.0)
        throw NonPositiveInput("order quantity needs positive cost, demand and rate");
    return std::sqrt(2.0 * collection_cost * demand_rate / daily_rate);
}

/// Threshold policy: refill by a fixed lot whenever the balance drops below
/// the lower limit.
struct BaumolPolicy {
    double order_size = 0.0;
    double lower_limit = 740'428.11;
};

/// Returns (amount to load, collector visit flag) for one day.
inline std::pair<double, int> bt_step(const BaumolPolicy& policy, double balance,
                                      double capacity) {
    if (balance < policy.lower_limit)
        return {std::max(0.0, std::min(policy.order_size, capacity - balance)), 1};
    return {0.0, 0};
}

}  // namespace atmopt
