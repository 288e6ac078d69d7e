#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "atmopt/common.hpp"

namespace atmopt {

struct LengthMismatch : Error {
    using Error::Error;
};
struct EmptyMatrix : Error {
    using Error::Error;
};
struct EmptyCandidates : Error {
    using Error::Error;
};

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::size_t total() const { return tp + fp + fn + tn; }
};

// Same decomposition measured in rupees instead of days.
struct ConfusionAmounts {
    double tp = 0.0, fp = 0.0, fn = 0.0, tn = 0.0;
    double total() const { return tp + fp + fn + tn; }
};

struct MetricSet {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    // Set when a 0/0 ratio was reported as 1.0 (nothing to get wrong).
    bool vacuous_precision = false;
    bool vacuous_recall = false;
};

/**
 * Day-count confusion: a day is a hit when the forecast covers the actual
 * withdrawal without exceeding it by more than `tolerance`.  Underforecasts
 * are misses (the cash would have run out), overshoots beyond the tolerance
 * are false alarms; zero-demand days count as true negatives only when the
 * forecast is zero too.
 */
inline ConfusionCounts confusion_counts(const std::vector<double>& forecast,
                                        const std::vector<double>& actual,
                                        double tolerance = 0.10) {
    if (forecast.size() != actual.size())
        throw LengthMismatch("forecast and actual must have equal length");
    ConfusionCounts c;
    for (std::size_t t = 0; t < forecast.size(); ++t) {
        double f = forecast[t], a = actual[t];
        if (f < a)
            ++c.fn;
        else if (a > 0.0)
            f <= a * (1.0 + tolerance) ? ++c.tp : ++c.fp;
        else
            f <= 0.0 ? ++c.tn : ++c.fp;
    }
    return c;
}

/**
 * Amount decomposition against a per-day reference level M:
 *   tp += min(f, a)        cash correctly provisioned
 *   fp += max(0, f - a)    cash provisioned but idle
 *   fn += max(0, a - f)    demand left uncovered
 *   tn += max(0, M - max(f, a))
 * so tp + fp sums the forecasts and tp + fn sums the actuals.
 */
inline ConfusionAmounts confusion_amounts(const std::vector<double>& forecast,
                                          const std::vector<double>& actual,
                                          double reference_level = 1'000'000.0) {
    if (forecast.size() != actual.size())
        throw LengthMismatch("forecast and actual must have equal length");
    ConfusionAmounts c;
    for (std::size_t t = 0; t < forecast.size(); ++t) {
        double f = forecast[t], a = actual[t];
        c.tp += std::min(f, a);
        c.fp += std::max(0.0, f - a);
        c.fn += std::max(0.0, a - f);
        c.tn += std::max(0.0, reference_level - std::max(f, a));
    }
    return c;
}

namespace detail {

inline MetricSet metrics_impl(double tp, double fp, double fn, double tn) {
    double total = tp + fp + fn + tn;
    if (total <= 0.0) throw EmptyMatrix("confusion matrix is empty");
    MetricSet m;
    m.accuracy = (tp + tn) / total;
    if (tp + fp > 0.0) {
        m.precision = tp / (tp + fp);
    } else {
        m.precision = 1.0;
        m.vacuous_precision = true;
    }
    if (tp + fn > 0.0) {
        m.recall = tp / (tp + fn);
    } else {
        m.recall = 1.0;
        m.vacuous_recall = true;
    }
    double pr = m.precision + m.recall;
    m.f1 = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
    return m;
}

}  // namespace detail

inline MetricSet metrics(const ConfusionCounts& c) {
    return detail::metrics_impl(static_cast<double>(c.tp), static_cast<double>(c.fp),
                                static_cast<double>(c.fn), static_cast<double>(c.tn));
}

inline MetricSet metrics(const ConfusionAmounts& c) {
    return detail::metrics_impl(c.tp, c.fp, c.fn, c.tn);
}

/// Highest recall wins; accuracy breaks ties, then the tag itself so the
/// choice is total and reproducible.
inline std::string select_model(
    const std::vector<std::pair<std::string, MetricSet>>& candidates) {
    if (candidates.empty()) throw EmptyCandidates("no models to choose from");
    const auto* best = &candidates[0];
    for (const auto& c : candidates) {
        if (c.second.recall > best->second.recall ||
            (c.second.recall == best->second.recall &&
             (c.second.accuracy > best->second.accuracy ||
              (c.second.accuracy == best->second.accuracy && c.first < best->first))))
            best = &c;
    }
    return best->first;
}

}  // namespace atmopt
