#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "atmopt/forecast.hpp"
#include "atmopt/series.hpp"

namespace atmopt {

/**
 * Triple exponential smoothing with an additive trend and multiplicative
 * seasonality:
 *
 *   level_t  = alpha * y_t / season_k + (1 - alpha) * (level + trend)
 *   trend_t  = beta * (level_t - level) + (1 - beta) * trend
 *   season_k = gamma * y_t / level_t + (1 - gamma) * season_k
 *
 * Seasonal factors are floored at 1e-6 so the multiplicative form stays
 * defined on series with zero-withdrawal days.
 */
struct HoltWintersModel {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    std::size_t period = 14;
    double level = 0.0;
    double trend = 0.0;
    std::vector<double> seasonals;

    std::size_t origin = 0;          // observations consumed so far
    std::vector<double> residuals;   // one-step in-sample errors, index t

    static constexpr double factor_floor = 1e-6;

    // One-step-ahead prediction from the current state, before seeing y_t.
    double one_step() const {
        return (level + trend) * seasonals[origin % period];
    }

    // Consumes one observation and updates level, trend and the factor for
    // the current seasonal position.
    void advance(double y) {
        std::size_t k = origin % period;
        double prev_level = level;
        level = alpha * y / seasonals[k] + (1.0 - alpha) * (level + trend);
        trend = beta * (level - prev_level) + (1.0 - beta) * trend;
        double denom = std::max(level, factor_floor);
        seasonals[k] = std::max(gamma * y / denom + (1.0 - gamma) * seasonals[k],
                                factor_floor);
        ++origin;
    }

    // Expected withdrawal h days past the last observation, h >= 1.
    double forecast(std::size_t h) const {
        double raw = (level + static_cast<double>(h) * trend) *
                     seasonals[(origin + h - 1) % period];
        return std::max(raw, 0.0);
    }
};

namespace detail {

inline HoltWintersModel hw_initial_state(const std::vector<double>& y, std::size_t m) {
    HoltWintersModel s;
    s.period = m;
    double mean1 = 0.0, mean2 = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        mean1 += y[k];
        mean2 += y[m + k];
    }
    mean1 /= static_cast<double>(m);
    mean2 /= static_cast<double>(m);
    s.level = mean1;
    s.trend = (mean2 - mean1) / static_cast<double>(m);

    std::size_t seasons = y.size() / m;
    s.seasonals.assign(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t sn = 0; sn < seasons; ++sn) {
            double season_mean = 0.0;
            for (std::size_t j = 0; j < m; ++j) season_mean += y[sn * m + j];
            season_mean /= static_cast<double>(m);
            if (season_mean > 0.0) {
                sum += y[sn * m + k] / season_mean;
                ++count;
            }
        }
        double factor = count ? sum / static_cast<double>(count) : 1.0;
        s.seasonals[k] = std::max(factor, HoltWintersModel::factor_floor);
    }
    return s;
}

inline double hw_sse(const std::vector<double>& y, HoltWintersModel state,
                     double a, double b, double g) {
    state.alpha = a;
    state.beta = b;
    state.gamma = g;
    double sse = 0.0;
    for (double obs : y) {
        double e = obs - state.one_step();
        sse += e * e;
        state.advance(obs);
    }
    return sse;
}

}  // namespace detail

/**
 * Fits by exhaustive grid search over alpha, beta, gamma in {0, 0.05, ..., 1},
 * minimising the one-step in-sample sum of squared errors.  Ties go to the
 * lowest alpha, then beta, then gamma.  Needs at least two full seasons.
 */
inline HoltWintersModel fit_holt_winters(const WithdrawalSeries& train,
                                         std::size_t period = 14) {
    if (period < 1) throw EmptyInput("season length must be positive");
    if (train.size() < 2 * period)
        throw SeriesTooShort("need at least " + std::to_string(2 * period) +
                             " observations, have " + std::to_string(train.size()));

    const std::vector<double>& y = train.amounts;
    HoltWintersModel init = detail::hw_initial_state(y, period);

    double best_sse = 0.0;
    double best_a = 0.0, best_b = 0.0, best_g = 0.0;
    bool first = true;
    for (int ia = 0; ia <= 20; ++ia) {
        for (int ib = 0; ib <= 20; ++ib) {
            for (int ig = 0; ig <= 20; ++ig) {
                double a = ia / 20.0, b = ib / 20.0, g = ig / 20.0;
                double sse = detail::hw_sse(y, init, a, b, g);
                if (first || sse < best_sse) {
                    first = false;
                    best_sse = sse;
                    best_a = a;
                    best_b = b;
                    best_g = g;
                }
            }
        }
    }

    HoltWintersModel model = init;
    model.alpha = best_a;
    model.beta = best_b;
    model.gamma = best_g;
    model.residuals.reserve(y.size());
    for (double obs : y) {
        model.residuals.push_back(obs - model.one_step());
        model.advance(obs);
    }
    return model;
}

/// Rolls the smoothing state forward over the horizon.  Dispersion comes
/// from the in-sample residuals, grouped by seasonal position.
inline ForecastResult hw_forecast(const HoltWintersModel& model, std::size_t horizon) {
    if (horizon < 1) throw Error("forecast horizon must be >= 1");
    ForecastResult out;
    out.horizon = horizon;
    out.model_tag = "EXP";
    out.expected.reserve(horizon);
    out.dispersion.reserve(horizon);
    std::vector<double> stds;
    if (!model.residuals.empty())
        stds = seasonal_residual_std(model.residuals, model.period);
    for (std::size_t h = 1; h <= horizon; ++h) {
        out.expected.push_back(model.forecast(h));
        std::size_t k = (model.origin + h - 1) % model.period;
        out.dispersion.push_back(stds.empty() ? 0.0 : stds[k]);
    }
    return out;
}

}  // namespace atmopt
