#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "atmopt/backtest.hpp"
#include "atmopt/evaluation.hpp"
#include "atmopt/holt_winters.hpp"
#include "atmopt/lstm.hpp"
#include "atmopt/ssa.hpp"

namespace atmopt {

/**
 * Everything a full run needs, with defaults mirroring the reference
 * deployment: 14-day horizon and season, 1000 rupee collections, 0.01567%
 * daily interest, 13M cassette capacity, safety fraction 0.2.
 */
struct RunConfig {
    std::size_t horizon = 14;
    std::size_t season = 14;

    std::string model = "auto";  // auto | exp | ssa | lstm
    double eval_tolerance = 0.10;
    double reference_level = 1'000'000.0;

    std::size_t ssa_window = 0;      // 0: half the training length
    std::size_t ssa_components = 0;  // 0: energy rule below
    double ssa_energy = 0.999;

    TrainConfig lstm;

    ControlParams control;
    double initial_wealth = std::numeric_limits<double>::quiet_NaN();  // NaN: total demand

    double bt_order_size = 0.0;  // 0: square-root lot from the training mean
    double bt_lower_limit = 740'428.11;
};

struct SsaInfo {
    std::size_t window = 0;
    std::size_t rank = 0;
    std::size_t selected = 0;
    double nu2 = 0.0;
    double energy_fraction = 0.0;  // energy captured by the selection
    std::vector<double> sigma;     // full spectrum, descending
};

/// A fitted model with its forecast; exactly one of the detail members is
/// set, matching the tag.
struct FittedModel {
    std::string tag;
    ForecastResult forecast;
    std::optional<HoltWintersModel> hw;
    std::optional<SsaInfo> ssa;
    std::optional<LstmNetwork> lstm;
};

inline FittedModel fit_model(const std::string& tag, const WithdrawalSeries& train,
                             const RunConfig& cfg) {
    FittedModel out;
    out.tag = tag;
    if (tag == "EXP") {
        out.hw = fit_holt_winters(train, cfg.season);
        out.forecast = hw_forecast(*out.hw, cfg.horizon);
    } else if (tag == "SSA") {
        std::size_t window = cfg.ssa_window ? cfg.ssa_window
                                            : ssa_default_window(train.size());
        SsaDecomposition d = decompose(embed(train.amounts, window));
        std::vector<std::size_t> sel = cfg.ssa_components
                                           ? leading_components(d, cfg.ssa_components)
                                           : select_components(d, cfg.ssa_energy);
        SsaForecaster f = fit_forecaster(d, sel, cfg.season);
        out.forecast = ssa_forecast(f, cfg.horizon);

        SsaInfo info;
        info.window = window;
        info.rank = d.rank();
        info.selected = sel.size();
        info.nu2 = f.nu2;
        double picked = 0.0;
        for (std::size_t i : sel)
            picked += d.sigma[static_cast<Eigen::Index>(i)] *
                      d.sigma[static_cast<Eigen::Index>(i)];
        double total = d.energy();
        info.energy_fraction = total > 0.0 ? picked / total : 0.0;
        info.sigma.assign(d.sigma.data(), d.sigma.data() + d.sigma.size());
        out.ssa = std::move(info);
    } else if (tag == "LSTM") {
        auto samples = window_dataset(train, cfg.lstm.window);
        out.lstm = lstm_train(cfg.lstm, samples);
        std::vector<double> tail(train.amounts.end() - static_cast<long>(cfg.lstm.window),
                                 train.amounts.end());
        out.forecast = lstm_forecast(*out.lstm, tail, cfg.horizon, cfg.season);
    } else {
        throw Error("unknown model tag: " + tag);
    }
    return out;
}

struct EvaluatedModel {
    FittedModel model;
    ConfusionCounts counts;
    ConfusionAmounts amounts;
    MetricSet count_metrics;
    MetricSet amount_metrics;
};

struct ForecastStage {
    std::vector<EvaluatedModel> models;
    std::string winner;
};

inline std::vector<std::string> model_tags(const std::string& choice) {
    if (choice == "auto") return {"EXP", "LSTM", "SSA"};
    if (choice == "exp" || choice == "hw" || choice == "EXP") return {"EXP"};
    if (choice == "lstm" || choice == "LSTM") return {"LSTM"};
    if (choice == "ssa" || choice == "SSA") return {"SSA"};
    throw Error("unknown model choice: " + choice);
}

/// Fits the requested models on the training part and scores each against
/// the held-out days; the winner is picked on day-count metrics.
inline ForecastStage run_forecast_stage(const SeriesSplit& split, const RunConfig& cfg) {
    if (split.test.size() != cfg.horizon)
        throw HoldoutTooLarge("holdout must equal the forecast horizon");
    ForecastStage stage;
    std::vector<std::pair<std::string, MetricSet>> candidates;
    for (const std::string& tag : model_tags(cfg.model)) {
        EvaluatedModel em;
        em.model = fit_model(tag, split.train, cfg);
        em.counts = confusion_counts(em.model.forecast.expected, split.test.amounts,
                                     cfg.eval_tolerance);
        em.amounts = confusion_amounts(em.model.forecast.expected, split.test.amounts,
                                       cfg.reference_level);
        em.count_metrics = metrics(em.counts);
        em.amount_metrics = metrics(em.amounts);
        candidates.emplace_back(tag, em.count_metrics);
        stage.models.push_back(std::move(em));
    }
    stage.winner = select_model(candidates);
    return stage;
}

inline const EvaluatedModel& winning_model(const ForecastStage& stage) {
    for (const EvaluatedModel& em : stage.models)
        if (em.model.tag == stage.winner) return em;
    throw Error("winner not among fitted models");
}

struct ControlStage {
    DemandMatrix demand;
    IncomeMatrix income;
    CapitalMatrix capital;
    CollectionSchedule schedule;
    ReplenishmentPlan plan;
    double dp_income = 0.0;
};

/// Forecast to plan: demand matrix, income matrix, optimal collection days,
/// concrete loads.
inline ControlStage run_control_stage(const ForecastResult& forecast, const RunConfig& cfg) {
    ControlStage stage;
    stage.demand = demand_matrix(forecast, cfg.horizon);
    double w0 = std::isnan(cfg.initial_wealth) ? stage.demand(0, cfg.horizon)
                                               : cfg.initial_wealth;
    stage.capital = capital_matrix(stage.demand, w0);
    stage.income = income_matrix(stage.demand, cfg.control, w0);
    stage.schedule = optimal_schedule(stage.income);
    stage.plan = build_plan(stage.schedule, forecast, cfg.control, w0);
    stage.dp_income = schedule_income(stage.income, stage.schedule);
    return stage;
}

inline BaumolPolicy make_baseline_policy(const RunConfig& cfg, const WithdrawalSeries& train) {
    BaumolPolicy policy;
    policy.lower_limit = cfg.bt_lower_limit;
    if (cfg.bt_order_size > 0.0) {
        policy.order_size = cfg.bt_order_size;
    } else {
        double mean = 0.0;
        for (double a : train.amounts) mean += a;
        mean /= static_cast<double>(train.size());
        policy.order_size = economic_order_quantity(cfg.control.collection_cost, mean,
                                                    cfg.control.daily_rate);
    }
    return policy;
}

struct BacktestStage {
    BacktestOutcome ocp;
    BacktestOutcome baseline;
    double gain = 0.0;  // relative income advantage of the plan
};

inline BacktestStage run_backtest_stage(const ReplenishmentPlan& plan,
                                        const BaumolPolicy& policy,
                                        const WithdrawalSeries& actual,
                                        const RunConfig& cfg) {
    BacktestStage stage;
    stage.ocp = run_backtest(plan, actual, cfg.control);
    stage.baseline = run_backtest(policy, actual, cfg.control, plan.w0);
    stage.gain = compare(stage.ocp, stage.baseline);
    return stage;
}

}  // namespace atmopt
