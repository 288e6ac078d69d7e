#pragma once

#include <chrono>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "atmopt/pipeline.hpp"

namespace atmopt {

// ---------------------------------------------------------------- config --

namespace detail {

inline double auto_or_double(const nlohmann::json& v, double auto_value) {
    if (v.is_string() && v.get<std::string>() == "auto") return auto_value;
    return v.get<double>();
}

inline std::size_t auto_or_size(const nlohmann::json& v) {
    if (v.is_string() && v.get<std::string>() == "auto") return 0;
    return v.get<std::size_t>();
}

}  // namespace detail

/// Flat key-value form of RunConfig; "auto" stands for the derived defaults.
inline nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["horizon"] = c.horizon;
    j["season"] = c.season;
    j["model"] = c.model;
    j["eval_tolerance"] = c.eval_tolerance;
    j["reference_level"] = c.reference_level;
    j["ssa_window"] = c.ssa_window ? nlohmann::json(c.ssa_window) : nlohmann::json("auto");
    j["ssa_components"] =
        c.ssa_components ? nlohmann::json(c.ssa_components) : nlohmann::json("auto");
    j["ssa_energy"] = c.ssa_energy;
    j["lstm_window"] = c.lstm.window;
    j["lstm_units"] = c.lstm.units;
    j["lstm_epochs"] = c.lstm.epochs;
    j["lstm_dropout"] = c.lstm.dropout;
    j["lstm_learning_rate"] = c.lstm.learning_rate;
    j["lstm_beta1"] = c.lstm.beta1;
    j["lstm_beta2"] = c.lstm.beta2;
    j["lstm_epsilon"] = c.lstm.epsilon;
    j["seed"] = c.lstm.seed;
    j["collection_cost"] = c.control.collection_cost;
    j["daily_rate"] = c.control.daily_rate;
    j["initial_terminal"] = c.control.initial_terminal;
    j["capacity"] = c.control.capacity;
    j["safety_alpha"] = c.control.safety_alpha;
    j["initial_wealth"] = std::isnan(c.initial_wealth) ? nlohmann::json("auto")
                                                       : nlohmann::json(c.initial_wealth);
    j["bt_order_size"] =
        c.bt_order_size > 0.0 ? nlohmann::json(c.bt_order_size) : nlohmann::json("auto");
    j["bt_lower_limit"] = c.bt_lower_limit;
    return j;
}

/// Applies the keys present in j on top of c; unknown keys are an error so
/// typos cannot silently fall back to defaults.
inline void apply_config(const nlohmann::json& j, RunConfig& c) {
    if (!j.is_object()) throw Error("config must be a flat JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "horizon") c.horizon = value.get<std::size_t>();
        else if (key == "season") c.season = value.get<std::size_t>();
        else if (key == "model") c.model = value.get<std::string>();
        else if (key == "eval_tolerance") c.eval_tolerance = value.get<double>();
        else if (key == "reference_level") c.reference_level = value.get<double>();
        else if (key == "ssa_window") c.ssa_window = detail::auto_or_size(value);
        else if (key == "ssa_components") c.ssa_components = detail::auto_or_size(value);
        else if (key == "ssa_energy") c.ssa_energy = value.get<double>();
        else if (key == "lstm_window") c.lstm.window = value.get<std::size_t>();
        else if (key == "lstm_units") c.lstm.units = value.get<std::size_t>();
        else if (key == "lstm_epochs") c.lstm.epochs = value.get<std::size_t>();
        else if (key == "lstm_dropout") c.lstm.dropout = value.get<double>();
        else if (key == "lstm_learning_rate") c.lstm.learning_rate = value.get<double>();
        else if (key == "lstm_beta1") c.lstm.beta1 = value.get<double>();
        else if (key == "lstm_beta2") c.lstm.beta2 = value.get<double>();
        else if (key == "lstm_epsilon") c.lstm.epsilon = value.get<double>();
        else if (key == "seed") c.lstm.seed = value.get<std::uint64_t>();
        else if (key == "collection_cost") c.control.collection_cost = value.get<double>();
        else if (key == "daily_rate") c.control.daily_rate = value.get<double>();
        else if (key == "initial_terminal") c.control.initial_terminal = value.get<double>();
        else if (key == "capacity") c.control.capacity = value.get<double>();
        else if (key == "safety_alpha") c.control.safety_alpha = value.get<double>();
        else if (key == "initial_wealth")
            c.initial_wealth = detail::auto_or_double(
                value, std::numeric_limits<double>::quiet_NaN());
        else if (key == "bt_order_size")
            c.bt_order_size = detail::auto_or_double(value, 0.0);
        else if (key == "bt_lower_limit") c.bt_lower_limit = value.get<double>();
        else throw Error("unknown config key: " + key);
    }
}

// ------------------------------------------------------------------- CSV --

inline std::string forecast_csv(const ForecastResult& f,
                                std::chrono::sys_days first_day) {
    std::string out = "day,date,expected,dispersion\n";
    for (std::size_t h = 0; h < f.horizon; ++h) {
        out += std::to_string(h + 1);
        out += ',';
        out += date::to_string(first_day + std::chrono::days{static_cast<long>(h)});
        out += ',';
        out += num::to_string(f.expected[h]);
        out += ',';
        out += num::to_string(f.dispersion[h]);
        out += '\n';
    }
    return out;
}

template <class Tag>
inline std::string matrix_csv(const DayPairMatrix<Tag>& m) {
    std::string out = "i,j,value\n";
    for (std::size_t i = 0; i < m.horizon; ++i)
        for (std::size_t j = i + 1; j <= m.horizon; ++j) {
            out += std::to_string(i);
            out += ',';
            out += std::to_string(j);
            out += ',';
            out += num::to_string(m(i, j));
            out += '\n';
        }
    return out;
}

/// Rows 0..T-1 are the plan days; row T carries the end-of-horizon state.
inline std::string plan_csv(const ReplenishmentPlan& p) {
    std::string out = "t,x,y,s,w\n";
    for (std::size_t t = 0; t <= p.horizon; ++t) {
        bool day = t < p.horizon;
        out += std::to_string(t);
        out += ',';
        out += num::to_string(day ? p.x[t] : 0.0);
        out += ',';
        out += std::to_string(day ? p.y[t] : 0);
        out += ',';
        out += num::to_string(p.s[t]);
        out += ',';
        out += num::to_string(p.w[t]);
        out += '\n';
    }
    return out;
}

inline std::string path_csv(const BacktestOutcome& o) {
    std::string out = "t,terminal,wealth\n";
    for (std::size_t t = 0; t < o.wealth_path.size(); ++t) {
        out += std::to_string(t);
        out += ',';
        out += num::to_string(o.terminal_path[t]);
        out += ',';
        out += num::to_string(o.wealth_path[t]);
        out += '\n';
    }
    return out;
}

inline std::string spectrum_csv(const SsaInfo& info) {
    std::string out = "index,sigma\n";
    for (std::size_t i = 0; i < info.sigma.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += num::to_string(info.sigma[i]);
        out += '\n';
    }
    return out;
}

inline std::string metrics_table_csv(const ForecastStage& stage) {
    std::string out =
        "model,tp,fp,fn,tn,accuracy,precision,recall,f1,"
        "amount_tp,amount_fp,amount_fn,amount_tn,"
        "amount_accuracy,amount_precision,amount_recall,amount_f1\n";
    for (const EvaluatedModel& em : stage.models) {
        out += em.model.tag;
        out += ',' + std::to_string(em.counts.tp) + ',' + std::to_string(em.counts.fp);
        out += ',' + std::to_string(em.counts.fn) + ',' + std::to_string(em.counts.tn);
        for (double v : {em.count_metrics.accuracy, em.count_metrics.precision,
                         em.count_metrics.recall, em.count_metrics.f1})
            out += ',' + num::to_string(v);
        for (double v : {em.amounts.tp, em.amounts.fp, em.amounts.fn, em.amounts.tn})
            out += ',' + num::to_string(v);
        for (double v : {em.amount_metrics.accuracy, em.amount_metrics.precision,
                         em.amount_metrics.recall, em.amount_metrics.f1})
            out += ',' + num::to_string(v);
        out += '\n';
    }
    return out;
}

/// Aligned text table of the day-count metrics, winner marked.
inline std::string metrics_table_text(const ForecastStage& stage) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-8s %9s %10s %8s %9s\n", "model", "accuracy",
                  "precision", "recall", "f1-score");
    std::string out = line;
    for (const EvaluatedModel& em : stage.models) {
        std::snprintf(line, sizeof(line), "%-8s %9.4f %10.4f %8.4f %9.4f%s\n",
                      em.model.tag.c_str(), em.count_metrics.accuracy,
                      em.count_metrics.precision, em.count_metrics.recall,
                      em.count_metrics.f1,
                      em.model.tag == stage.winner ? "  <- selected" : "");
        out += line;
    }
    return out;
}

// ------------------------------------------------------------------ JSON --

inline nlohmann::json metrics_json(const MetricSet& m) {
    return {{"accuracy", m.accuracy},
            {"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1},
            {"vacuous_precision", m.vacuous_precision},
            {"vacuous_recall", m.vacuous_recall}};
}

inline nlohmann::json counts_json(const ConfusionCounts& c) {
    return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

inline nlohmann::json amounts_json(const ConfusionAmounts& c) {
    return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

inline nlohmann::json outcome_json(const BacktestOutcome& o) {
    return {{"horizon", o.horizon},
            {"w0", o.w0},
            {"exhaustion_count", o.exhaustion_count()},
            {"exhausted_days", o.exhausted_days},
            {"lost_demand", o.lost_demand},
            {"total_loaded", o.total_loaded},
            {"collections", o.collections},
            {"final_wealth", o.final_wealth},
            {"investment_income", o.investment_income}};
}

inline nlohmann::json hw_to_json(const HoltWintersModel& m) {
    return {{"alpha", m.alpha},       {"beta", m.beta},
            {"gamma", m.gamma},       {"period", m.period},
            {"level", m.level},       {"trend", m.trend},
            {"seasonals", m.seasonals}, {"origin", m.origin},
            {"residuals", m.residuals}};
}

inline HoltWintersModel hw_from_json(const nlohmann::json& j) {
    HoltWintersModel m;
    m.alpha = j.at("alpha").get<double>();
    m.beta = j.at("beta").get<double>();
    m.gamma = j.at("gamma").get<double>();
    m.period = j.at("period").get<std::size_t>();
    m.level = j.at("level").get<double>();
    m.trend = j.at("trend").get<double>();
    m.seasonals = j.at("seasonals").get<std::vector<double>>();
    m.origin = j.at("origin").get<std::size_t>();
    m.residuals = j.at("residuals").get<std::vector<double>>();
    return m;
}

namespace detail {

inline nlohmann::json matrix_rows(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::MatrixXd matrix_from_rows(const nlohmann::json& rows) {
    Eigen::Index r = static_cast<Eigen::Index>(rows.size());
    Eigen::Index c = r ? static_cast<Eigen::Index>(rows[0].size()) : 0;
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
    return m;
}

}  // namespace detail

/// Weight layout: layers -> gates in order [input, forget, cell, output],
/// each gate as {"w": rows, "r": rows, "b": vector}, matrices row by row.
inline nlohmann::json lstm_to_json(const LstmNetwork& n) {
    nlohmann::json j;
    j["window"] = n.config.window;
    j["units"] = n.config.units;
    j["epochs"] = n.config.epochs;
    j["dropout"] = n.config.dropout;
    j["learning_rate"] = n.config.learning_rate;
    j["beta1"] = n.config.beta1;
    j["beta2"] = n.config.beta2;
    j["epsilon"] = n.config.epsilon;
    j["seed"] = n.config.seed;
    j["scaler_lo"] = n.scaler.lo;
    j["scaler_hi"] = n.scaler.hi;
    nlohmann::json layers = nlohmann::json::array();
    for (const LstmLayer& layer : n.layers) {
        nlohmann::json gates = nlohmann::json::array();
        for (std::size_t g = 0; g < 4; ++g)
            gates.push_back({{"w", detail::matrix_rows(layer.w[g])},
                             {"r", detail::matrix_rows(layer.r[g])},
                             {"b", std::vector<double>(layer.b[g].data(),
                                                       layer.b[g].data() + layer.b[g].size())}});
        layers.push_back(std::move(gates));
    }
    j["layers"] = std::move(layers);
    j["head_w"] = std::vector<double>(n.head_w.data(), n.head_w.data() + n.head_w.size());
    j["head_b"] = n.head_b;
    j["residuals"] = n.residuals;
    j["epoch_loss"] = n.epoch_loss;
    return j;
}

inline LstmNetwork lstm_from_json(const nlohmann::json& j) {
    LstmNetwork n;
    n.config.window = j.at("window").get<std::size_t>();
    n.config.units = j.at("units").get<std::size_t>();
    n.config.epochs = j.at("epochs").get<std::size_t>();
    n.config.dropout = j.at("dropout").get<double>();
    n.config.learning_rate = j.at("learning_rate").get<double>();
    n.config.beta1 = j.at("beta1").get<double>();
    n.config.beta2 = j.at("beta2").get<double>();
    n.config.epsilon = j.at("epsilon").get<double>();
    n.config.seed = j.at("seed").get<std::uint64_t>();
    n.scaler.lo = j.at("scaler_lo").get<double>();
    n.scaler.hi = j.at("scaler_hi").get<double>();
    for (std::size_t l = 0; l < 2; ++l) {
        const nlohmann::json& gates = j.at("layers").at(l);
        for (std::size_t g = 0; g < 4; ++g) {
            n.layers[l].w[g] = detail::matrix_from_rows(gates.at(g).at("w"));
            n.layers[l].r[g] = detail::matrix_from_rows(gates.at(g).at("r"));
            auto b = gates.at(g).at("b").get<std::vector<double>>();
            n.layers[l].b[g] =
                Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
        }
    }
    auto head = j.at("head_w").get<std::vector<double>>();
    n.head_w = Eigen::Map<Eigen::VectorXd>(head.data(), static_cast<Eigen::Index>(head.size()));
    n.head_b = j.at("head_b").get<double>();
    n.residuals = j.at("residuals").get<std::vector<double>>();
    n.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
    return n;
}

inline nlohmann::json ssa_info_json(const SsaInfo& info) {
    std::vector<double> head(info.sigma.begin(),
                             info.sigma.begin() +
                                 static_cast<long>(std::min<std::size_t>(info.sigma.size(), 10)));
    return {{"window", info.window},
            {"rank", info.rank},
            {"selected", info.selected},
            {"nu2", info.nu2},
            {"energy_fraction", info.energy_fraction},
            {"sigma_head", head}};
}

inline nlohmann::json schedule_json(const ControlStage& stage) {
    return {{"days", stage.schedule.days},
            {"dp_income", stage.dp_income},
            {"w0", stage.plan.w0},
            {"collections", stage.schedule.days.size()}};
}

}  // namespace atmopt
