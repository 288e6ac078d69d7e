// Command line front end: forecast daily ATM withdrawals, turn the forecast
// into a replenishment schedule, and benchmark it against a threshold
// baseline.  Exit codes: 0 ok, 1 usage, 2 bad data, 3 infeasible plan.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "atmopt/reporting.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config_path;
    std::string out = "out";
    std::string model;
    std::string horizon, season, seed;
    std::string ssa_window, ssa_components;
    std::string w0, capacity;
    std::string baseline, order_size, lower_limit;
    bool emit_matrices = false;
    std::vector<std::string> inputs;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw atmopt::Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw atmopt::Error("cannot write " + path.string());
    out << content;
}

std::size_t parse_size(const std::string& text, const char* what) {
    try {
        std::size_t pos = 0;
        unsigned long long v = std::stoull(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw UsageError(std::string(what) + " expects a number, got \"" + text + "\"");
    }
}

double parse_double(const std::string& text, const char* what) {
    double v = 0.0;
    if (!atmopt::num::parse(text, v))
        throw UsageError(std::string(what) + " expects a number, got \"" + text + "\"");
    return v;
}

atmopt::RunConfig resolve_config(const Options& opt) {
    atmopt::RunConfig cfg;

    std::string path = opt.config_path;
    if (path.empty())
        if (const char* env = std::getenv("ATMOPT_CONFIG")) path = env;
    if (!path.empty()) atmopt::apply_config(json::parse(read_file(path)), cfg);

    if (!opt.model.empty()) cfg.model = opt.model;
    if (!opt.horizon.empty()) cfg.horizon = parse_size(opt.horizon, "--horizon");
    if (!opt.season.empty()) cfg.season = parse_size(opt.season, "--season");
    if (!opt.seed.empty()) cfg.lstm.seed = parse_size(opt.seed, "--seed");
    if (!opt.ssa_window.empty())
        cfg.ssa_window =
            opt.ssa_window == "auto" ? 0 : parse_size(opt.ssa_window, "--ssa-window");
    if (!opt.ssa_components.empty())
        cfg.ssa_components = opt.ssa_components == "auto"
                                 ? 0
                                 : parse_size(opt.ssa_components, "--ssa-components");
    if (!opt.w0.empty())
        cfg.initial_wealth = opt.w0 == "auto"
                                 ? std::numeric_limits<double>::quiet_NaN()
                                 : parse_double(opt.w0, "--w0");
    if (!opt.capacity.empty())
        cfg.control.capacity = parse_double(opt.capacity, "--capacity");
    if (!opt.order_size.empty())
        cfg.bt_order_size =
            opt.order_size == "auto" ? 0.0 : parse_double(opt.order_size, "--order-size");
    if (!opt.lower_limit.empty())
        cfg.bt_lower_limit = parse_double(opt.lower_limit, "--lower-limit");

    if (!opt.baseline.empty() && opt.baseline != "baumol-tobin")
        throw UsageError("unknown baseline \"" + opt.baseline +
                         "\" (only baumol-tobin is implemented)");
    if (cfg.horizon < 1) throw UsageError("horizon must be at least 1");
    if (cfg.season < 1) throw UsageError("season must be at least 1");
    try {
        atmopt::model_tags(cfg.model);
    } catch (const atmopt::Error& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

json model_entry(const atmopt::EvaluatedModel& em) {
    return {{"counts", atmopt::counts_json(em.counts)},
            {"amounts", atmopt::amounts_json(em.amounts)},
            {"metrics", atmopt::metrics_json(em.count_metrics)},
            {"amount_metrics", atmopt::metrics_json(em.amount_metrics)}};
}

json models_entry(const atmopt::ForecastStage& stage) {
    json models = json::object();
    for (const atmopt::EvaluatedModel& em : stage.models)
        models[em.model.tag] = model_entry(em);
    return models;
}

void write_forecasts(const atmopt::ForecastStage& stage, const atmopt::SeriesSplit& split,
                     const fs::path& dir) {
    for (const atmopt::EvaluatedModel& em : stage.models)
        write_file(dir / ("forecast_" + em.model.tag + ".csv"),
                   atmopt::forecast_csv(em.model.forecast, split.test.start_date));
}

void write_matrices(const atmopt::ControlStage& control, const fs::path& dir) {
    write_file(dir / "demand_matrix.csv", atmopt::matrix_csv(control.demand));
    write_file(dir / "income_matrix.csv", atmopt::matrix_csv(control.income));
    write_file(dir / "capital_matrix.csv", atmopt::matrix_csv(control.capital));
}

void run_one(const std::string& command, const fs::path& input,
             const atmopt::RunConfig& cfg, const Options& opt) {
    atmopt::WithdrawalSeries series =
        atmopt::parse_withdrawals(read_file(input), input.stem().string());
    fs::path dir = fs::path(opt.out) / input.stem();

    atmopt::SeriesSplit split = atmopt::split_train_test(series, cfg.horizon);
    atmopt::ForecastStage stage = atmopt::run_forecast_stage(split, cfg);

    json summary;
    summary["command"] = command;
    summary["config"] = atmopt::config_to_json(cfg);
    summary["terminal"] = series.terminal_id;
    summary["train_days"] = split.train.size();
    summary["test_days"] = split.test.size();
    summary["models"] = models_entry(stage);
    summary["winner"] = stage.winner;

    if (command == "forecast") {
        write_forecasts(stage, split, dir);
        write_file(dir / "summary.json", summary.dump(2) + "\n");
        return;
    }

    if (command == "report") {
        json detail = json::object();
        for (const atmopt::EvaluatedModel& em : stage.models) {
            if (em.model.hw) {
                json hw = atmopt::hw_to_json(*em.model.hw);
                hw.erase("residuals");  // full model lives in hw_model.json
                detail["EXP"] = hw;
                write_file(dir / "hw_model.json",
                           atmopt::hw_to_json(*em.model.hw).dump(2) + "\n");
            }
            if (em.model.ssa) {
                detail["SSA"] = atmopt::ssa_info_json(*em.model.ssa);
                write_file(dir / "spectrum.csv", atmopt::spectrum_csv(*em.model.ssa));
            }
            if (em.model.lstm) {
                detail["LSTM"] = {{"epoch_loss", em.model.lstm->epoch_loss},
                                  {"weights_file", "lstm_weights.json"}};
                write_file(dir / "lstm_weights.json",
                           atmopt::lstm_to_json(*em.model.lstm).dump(2) + "\n");
            }
        }
        summary["fitted"] = detail;
        summary["dataset"] = {{"first_date", atmopt::date::to_string(series.date(0))},
                              {"last_date",
                               atmopt::date::to_string(series.date(series.size() - 1))},
                              {"days", series.size()}};
        write_forecasts(stage, split, dir);
        write_file(dir / "report.json", summary.dump(2) + "\n");
        return;
    }

    // schedule, backtest and compare all need the control pipeline.
    const atmopt::EvaluatedModel& winner = atmopt::winning_model(stage);
    atmopt::ControlStage control = atmopt::run_control_stage(winner.model.forecast, cfg);
    summary["schedule"] = atmopt::schedule_json(control);
    write_file(dir / "plan.csv", atmopt::plan_csv(control.plan));
    write_file(dir / ("forecast_" + winner.model.tag + ".csv"),
               atmopt::forecast_csv(winner.model.forecast, split.test.start_date));
    if (opt.emit_matrices) write_matrices(control, dir);

    if (command == "schedule") {
        write_file(dir / "schedule.json", summary.dump(2) + "\n");
        return;
    }

    atmopt::BaumolPolicy policy = atmopt::make_baseline_policy(cfg, split.train);
    atmopt::BacktestStage bt = atmopt::run_backtest_stage(control.plan, policy,
                                                          split.test, cfg);
    summary["baseline_policy"] = {{"order_size", policy.order_size},
                                  {"lower_limit", policy.lower_limit}};
    summary["ocp"] = atmopt::outcome_json(bt.ocp);
    summary["baseline"] = atmopt::outcome_json(bt.baseline);
    summary["gain"] = bt.gain;
    write_file(dir / "ocp_path.csv", atmopt::path_csv(bt.ocp));
    write_file(dir / "baseline_path.csv", atmopt::path_csv(bt.baseline));

    if (command == "backtest") {
        write_file(dir / "backtest.json", summary.dump(2) + "\n");
        return;
    }

    // compare
    write_file(dir / "metrics_table.csv", atmopt::metrics_table_csv(stage));
    write_file(dir / "metrics_table.txt", atmopt::metrics_table_text(stage));
    write_file(dir / "comparison.json", summary.dump(2) + "\n");
}

void add_common_options(CLI::App* cmd, Options& opt) {
    cmd->add_option("inputs", opt.inputs, "withdrawal CSV files (date,amount)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--config", opt.config_path,
                    "JSON config file (default: $ATMOPT_CONFIG)");
    cmd->add_option("--out", opt.out, "output directory (default: out)");
    cmd->add_option("--model", opt.model, "auto | exp | ssa | lstm");
    cmd->add_option("--horizon", opt.horizon, "forecast horizon in days");
    cmd->add_option("--season", opt.season, "season length in days");
    cmd->add_option("--seed", opt.seed, "random seed for the neural model");
    cmd->add_option("--ssa-window", opt.ssa_window, "embedding window, or auto");
    cmd->add_option("--ssa-components", opt.ssa_components,
                    "eigentriples to keep, or auto");
    cmd->add_option("--w0", opt.w0, "initial bank wealth, or auto");
    cmd->add_option("--capacity", opt.capacity, "terminal cassette capacity");
    cmd->add_option("--baseline", opt.baseline, "benchmark policy (baumol-tobin)");
    cmd->add_option("--order-size", opt.order_size, "baseline lot size, or auto");
    cmd->add_option("--lower-limit", opt.lower_limit, "baseline refill threshold");
    cmd->add_flag("--emit-matrices", opt.emit_matrices,
                  "write demand, income and capital matrices as CSV");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ATM cash demand forecasting and replenishment scheduling"};
    app.require_subcommand(1);

    Options opt;
    const char* commands[] = {"forecast", "schedule", "backtest", "compare", "report"};
    const char* about[] = {
        "fit the forecasting models and score them on held-out days",
        "derive the optimal collection schedule and replenishment plan",
        "replay the plan and the threshold baseline against actual withdrawals",
        "full comparison: model metrics table plus strategy backtests",
        "dump fitted model parameters and dataset summary"};
    for (std::size_t i = 0; i < 5; ++i)
        add_common_options(app.add_subcommand(commands[i], about[i]), opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    std::string command = app.get_subcommands().front()->get_name();
    try {
        atmopt::RunConfig cfg = resolve_config(opt);
        for (const std::string& input : opt.inputs) run_one(command, input, cfg, opt);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const atmopt::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
