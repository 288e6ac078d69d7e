#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "atmopt/reporting.hpp"

using namespace atmopt;
using Catch::Approx;

namespace {

WithdrawalSeries seasonal_series(std::size_t days) {
    WithdrawalSeries s;
    s.terminal_id = "T1";
    s.start_date = date::parse("2024-01-01");
    s.amounts.resize(days);
    for (std::size_t t = 0; t < days; ++t) {
        double factor = 1.0 + 0.4 * std::sin(2.0 * M_PI * double(t % 14) / 14.0);
        s.amounts[t] = (400000.0 + 150.0 * double(t)) * factor;
    }
    return s;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

std::vector<std::string> fields_of(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string field;
    while (std::getline(in, field, ',')) out.push_back(field);
    return out;
}

}  // namespace

TEST_CASE("shortest double form round-trips exactly", "[reporting]") {
    for (double v : {0.1, 1.0 / 3.0, 740428.11, 2616761.89, 1e-9, -512.03125, 0.0}) {
        std::string text = num::to_string(v);
        double back = 0.0;
        REQUIRE(num::parse(text, back));
        REQUIRE(back == v);
    }
    CHECK(num::to_string(0.1) == "0.1");
    CHECK(num::to_string(2.0) == "2");
}

TEST_CASE("default config serializes with auto sentinels", "[reporting]") {
    RunConfig cfg;
    nlohmann::json j = config_to_json(cfg);

    CHECK(j.at("horizon") == 14);
    CHECK(j.at("season") == 14);
    CHECK(j.at("model") == "auto");
    CHECK(j.at("ssa_window") == "auto");
    CHECK(j.at("ssa_components") == "auto");
    CHECK(j.at("initial_wealth") == "auto");
    CHECK(j.at("bt_order_size") == "auto");
    CHECK(j.at("bt_lower_limit").get<double>() == Approx(740428.11));
    CHECK(j.at("collection_cost").get<double>() == Approx(cfg.control.collection_cost));
    CHECK(j.at("daily_rate").get<double>() == Approx(cfg.control.daily_rate));
    CHECK(j.at("seed").get<std::uint64_t>() == cfg.lstm.seed);
}

TEST_CASE("config survives a json round trip", "[reporting]") {
    RunConfig cfg;
    cfg.horizon = 7;
    cfg.season = 7;
    cfg.model = "ssa";
    cfg.eval_tolerance = 0.25;
    cfg.ssa_window = 21;
    cfg.ssa_components = 4;
    cfg.ssa_energy = 0.95;
    cfg.lstm.window = 10;
    cfg.lstm.units = 12;
    cfg.lstm.epochs = 5;
    cfg.lstm.seed = 424242;
    cfg.control.collection_cost = 1234.5;
    cfg.control.daily_rate = 0.0002;
    cfg.control.capacity = 9e6;
    cfg.control.safety_alpha = 0.33;
    cfg.initial_wealth = 5.5e6;
    cfg.bt_order_size = 2.5e6;
    cfg.bt_lower_limit = 600000.0;

    RunConfig loaded;
    apply_config(config_to_json(cfg), loaded);
    CHECK(config_to_json(loaded) == config_to_json(cfg));
}

TEST_CASE("apply_config changes only the keys present", "[reporting]") {
    RunConfig cfg;
    apply_config(nlohmann::json{{"horizon", 7}, {"capacity", 1.0}}, cfg);
    CHECK(cfg.horizon == 7);
    CHECK(cfg.control.capacity == 1.0);
    CHECK(cfg.season == 14);
    CHECK(cfg.model == "auto");
}

TEST_CASE("auto strings reset derived fields", "[reporting]") {
    RunConfig cfg;
    cfg.ssa_window = 30;
    cfg.initial_wealth = 1.0;
    cfg.bt_order_size = 2.0;
    apply_config(nlohmann::json{{"ssa_window", "auto"},
                                {"initial_wealth", "auto"},
                                {"bt_order_size", "auto"}},
                 cfg);
    CHECK(cfg.ssa_window == 0);
    CHECK(std::isnan(cfg.initial_wealth));
    CHECK(cfg.bt_order_size == 0.0);
}

TEST_CASE("unknown config keys are rejected", "[reporting]") {
    RunConfig cfg;
    CHECK_THROWS_AS(apply_config(nlohmann::json{{"horizonn", 7}}, cfg), Error);
    CHECK_THROWS_AS(apply_config(nlohmann::json::array({1, 2}), cfg), Error);
}

TEST_CASE("forecast csv lists one dated row per day", "[reporting]") {
    ForecastResult f;
    f.horizon = 2;
    f.expected = {1000.5, 2000.0};
    f.dispersion = {10.0, 20.25};
    std::string csv = forecast_csv(f, date::parse("2024-02-28"));

    auto rows = lines_of(csv);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "day,date,expected,dispersion");
    CHECK(rows[1] == "1,2024-02-28,1000.5,10");
    CHECK(rows[2] == "2,2024-02-29,2000,20.25");
}

TEST_CASE("matrix csv walks the upper triangle", "[reporting]") {
    ForecastResult f;
    f.horizon = 2;
    f.expected = {100.0, 200.0};
    f.dispersion = {0.0, 0.0};
    DemandMatrix m = demand_matrix(f, 2);

    auto rows = lines_of(matrix_csv(m));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == "i,j,value");
    CHECK(rows[1] == "0,1,100");
    CHECK(rows[2] == "0,2,300");
    CHECK(rows[3] == "1,2,200");
}

TEST_CASE("plan csv carries an end-of-horizon row", "[reporting]") {
    ForecastResult f;
    f.horizon = 2;
    f.expected = {100.0, 200.0};
    f.dispersion = {10.0, 10.0};
    ControlParams params;
    params.safety_alpha = 0.2;
    CollectionSchedule sched;
    sched.days = {0, 1};
    ReplenishmentPlan plan = build_plan(sched, f, params, 400.0);

    auto rows = lines_of(plan_csv(plan));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == "t,x,y,s,w");
    for (std::size_t t = 0; t < 2; ++t) {
        auto cols = fields_of(rows[t + 1]);
        REQUIRE(cols.size() == 5);
        CHECK(cols[0] == std::to_string(t));
        CHECK(cols[1] == num::to_string(plan.x[t]));
        CHECK(cols[2] == "1");
        CHECK(cols[3] == num::to_string(plan.s[t]));
        CHECK(cols[4] == num::to_string(plan.w[t]));
    }
    auto last = fields_of(rows[3]);
    CHECK(last[0] == "2");
    CHECK(last[1] == "0");
    CHECK(last[2] == "0");
    CHECK(last[3] == num::to_string(plan.s[2]));
    CHECK(last[4] == num::to_string(plan.w[2]));
}

TEST_CASE("path csv prints terminal and wealth trajectories", "[reporting]") {
    BacktestOutcome o;
    o.horizon = 2;
    o.terminal_path = {0.0, 50.0, 25.5};
    o.wealth_path = {1000.0, 900.0, 875.25};

    auto rows = lines_of(path_csv(o));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == "t,terminal,wealth");
    CHECK(rows[1] == "0,0,1000");
    CHECK(rows[3] == "2,25.5,875.25");
}

TEST_CASE("spectrum csv lists singular values in order", "[reporting]") {
    SsaInfo info;
    info.sigma = {9.0, 4.0, 1.0};
    auto rows = lines_of(spectrum_csv(info));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0] == "index,sigma");
    CHECK(rows[1] == "0,9");
    CHECK(rows[3] == "2,1");
}

TEST_CASE("metrics table emits both count and amount scores", "[reporting]") {
    WithdrawalSeries s = seasonal_series(84);
    RunConfig cfg;
    cfg.model = "exp";
    ForecastStage stage = run_forecast_stage(split_train_test(s, cfg.horizon), cfg);

    auto rows = lines_of(metrics_table_csv(stage));
    REQUIRE(rows.size() == 2);
    auto header = fields_of(rows[0]);
    REQUIRE(header.size() == 17);
    CHECK(header[0] == "model");
    CHECK(header[5] == "accuracy");
    CHECK(header[13] == "amount_accuracy");

    auto row = fields_of(rows[1]);
    REQUIRE(row.size() == 17);
    CHECK(row[0] == "EXP");
    const EvaluatedModel& em = stage.models[0];
    CHECK(row[1] == std::to_string(em.counts.tp));
    CHECK(row[5] == num::to_string(em.count_metrics.accuracy));
    CHECK(row[9] == num::to_string(em.amounts.tp));
    CHECK(row[16] == num::to_string(em.amount_metrics.f1));

    std::string text = metrics_table_text(stage);
    auto text_rows = lines_of(text);
    REQUIRE(text_rows.size() == 2);
    CHECK(text_rows[0].find("model") != std::string::npos);
    CHECK(text_rows[1].find("EXP") != std::string::npos);
    CHECK(text_rows[1].find("<- selected") != std::string::npos);
}

TEST_CASE("smoothing model survives a json round trip", "[reporting]") {
    WithdrawalSeries s = seasonal_series(70);
    HoltWintersModel m = fit_holt_winters(s, 14);
    HoltWintersModel back = hw_from_json(hw_to_json(m));

    CHECK(back.alpha == m.alpha);
    CHECK(back.beta == m.beta);
    CHECK(back.gamma == m.gamma);
    CHECK(back.period == m.period);
    CHECK(back.level == m.level);
    CHECK(back.trend == m.trend);
    CHECK(back.origin == m.origin);
    CHECK(back.seasonals == m.seasonals);
    CHECK(back.residuals == m.residuals);

    ForecastResult a = hw_forecast(m, 14);
    ForecastResult b = hw_forecast(back, 14);
    CHECK(a.expected == b.expected);
    CHECK(a.dispersion == b.dispersion);
}

TEST_CASE("network weights survive a json round trip", "[reporting]") {
    WithdrawalSeries s = seasonal_series(60);
    TrainConfig cfg;
    cfg.window = 6;
    cfg.units = 8;
    cfg.epochs = 2;
    cfg.seed = 17;
    LstmNetwork net = lstm_train(cfg, window_dataset(s, cfg.window));
    LstmNetwork back = lstm_from_json(lstm_to_json(net));

    auto a = parameter_blocks(net);
    auto b = parameter_blocks(back);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].size == b[i].size);
        for (std::size_t k = 0; k < a[i].size; ++k)
            REQUIRE(a[i].data[k] == b[i].data[k]);
    }
    CHECK(back.epoch_loss == net.epoch_loss);
    CHECK(back.residuals == net.residuals);

    std::vector<double> tail(s.amounts.end() - 6, s.amounts.end());
    CHECK(predict_one(back, tail) == predict_one(net, tail));
}

TEST_CASE("decomposition summary truncates the spectrum head", "[reporting]") {
    SsaInfo info;
    info.window = 50;
    info.rank = 40;
    info.selected = 3;
    info.nu2 = 0.42;
    info.energy_fraction = 0.9991;
    for (int i = 0; i < 40; ++i) info.sigma.push_back(40.0 - i);

    nlohmann::json j = ssa_info_json(info);
    CHECK(j.at("window") == 50);
    CHECK(j.at("rank") == 40);
    CHECK(j.at("selected") == 3);
    CHECK(j.at("nu2").get<double>() == Approx(0.42));
    CHECK(j.at("sigma_head").size() == 10);
    CHECK(j.at("sigma_head")[0].get<double>() == Approx(40.0));
}

TEST_CASE("outcome json echoes the replay tallies", "[reporting]") {
    BacktestOutcome o;
    o.horizon = 3;
    o.w0 = 1000.0;
    o.exhausted_days = {1, 2};
    o.lost_demand = 55.0;
    o.total_loaded = 800.0;
    o.collections = 2;
    o.final_wealth = 150.0;
    o.investment_income = -12.5;
    o.wealth_path = {1000.0, 500.0, 300.0, 150.0};
    o.terminal_path = {0.0, 10.0, 0.0, 0.0};

    nlohmann::json j = outcome_json(o);
    CHECK(j.at("exhaustion_count") == 2);
    CHECK(j.at("exhausted_days") == nlohmann::json::array({1, 2}));
    CHECK(j.at("lost_demand").get<double>() == Approx(55.0));
    CHECK(j.at("investment_income").get<double>() == Approx(-12.5));
}
