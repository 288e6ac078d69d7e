#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "atmopt/control.hpp"

using namespace atmopt;

namespace {

ForecastResult make_forecast(std::vector<double> expected,
                             std::vector<double> dispersion = {}) {
    ForecastResult f;
    f.horizon = expected.size();
    f.expected = std::move(expected);
    f.dispersion = dispersion.empty() ? std::vector<double>(f.horizon, 0.0)
                                      : std::move(dispersion);
    f.model_tag = "EXP";
    return f;
}

// Exhaustive search over all 2^(T-1) schedules, accumulating edge incomes
// left to right exactly like the production code so ties compare equal.
CollectionSchedule enumerate_best(const IncomeMatrix& income) {
    std::size_t t = income.horizon;
    CollectionSchedule best;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t mask = 0; mask < (std::size_t{1} << (t - 1)); ++mask) {
        std::vector<std::size_t> days = {0};
        for (std::size_t d = 1; d < t; ++d)
            if (mask & (std::size_t{1} << (d - 1))) days.push_back(d);
        double value = 0.0;
        for (std::size_t k = 0; k < days.size(); ++k) {
            std::size_t to = k + 1 < days.size() ? days[k + 1] : t;
            value += income(days[k], to);
        }
        bool better = value > best_value;
        if (!better && value == best_value)
            better = days.size() < best.days.size() ||
                     (days.size() == best.days.size() && days < best.days);
        if (better) {
            best_value = value;
            best.days = days;
        }
    }
    return best;
}

IncomeMatrix random_income(std::mt19937& gen, std::size_t t) {
    std::uniform_real_distribution<double> u(-500.0, 1500.0);
    IncomeMatrix m(t);
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = i + 1; j <= t; ++j) m.at(i, j) = u(gen);
    return m;
}

const std::vector<double> kFigureDemand = {912522.22, 183819.69, 1286586.70,
                                           644887.40, 1150195.45};

}  // namespace

TEST_CASE("demand matrix accumulates the published first row", "[control]") {
    DemandMatrix m = demand_matrix(make_forecast(kFigureDemand), 5);
    std::vector<double> row0 = {912522.22, 1096341.91, 2382928.62,
                                3027816.02, 4178011.47};
    for (std::size_t j = 1; j <= 5; ++j)
        CHECK(m(0, j) == Catch::Approx(row0[j - 1]).margin(0.01));
    CHECK(m(1, 2) == Catch::Approx(183819.69).margin(0.01));
    CHECK(m(4, 5) == Catch::Approx(1150195.45).margin(0.01));
}

TEST_CASE("demand matrix is additive across a middle day", "[control]") {
    std::mt19937 gen(31);
    std::uniform_real_distribution<double> u(0.0, 1e6);
    std::vector<double> l(9);
    for (double& v : l) v = u(gen);
    DemandMatrix m = demand_matrix(make_forecast(l), 9);
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(m(i, i + 1) == Catch::Approx(l[i]).margin(1e-6));
        for (std::size_t j = i + 2; j <= 9; ++j)
            CHECK(m(i, j) == Catch::Approx(l[i] + m(i + 1, j)).margin(1e-6));
    }
}

TEST_CASE("demand matrix edge cases", "[control]") {
    DemandMatrix zero = demand_matrix(make_forecast({0, 0, 0}), 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i + 1; j <= 3; ++j) CHECK(zero(i, j) == 0.0);

    DemandMatrix tiny = demand_matrix(make_forecast({1, 2, 3}), 3);
    CHECK(tiny(0, 3) == 6.0);
    CHECK(tiny(1, 3) == 5.0);

    CHECK_THROWS_AS(demand_matrix(make_forecast({1, 2, 3}), 4), HorizonMismatch);
}

TEST_CASE("income matrix reproduces the published cells", "[control]") {
    ControlParams params;
    double w0 = 7'227'175.0;
    DemandMatrix demand = demand_matrix(make_forecast(kFigureDemand), 5);
    IncomeMatrix income = income_matrix(demand, params, w0);

    struct Cell {
        std::size_t i, j;
        double value;
    };
    std::vector<Cell> cells = {{0, 1, 989.506}, {0, 2, 2921.71}, {0, 3, 4278.05},
                               {0, 4, 5633.61}, {0, 5, 6391.14}, {1, 2, 961.626},
                               {1, 3, 2520.28}};
    for (const Cell& c : cells)
        CHECK(income(c.i, c.j) == Catch::Approx(c.value).epsilon(0.0015));
}

TEST_CASE("income degenerates to zero without rate and fee", "[control]") {
    ControlParams params;
    params.daily_rate = 0.0;
    params.collection_cost = 0.0;
    DemandMatrix demand = demand_matrix(make_forecast({100, 200, 300}), 3);
    IncomeMatrix income = income_matrix(demand, params, 1e6);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i + 1; j <= 3; ++j) CHECK(income(i, j) == 0.0);

    DemandMatrix one = demand_matrix(make_forecast({500.0}), 1);
    IncomeMatrix single = income_matrix(one, ControlParams{}, 500.0);
    CHECK(single(0, 1) == 0.0);  // every rupee is in the terminal
}

TEST_CASE("income requires the bank to cover the horizon", "[control]") {
    DemandMatrix demand = demand_matrix(make_forecast({100, 200, 300}), 3);
    CHECK_THROWS_AS(income_matrix(demand, ControlParams{}, 599.0), InsufficientWealth);
    CHECK_NOTHROW(income_matrix(demand, ControlParams{}, 600.0));
}

TEST_CASE("capital matrix tracks the funded prefix", "[control]") {
    DemandMatrix demand = demand_matrix(make_forecast({100, 200, 300}), 3);
    CapitalMatrix k = capital_matrix(demand, 1000.0);
    CHECK(k(0, 1) == 900.0);   // 1000 - 100
    CHECK(k(0, 3) == 400.0);   // 1000 - 600
    CHECK(k(1, 2) == 700.0);   // 1000 - 100 - 200
    CHECK(k(2, 3) == 400.0);   // 1000 - 300 - 300
}

TEST_CASE("single-day horizon forces a single collection", "[control]") {
    DemandMatrix demand = demand_matrix(make_forecast({500.0}), 1);
    IncomeMatrix income = income_matrix(demand, ControlParams{}, 1e6);
    CollectionSchedule s = optimal_schedule(income);
    CHECK(s.days == std::vector<std::size_t>{0});
}

TEST_CASE("one big load wins when its edge dominates", "[control]") {
    IncomeMatrix income(3);
    income.at(0, 3) = 100.0;
    income.at(0, 1) = 10.0;
    income.at(0, 2) = 20.0;
    income.at(1, 2) = 10.0;
    income.at(1, 3) = 30.0;
    income.at(2, 3) = 10.0;
    CollectionSchedule s = optimal_schedule(income);
    CHECK(s.days == std::vector<std::size_t>{0});
    CHECK(schedule_income(income, s) == 100.0);
}

TEST_CASE("dynamic program agrees with exhaustive enumeration", "[control]") {
    std::mt19937 gen(1234);
    std::uniform_int_distribution<std::size_t> horizon(1, 8);
    for (int rep = 0; rep < 200; ++rep) {
        IncomeMatrix income = random_income(gen, horizon(gen));
        CollectionSchedule dp = optimal_schedule(income);
        CollectionSchedule brute = enumerate_best(income);
        CHECK(schedule_income(income, dp) == schedule_income(income, brute));
        CHECK(dp.days == brute.days);
    }
}

TEST_CASE("ties resolve to fewer and earlier collections", "[control]") {
    // All edges worth the same: any path from 0 to T has income
    // proportional to its edge count, so the single-edge path wins.
    IncomeMatrix flat(4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j <= 4; ++j) flat.at(i, j) = 0.0;
    CHECK(optimal_schedule(flat).days == std::vector<std::size_t>{0});

    // Two equal-value two-collection paths: lexicographic order decides.
    IncomeMatrix twin(3);
    twin.at(0, 1) = 5.0;
    twin.at(1, 3) = 5.0;
    twin.at(0, 2) = 5.0;
    twin.at(2, 3) = 5.0;
    twin.at(0, 3) = -1.0;
    twin.at(1, 2) = -100.0;
    CHECK(optimal_schedule(twin).days == std::vector<std::size_t>{0, 1});
}

TEST_CASE("rate and fee shift the optimum in opposite directions", "[control]") {
    DemandMatrix demand = demand_matrix(make_forecast(kFigureDemand), 5);
    double w0 = 7'227'175.0;

    ControlParams low;
    ControlParams high = low;
    high.daily_rate = 10.0 * low.daily_rate;
    double value_low = schedule_income(income_matrix(demand, low, w0),
                                       optimal_schedule(income_matrix(demand, low, w0)));
    double value_high = schedule_income(income_matrix(demand, high, w0),
                                        optimal_schedule(income_matrix(demand, high, w0)));
    CHECK(value_high >= value_low);

    // The income matrix credits avoided visits, so subtract the daily-
    // collection normalisation P*T to compare absolute profit across fees.
    ControlParams cheap;
    ControlParams pricey = cheap;
    pricey.collection_cost = 5000.0;
    auto absolute = [&](const ControlParams& p) {
        IncomeMatrix m = income_matrix(demand, p, w0);
        return schedule_income(m, optimal_schedule(m)) -
               p.collection_cost * static_cast<double>(m.horizon);
    };
    CHECK(absolute(pricey) <= absolute(cheap));
}

TEST_CASE("plan loads cover demand plus the safety buffer", "[control]") {
    ForecastResult f = make_forecast({100, 200}, {10, 10});
    ControlParams params;
    params.safety_alpha = 0.2;
    ReplenishmentPlan plan = build_plan(CollectionSchedule{{0}}, f, params);

    CHECK(plan.x[0] == Catch::Approx(302.0));
    CHECK(plan.y == std::vector<int>{1, 0});
    CHECK(plan.s[0] == 0.0);
    CHECK(plan.s[1] == Catch::Approx(202.0));
    CHECK(plan.s[2] == Catch::Approx(2.0));
    CHECK(plan.w0 == Catch::Approx(300.0));  // defaults to total demand
}

TEST_CASE("plans satisfy the balance, safety and capacity identities", "[control]") {
    std::mt19937 gen(77);
    std::uniform_real_distribution<double> demand_u(200'000.0, 800'000.0);
    std::uniform_real_distribution<double> disp_u(0.0, 100'000.0);
    ControlParams params;

    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> l(14), d(14);
        for (auto& v : l) v = demand_u(gen);
        for (auto& v : d) v = disp_u(gen);
        ForecastResult f = make_forecast(l, d);

        DemandMatrix dm = demand_matrix(f, 14);
        double w0 = dm(0, 14);
        IncomeMatrix im = income_matrix(dm, params, w0);
        ReplenishmentPlan plan = build_plan(optimal_schedule(im), f, params, w0);

        double running = params.initial_terminal;
        for (std::size_t t = 0; t < 14; ++t) {
            CHECK(plan.s[t] == Catch::Approx(running).margin(1e-6));
            CHECK(plan.s[t] + plan.x[t] >=
                  params.safety_alpha * f.dispersion[t] - 1e-9);
            CHECK(plan.s[t] + plan.x[t] <= params.capacity + 1e-9);
            if (plan.y[t] == 0) CHECK(plan.x[t] == 0.0);
            running += plan.x[t] - f.expected[t];
        }
        CHECK(plan.s[14] == Catch::Approx(running).margin(1e-6));
        CHECK(plan.s[14] >= -1e-9);
    }
}

TEST_CASE("infeasible segments raise typed errors", "[control]") {
    ControlParams params;
    params.capacity = 1000.0;

    ForecastResult heavy = make_forecast({800, 900}, {0, 0});
    CHECK_THROWS_AS(build_plan(CollectionSchedule{{0}}, heavy, params),
                    CapacityInfeasible);
    CHECK_NOTHROW(build_plan(CollectionSchedule{{0, 1}}, heavy, params));

    ForecastResult nervous = make_forecast({10, 10}, {20'000, 20'000});
    CHECK_THROWS_AS(build_plan(CollectionSchedule{{0}}, nervous, params),
                    SafetyInfeasible);
}

TEST_CASE("malformed schedules are rejected", "[control]") {
    ForecastResult f = make_forecast({10, 10, 10});
    CHECK_THROWS_AS(build_plan(CollectionSchedule{{}}, f, ControlParams{}), Error);
    CHECK_THROWS_AS(build_plan(CollectionSchedule{{1}}, f, ControlParams{}), Error);
    CHECK_THROWS_AS(build_plan(CollectionSchedule{{0, 2, 1}}, f, ControlParams{}),
                    Error);
    CHECK_THROWS_AS(build_plan(CollectionSchedule{{0, 3}}, f, ControlParams{}),
                    HorizonMismatch);
}

TEST_CASE("wealth recurrence on hand-checked days", "[control]") {
    ReplenishmentPlan plan;
    plan.horizon = 1;
    plan.w0 = 1000.0;
    plan.x = {0.0};
    plan.y = {0};
    ControlParams params;
    std::vector<double> w = wealth_trajectory(plan, params);
    REQUIRE(w.size() == 2);
    CHECK(w[1] == Catch::Approx(1000.1567).epsilon(1e-12));

    plan.x = {100.0};
    plan.y = {1};
    params.collection_cost = 10.0;
    w = wealth_trajectory(plan, params);
    CHECK(w[1] == Catch::Approx(890.1567).epsilon(1e-12));

    params.daily_rate = 0.0;
    plan.x = {0.0};
    plan.y = {0};
    plan.horizon = 3;
    plan.x.assign(3, 0.0);
    plan.y.assign(3, 0);
    w = wealth_trajectory(plan, params);
    for (double v : w) CHECK(v == 1000.0);
}

TEST_CASE("edge incomes track simulated wealth differences", "[control]") {
    std::mt19937 gen(99);
    std::uniform_real_distribution<double> demand_u(300'000.0, 900'000.0);
    ControlParams params;

    std::vector<double> l(14);
    for (auto& v : l) v = demand_u(gen);
    ForecastResult f = make_forecast(l);

    DemandMatrix dm = demand_matrix(f, 14);
    double w0 = dm(0, 14) * 1.2;
    IncomeMatrix im = income_matrix(dm, params, w0);

    CollectionSchedule optimal = optimal_schedule(im);
    CollectionSchedule daily;
    for (std::size_t t = 0; t < 14; ++t) daily.days.push_back(t);

    ReplenishmentPlan plan_opt = build_plan(optimal, f, params, w0);
    ReplenishmentPlan plan_daily = build_plan(daily, f, params, w0);

    double predicted = schedule_income(im, optimal) - schedule_income(im, daily);
    double realised = plan_opt.w.back() - plan_daily.w.back();
    CHECK(predicted == Catch::Approx(realised).margin(0.002 * w0));
    CHECK(predicted >= 0.0);
}
