#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "atmopt/common.hpp"

namespace atmopt {

struct MalformedRow : Error {
    using Error::Error;
};
struct GapInDates : Error {
    using Error::Error;
};
struct NegativeAmount : Error {
    using Error::Error;
};
struct HoldoutTooLarge : Error {
    using Error::Error;
};
struct EmptyInput : Error {
    using Error::Error;
};
struct SeriesTooShort : Error {
    using Error::Error;
};

namespace date {

inline std::chrono::sys_days parse(std::string_view text) {
    int y = 0;
    unsigned m = 0, d = 0;
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' ||
        std::sscanf(std::string(text).c_str(), "%d-%u-%u", &y, &m, &d) != 3)
        throw MalformedRow("bad date: " + std::string(text));
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                    std::chrono::day{d}};
    if (!ymd.ok()) throw MalformedRow("invalid calendar date: " + std::string(text));
    return std::chrono::sys_days{ymd};
}

inline std::string to_string(std::chrono::sys_days day) {
    std::chrono::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()));
    return buf;
}

}  // namespace date

/**
 * One terminal's daily cash withdrawals: an amount in rupees for every
 * calendar day starting at start_date, with no gaps.
 */
struct WithdrawalSeries {
    std::string terminal_id;
    std::chrono::sys_days start_date{};
    std::vector<double> amounts;

    std::size_t size() const { return amounts.size(); }
    double operator[](std::size_t i) const { return amounts[i]; }
    std::chrono::sys_days date(std::size_t i) const {
        return start_date + std::chrono::days{static_cast<long>(i)};
    }

    // Enforces the type invariants; every factory below calls this.
    void validate() const {
        if (amounts.empty()) throw EmptyInput("series has no observations");
        for (std::size_t i = 0; i < amounts.size(); ++i)
            if (!(amounts[i] >= 0.0))
                throw NegativeAmount("negative or non-finite amount at day " +
                                     std::to_string(i));
    }
};

struct SeriesSplit {
    WithdrawalSeries train;
    WithdrawalSeries test;
};

/**
 * Parses CSV text with header "date,amount", one row per consecutive
 * calendar day, ISO-8601 dates, non-negative amounts.  At least two rows
 * are required.
 */
inline WithdrawalSeries parse_withdrawals(std::string_view csv_text,
                                          std::string terminal_id) {
    WithdrawalSeries out;
    out.terminal_id = std::move(terminal_id);

    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool saw_header = false;
    std::chrono::sys_days prev{};
    while (pos <= csv_text.size()) {
        std::size_t eol = csv_text.find('\n', pos);
        std::string_view line = csv_text.substr(
            pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? csv_text.size() + 1 : eol + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        if (line.empty()) continue;

        if (!saw_header) {
            if (line != "date,amount")
                throw MalformedRow("line 1: expected header \"date,amount\"");
            saw_header = true;
            continue;
        }

        std::size_t comma = line.find(',');
        if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos)
            throw MalformedRow("line " + std::to_string(line_no) + ": expected two fields");

        std::chrono::sys_days day = date::parse(line.substr(0, comma));
        double amount = 0.0;
        if (!num::parse(line.substr(comma + 1), amount))
            throw MalformedRow("line " + std::to_string(line_no) + ": bad amount");
        if (!(amount >= 0.0))
            throw NegativeAmount("line " + std::to_string(line_no) +
                                 ": withdrawals cannot be negative");

        if (out.amounts.empty()) {
            out.start_date = day;
        } else if (day != prev + std::chrono::days{1}) {
            throw GapInDates("line " + std::to_string(line_no) +
                             ": dates must advance by exactly one day");
        }
        prev = day;
        out.amounts.push_back(amount);
    }

    if (!saw_header) throw MalformedRow("empty input");
    if (out.size() < 2) throw SeriesTooShort("need at least two observations");
    return out;
}

inline std::string to_csv(const WithdrawalSeries& series) {
    std::string out = "date,amount\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        out += date::to_string(series.date(i));
        out += ',';
        out += num::to_string(series.amounts[i]);
        out += '\n';
    }
    return out;
}

/// Last n_test days become the test series, everything before them trains.
inline SeriesSplit split_train_test(const WithdrawalSeries& series, std::size_t n_test) {
    if (n_test == 0 || n_test >= series.size())
        throw HoldoutTooLarge("holdout of " + std::to_string(n_test) +
                              " days needs a longer series (have " +
                              std::to_string(series.size()) + ")");
    std::size_t n_train = series.size() - n_test;
    SeriesSplit split;
    split.train.terminal_id = series.terminal_id;
    split.train.start_date = series.start_date;
    split.train.amounts.assign(series.amounts.begin(), series.amounts.begin() + n_train);
    split.test.terminal_id = series.terminal_id;
    split.test.start_date = series.date(n_train);
    split.test.amounts.assign(series.amounts.begin() + n_train, series.amounts.end());
    split.train.validate();
    split.test.validate();
    return split;
}

namespace stats {

// Sample standard deviation (n-1 denominator); 0 when fewer than 2 values.
inline double sample_std(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace stats

/**
 * Per-position spread of a residual sequence under a fixed season length:
 * slot k holds the sample standard deviation of residuals[i] over i == k
 * (mod period).  Slots with fewer than two members fall back to the overall
 * standard deviation.
 */
inline std::vector<double> seasonal_residual_std(const std::vector<double>& residuals,
                                                 std::size_t period) {
    if (residuals.empty() || period == 0)
        throw EmptyInput("seasonal_residual_std needs residuals and a period");

    double overall = stats::sample_std(residuals);
    std::vector<double> out(period, 0.0);
    std::vector<double> slot;
    for (std::size_t k = 0; k < period; ++k) {
        slot.clear();
        for (std::size_t i = k; i < residuals.size(); i += period) slot.push_back(residuals[i]);
        out[k] = slot.size() < 2 ? overall : stats::sample_std(slot);
    }
    return out;
}

}  // namespace atmopt
