#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstddef>
#include <vector>

#include "atmopt/forecast.hpp"
#include "atmopt/series.hpp"

namespace atmopt {

struct WindowOutOfRange : Error {
    using Error::Error;
};
struct ConvergenceFailure : Error {
    using Error::Error;
};
struct IndexOutOfRange : Error {
    using Error::Error;
};
struct VerticalityViolation : Error {
    using Error::Error;
};

/// Window length used when none is given: half the series, rounded down.
inline std::size_t ssa_default_window(std::size_t n) { return n / 2; }

/**
 * Trajectory (Hankel) matrix of a series: L rows, K = N - L + 1 columns,
 * entry (i, j) = series[i + j].  Every anti-diagonal is constant.
 */
inline Eigen::MatrixXd embed(const std::vector<double>& series, std::size_t window) {
    std::size_t n = series.size();
    if (window < 2 || window + 1 > n)
        throw WindowOutOfRange("window " + std::to_string(window) +
                               " not in [2, " + std::to_string(n ? n - 1 : 0) +
                               "] for a series of length " + std::to_string(n));
    std::size_t k = n - window + 1;
    Eigen::MatrixXd m(window, k);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < window; ++i) m(i, j) = series[i + j];
    return m;
}

/**
 * Singular value decomposition of a trajectory matrix.  Eigentriple i is
 * (sigma[i], u.col(i), v.col(i)), sorted by singular value descending;
 * sum of sigma^2 equals the squared Frobenius norm of the input.
 */
struct SsaDecomposition {
    std::size_t window = 0;         // L
    std::size_t series_length = 0;  // N = L + K - 1
    Eigen::VectorXd sigma;
    Eigen::MatrixXd u;  // L x r
    Eigen::MatrixXd v;  // K x r

    std::size_t rank() const { return static_cast<std::size_t>(sigma.size()); }

    double energy() const { return sigma.squaredNorm(); }

    // Eigentriples whose singular value exceeds rel_tol * sigma[0].
    std::size_t significant_count(double rel_tol = 1e-10) const {
        if (rank() == 0 || sigma[0] <= 0.0) return 0;
        std::size_t c = 0;
        for (Eigen::Index i = 0; i < sigma.size(); ++i)
            if (sigma[i] > rel_tol * sigma[0]) ++c;
        return c;
    }
};

inline SsaDecomposition decompose(const Eigen::MatrixXd& trajectory) {
    if (trajectory.rows() < 2 || trajectory.cols() < 1)
        throw WindowOutOfRange("trajectory matrix needs at least 2 rows");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(trajectory,
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        throw ConvergenceFailure("singular value decomposition did not converge");
    SsaDecomposition d;
    d.window = static_cast<std::size_t>(trajectory.rows());
    d.series_length = static_cast<std::size_t>(trajectory.rows() + trajectory.cols()) - 1;
    d.sigma = svd.singularValues();
    d.u = svd.matrixU();
    d.v = svd.matrixV();
    return d;
}

/// Smallest prefix of eigentriples holding at least `fraction` of the
/// total energy (sum of squared singular values).
inline std::vector<std::size_t> select_components(const SsaDecomposition& d,
                                                  double fraction = 0.999) {
    double total = d.energy();
    std::vector<std::size_t> sel;
    if (total <= 0.0) return sel;
    double acc = 0.0;
    for (std::size_t i = 0; i < d.rank(); ++i) {
        sel.push_back(i);
        acc += d.sigma[static_cast<Eigen::Index>(i)] * d.sigma[static_cast<Eigen::Index>(i)];
        if (acc >= fraction * total) break;
    }
    return sel;
}

inline std::vector<std::size_t> leading_components(const SsaDecomposition& d,
                                                   std::size_t count) {
    count = std::min(count, d.rank());
    std::vector<std::size_t> sel(count);
    for (std::size_t i = 0; i < count; ++i) sel[i] = i;
    return sel;
}

namespace detail {

// Diagonal averaging: projects a matrix back onto a series by averaging
// every anti-diagonal i + j = t.
inline std::vector<double> hankelize(const Eigen::MatrixXd& m) {
    std::size_t rows = static_cast<std::size_t>(m.rows());
    std::size_t cols = static_cast<std::size_t>(m.cols());
    std::size_t n = rows + cols - 1;
    std::vector<double> sum(n, 0.0);
    std::vector<std::size_t> count(n, 0);
    for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i = 0; i < rows; ++i) {
            sum[i + j] += m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            ++count[i + j];
        }
    for (std::size_t t = 0; t < n; ++t) sum[t] /= static_cast<double>(count[t]);
    return sum;
}

inline void check_selection(const SsaDecomposition& d,
                            const std::vector<std::size_t>& selected) {
    for (std::size_t i : selected)
        if (i >= d.rank())
            throw IndexOutOfRange("eigentriple " + std::to_string(i) +
                                  " out of range (rank " + std::to_string(d.rank()) + ")");
}

}  // namespace detail

/// Sums the selected rank-one terms sigma_i * u_i * v_i^T and averages the
/// anti-diagonals back into a series of the original length.
inline std::vector<double> reconstruct(const SsaDecomposition& d,
                                       const std::vector<std::size_t>& selected) {
    detail::check_selection(d, selected);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d.u.rows(), d.v.rows());
    for (std::size_t i : selected) {
        Eigen::Index c = static_cast<Eigen::Index>(i);
        acc.noalias() += d.sigma[c] * d.u.col(c) * d.v.col(c).transpose();
    }
    return detail::hankelize(acc);
}

/**
 * Linear recurrence fitted to the selected eigentriples.  With pi_i the last
 * coordinate of u_i and nu^2 = sum pi_i^2, the coefficients are
 *
 *   R = (1 - nu^2)^-1 * sum_i pi_i * u_i(0..L-2)
 *
 * and the next value is the dot product of R with the last L-1 values in
 * chronological order.
 */
struct SsaForecaster {
    std::size_t window = 0;          // L
    double nu2 = 0.0;
    std::vector<double> coeffs;      // length L-1
    std::vector<double> tail;        // last L-1 reconstructed values
    std::vector<double> residuals;   // original minus reconstruction
    std::size_t period = 14;

    // One recurrence step over the last L-1 values, oldest first.
    double step(const std::vector<double>& recent) const {
        double next = 0.0;
        std::size_t lag = recent.size() - coeffs.size();
        for (std::size_t j = 0; j < coeffs.size(); ++j)
            next += coeffs[j] * recent[lag + j];
        return next;
    }
};

inline SsaForecaster fit_forecaster(const SsaDecomposition& d,
                                    const std::vector<std::size_t>& selected,
                                    std::size_t period = 14) {
    detail::check_selection(d, selected);
    std::size_t l = d.window;

    double nu2 = 0.0;
    for (std::size_t i : selected) {
        double pi = d.u(static_cast<Eigen::Index>(l) - 1, static_cast<Eigen::Index>(i));
        nu2 += pi * pi;
    }
    if (nu2 >= 1.0 - 1e-9)
        throw VerticalityViolation("verticality coefficient " + num::to_string(nu2) +
                                   " leaves the recurrence undefined");

    SsaForecaster f;
    f.window = l;
    f.nu2 = nu2;
    f.period = period;
    f.coeffs.assign(l - 1, 0.0);
    for (std::size_t i : selected) {
        Eigen::Index c = static_cast<Eigen::Index>(i);
        double pi = d.u(static_cast<Eigen::Index>(l) - 1, c);
        for (std::size_t j = 0; j + 1 < l; ++j)
            f.coeffs[j] += pi * d.u(static_cast<Eigen::Index>(j), c) / (1.0 - nu2);
    }

    std::vector<double> recon = reconstruct(d, selected);
    std::vector<std::size_t> all(d.rank());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    std::vector<double> original = reconstruct(d, all);
    f.residuals.resize(recon.size());
    for (std::size_t t = 0; t < recon.size(); ++t)
        f.residuals[t] = original[t] - recon[t];
    f.tail.assign(recon.end() - static_cast<long>(l - 1), recon.end());
    return f;
}

/// Recurrent forecast: each prediction is fed back raw; only the emitted
/// expected values are clamped at zero.
inline ForecastResult ssa_forecast(const SsaForecaster& f, std::size_t horizon) {
    if (horizon < 1) throw Error("forecast horizon must be >= 1");
    ForecastResult out;
    out.horizon = horizon;
    out.model_tag = "SSA";
    std::vector<double> buf = f.tail;
    std::vector<double> stds = seasonal_residual_std(f.residuals, f.period);
    std::size_t n = f.residuals.size();
    for (std::size_t h = 1; h <= horizon; ++h) {
        double raw = f.step(buf);
        buf.push_back(raw);
        out.expected.push_back(std::max(raw, 0.0));
        out.dispersion.push_back(stds[(n + h - 1) % f.period]);
    }
    return out;
}

}  // namespace atmopt
