#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "atmopt/forecast.hpp"
#include "atmopt/series.hpp"

namespace atmopt {

struct WindowLengthMismatch : Error {
    using Error::Error;
};
struct NonFiniteLoss : Error {
    using Error::Error;
};

struct TrainConfig {
    std::size_t window = 31;
    std::size_t units = 50;
    std::size_t epochs = 10;
    double dropout = 0.2;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 1;
};

struct WindowSample {
    std::vector<double> input;
    double target = 0.0;
};

/// Sliding windows over the series: input = days [k, k+window), target = day
/// k + window.  Produces size - window samples.
inline std::vector<WindowSample> window_dataset(const WithdrawalSeries& series,
                                                std::size_t window) {
    if (window < 1) throw Error("window must be >= 1");
    if (series.size() <= window)
        throw SeriesTooShort("need more than " + std::to_string(window) +
                             " observations, have " + std::to_string(series.size()));
    std::vector<WindowSample> out(series.size() - window);
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k].input.assign(series.amounts.begin() + k,
                            series.amounts.begin() + k + window);
        out[k].target = series.amounts[k + window];
    }
    return out;
}

struct MinMaxScaler {
    double lo = 0.0;
    double hi = 1.0;
    double transform(double x) const { return (x - lo) / (hi - lo); }
    double inverse(double z) const { return lo + z * (hi - lo); }
};

namespace detail {

// All randomness flows through one mt19937_64 stream so a seed pins both
// the initial weights and the dropout masks, bit for bit.
struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double uniform() { return (gen() >> 11) * 0x1.0p-53; }  // [0, 1)
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
};

inline Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& z) {
    return 1.0 / (1.0 + (-z).exp());
}

}  // namespace detail

// Gate order used everywhere, including the JSON layout.
inline constexpr std::size_t kGateInput = 0;
inline constexpr std::size_t kGateForget = 1;
inline constexpr std::size_t kGateCell = 2;
inline constexpr std::size_t kGateOutput = 3;

struct LstmLayer {
    std::array<Eigen::MatrixXd, 4> w;  // units x input_dim
    std::array<Eigen::MatrixXd, 4> r;  // units x units
    std::array<Eigen::VectorXd, 4> b;  // units

    void resize(std::size_t units, std::size_t input_dim) {
        for (std::size_t g = 0; g < 4; ++g) {
            w[g] = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(units),
                                         static_cast<Eigen::Index>(input_dim));
            r[g] = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(units),
                                         static_cast<Eigen::Index>(units));
            b[g] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(units));
        }
    }

    // Uniform +-1/sqrt(fan_in) weights, zero biases except forget = 1.
    void init_random(detail::Rng& rng) {
        for (std::size_t g = 0; g < 4; ++g) {
            double bound_w = 1.0 / std::sqrt(static_cast<double>(w[g].cols()));
            for (Eigen::Index i = 0; i < w[g].size(); ++i)
                w[g].data()[i] = rng.uniform(-bound_w, bound_w);
            double bound_r = 1.0 / std::sqrt(static_cast<double>(r[g].cols()));
            for (Eigen::Index i = 0; i < r[g].size(); ++i)
                r[g].data()[i] = rng.uniform(-bound_r, bound_r);
            b[g].setZero();
        }
        b[kGateForget].setOnes();
    }
};

/**
 * Two stacked LSTM layers with ReLU on each layer's emitted hidden sequence,
 * inverted dropout between layers during training, and a linear head reading
 * the last timestep.  Inputs and targets are min-max scaled to [0, 1] with
 * bounds taken from the training windows.
 */
struct LstmNetwork {
    TrainConfig config;
    std::array<LstmLayer, 2> layers;
    Eigen::VectorXd head_w;
    double head_b = 0.0;
    MinMaxScaler scaler;

    std::vector<double> residuals;   // one-step in-sample errors, raw rupees
    std::vector<double> epoch_loss;  // mean scaled squared error per epoch
};

// Per-timestep activations kept for backpropagation through time.
struct LayerTrace {
    std::vector<Eigen::VectorXd> x, gi, gf, gg, go, c, tanh_c, h, mask, out;
};

namespace detail {

inline std::vector<Eigen::VectorXd> layer_forward(const LstmLayer& layer,
                                                  const std::vector<Eigen::VectorXd>& inputs,
                                                  bool train, double dropout, Rng* rng,
                                                  LayerTrace* trace) {
    Eigen::Index units = layer.b[0].size();
    Eigen::VectorXd h = Eigen::VectorXd::Zero(units);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(units);
    std::vector<Eigen::VectorXd> outputs;
    outputs.reserve(inputs.size());

    double keep = 1.0 - dropout;
    for (const Eigen::VectorXd& x : inputs) {
        Eigen::ArrayXd zi = (layer.w[kGateInput] * x + layer.r[kGateInput] * h +
                             layer.b[kGateInput]).array();
        Eigen::ArrayXd zf = (layer.w[kGateForget] * x + layer.r[kGateForget] * h +
                             layer.b[kGateForget]).array();
        Eigen::ArrayXd zg = (layer.w[kGateCell] * x + layer.r[kGateCell] * h +
                             layer.b[kGateCell]).array();
        Eigen::ArrayXd zo = (layer.w[kGateOutput] * x + layer.r[kGateOutput] * h +
                             layer.b[kGateOutput]).array();
        Eigen::VectorXd gi = sigmoid(zi).matrix();
        Eigen::VectorXd gf = sigmoid(zf).matrix();
        Eigen::VectorXd gg = zg.tanh().matrix();
        Eigen::VectorXd go = sigmoid(zo).matrix();
        c = (gf.array() * c.array() + gi.array() * gg.array()).matrix();
        Eigen::VectorXd tanh_c = c.array().tanh().matrix();
        Eigen::VectorXd h_new = (go.array() * tanh_c.array()).matrix();

        Eigen::VectorXd a = h_new.cwiseMax(0.0);  // emitted activation
        Eigen::VectorXd mask = Eigen::VectorXd::Ones(units);
        if (train && dropout > 0.0)
            for (Eigen::Index u = 0; u < units; ++u)
                mask[u] = rng->uniform() < keep ? 1.0 / keep : 0.0;
        Eigen::VectorXd out = (a.array() * mask.array()).matrix();

        if (trace) {
            trace->x.push_back(x);
            trace->gi.push_back(gi);
            trace->gf.push_back(gf);
            trace->gg.push_back(gg);
            trace->go.push_back(go);
            trace->c.push_back(c);
            trace->tanh_c.push_back(tanh_c);
            trace->h.push_back(h_new);
            trace->mask.push_back(mask);
            trace->out.push_back(out);
        }
        h = h_new;
        outputs.push_back(std::move(out));
    }
    return outputs;
}

// Backpropagates d_out (gradients of the post-dropout outputs) through one
// layer; returns the gradients of that layer's inputs.
inline std::vector<Eigen::VectorXd> layer_backward(const LstmLayer& layer,
                                                   const LayerTrace& trace,
                                                   const std::vector<Eigen::VectorXd>& d_out,
                                                   LstmLayer& grad) {
    Eigen::Index units = layer.b[0].size();
    std::size_t steps = trace.x.size();
    std::vector<Eigen::VectorXd> d_inputs(steps);

    Eigen::VectorXd dh_carry = Eigen::VectorXd::Zero(units);
    Eigen::VectorXd dc_carry = Eigen::VectorXd::Zero(units);
    for (std::size_t t = steps; t-- > 0;) {
        const Eigen::ArrayXd gi = trace.gi[t].array();
        const Eigen::ArrayXd gf = trace.gf[t].array();
        const Eigen::ArrayXd gg = trace.gg[t].array();
        const Eigen::ArrayXd go = trace.go[t].array();
        const Eigen::ArrayXd tanh_c = trace.tanh_c[t].array();

        // Through dropout and the ReLU on the emitted sequence.
        Eigen::ArrayXd da = d_out[t].array() * trace.mask[t].array();
        Eigen::ArrayXd dh = da * (trace.h[t].array() > 0.0).cast<double>() +
                            dh_carry.array();

        Eigen::ArrayXd dzo = dh * tanh_c * go * (1.0 - go);
        Eigen::ArrayXd dc = dh * go * (1.0 - tanh_c * tanh_c) + dc_carry.array();
        Eigen::ArrayXd dzi = dc * gg * gi * (1.0 - gi);
        Eigen::ArrayXd dzg = dc * gi * (1.0 - gg * gg);
        Eigen::ArrayXd c_prev = Eigen::ArrayXd::Zero(units);
        if (t > 0) c_prev = trace.c[t - 1].array();
        Eigen::ArrayXd dzf = dc * c_prev * gf * (1.0 - gf);
        dc_carry = (dc * gf).matrix();

        Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(units);
        if (t > 0) h_prev = trace.h[t - 1];
        const std::array<Eigen::ArrayXd, 4> dz = {dzi, dzf, dzg, dzo};
        dh_carry.setZero();
        Eigen::VectorXd dx = Eigen::VectorXd::Zero(trace.x[t].size());
        for (std::size_t g = 0; g < 4; ++g) {
            grad.w[g].noalias() += dz[g].matrix() * trace.x[t].transpose();
            grad.r[g].noalias() += dz[g].matrix() * h_prev.transpose();
            grad.b[g] += dz[g].matrix();
            dh_carry.noalias() += layer.r[g].transpose() * dz[g].matrix();
            dx.noalias() += layer.w[g].transpose() * dz[g].matrix();
        }
        d_inputs[t] = std::move(dx);
    }
    return d_inputs;
}

inline std::vector<Eigen::VectorXd> as_input_sequence(const std::vector<double>& window_scaled) {
    std::vector<Eigen::VectorXd> seq(window_scaled.size());
    for (std::size_t t = 0; t < window_scaled.size(); ++t) {
        seq[t] = Eigen::VectorXd::Constant(1, window_scaled[t]);
    }
    return seq;
}

}  // namespace detail

// Scaled-space forward pass; traces are only needed when training.
inline double forward_scaled(const LstmNetwork& net, const std::vector<double>& window_scaled,
                             bool train = false, detail::Rng* rng = nullptr,
                             std::array<LayerTrace, 2>* traces = nullptr) {
    auto seq = detail::as_input_sequence(window_scaled);
    auto out0 = detail::layer_forward(net.layers[0], seq, train, net.config.dropout, rng,
                                      traces ? &(*traces)[0] : nullptr);
    auto out1 = detail::layer_forward(net.layers[1], out0, train, net.config.dropout, rng,
                                      traces ? &(*traces)[1] : nullptr);
    return net.head_w.dot(out1.back()) + net.head_b;
}

struct LstmGradients {
    std::array<LstmLayer, 2> layers;
    Eigen::VectorXd head_w;
    double head_b = 0.0;

    explicit LstmGradients(const LstmNetwork& net) {
        layers[0].resize(net.config.units, 1);
        layers[1].resize(net.config.units, net.config.units);
        head_w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.config.units));
    }
};

/// Scaled squared error of one sample with dropout off.
inline double sample_loss(const LstmNetwork& net, const WindowSample& sample) {
    std::vector<double> scaled(sample.input.size());
    for (std::size_t t = 0; t < scaled.size(); ++t)
        scaled[t] = net.scaler.transform(sample.input[t]);
    double err = forward_scaled(net, scaled) - net.scaler.transform(sample.target);
    return err * err;
}

namespace detail {

// One forward/backward pass; returns the scaled squared error and fills the
// gradient of it with respect to every parameter.
inline double backprop_sample(const LstmNetwork& net, const std::vector<double>& window_scaled,
                              double target_scaled, bool train, Rng* rng,
                              LstmGradients& grad) {
    std::array<LayerTrace, 2> traces;
    double predicted = forward_scaled(net, window_scaled, train, rng, &traces);
    double err = predicted - target_scaled;

    std::size_t steps = window_scaled.size();
    Eigen::Index units = net.head_w.size();
    double dy = 2.0 * err;
    grad.head_w = dy * traces[1].out.back();
    grad.head_b = dy;

    std::vector<Eigen::VectorXd> d_out1(steps, Eigen::VectorXd::Zero(units));
    d_out1.back() = dy * net.head_w;
    auto d_out0 = layer_backward(net.layers[1], traces[1], d_out1, grad.layers[1]);
    layer_backward(net.layers[0], traces[0], d_out0, grad.layers[0]);
    return err * err;
}

}  // namespace detail

/// Gradient of sample_loss with respect to every parameter, dropout off.
inline LstmGradients sample_gradients(const LstmNetwork& net, const WindowSample& sample) {
    LstmGradients grad(net);
    std::vector<double> scaled(sample.input.size());
    for (std::size_t t = 0; t < scaled.size(); ++t)
        scaled[t] = net.scaler.transform(sample.input[t]);
    detail::backprop_sample(net, scaled, net.scaler.transform(sample.target), false,
                            nullptr, grad);
    return grad;
}

struct ParamBlock {
    double* data;
    std::size_t size;
};

/// Flat view over every trainable parameter in a fixed order: per layer,
/// per gate [input, forget, cell, output], W then R then b; then the head.
template <class NetworkLike>
inline std::vector<ParamBlock> parameter_blocks(NetworkLike& n) {
    std::vector<ParamBlock> out;
    for (auto& layer : n.layers)
        for (std::size_t g = 0; g < 4; ++g) {
            out.push_back({layer.w[g].data(), static_cast<std::size_t>(layer.w[g].size())});
            out.push_back({layer.r[g].data(), static_cast<std::size_t>(layer.r[g].size())});
            out.push_back({layer.b[g].data(), static_cast<std::size_t>(layer.b[g].size())});
        }
    out.push_back({n.head_w.data(), static_cast<std::size_t>(n.head_w.size())});
    out.push_back({&n.head_b, 1});
    return out;
}

/**
 * Trains with Adam, one update per window, windows visited in index order
 * with no shuffling; together with the seeded weight and dropout streams
 * this makes training bitwise reproducible.
 */
inline LstmNetwork lstm_train(const TrainConfig& config,
                              const std::vector<WindowSample>& samples) {
    if (samples.empty()) throw EmptyInput("no training windows");
    for (const WindowSample& s : samples)
        if (s.input.size() != config.window)
            throw WindowLengthMismatch("sample window does not match config");

    LstmNetwork net;
    net.config = config;
    double lo = samples[0].input[0], hi = samples[0].input[0];
    for (const WindowSample& s : samples) {
        for (double v : s.input) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        lo = std::min(lo, s.target);
        hi = std::max(hi, s.target);
    }
    if (hi <= lo) hi = lo + 1.0;  // degenerate constant input
    net.scaler = {lo, hi};

    detail::Rng rng(config.seed);
    net.layers[0].resize(config.units, 1);
    net.layers[1].resize(config.units, config.units);
    net.layers[0].init_random(rng);
    net.layers[1].init_random(rng);
    net.head_w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(config.units));
    double bound = 1.0 / std::sqrt(static_cast<double>(config.units));
    for (Eigen::Index i = 0; i < net.head_w.size(); ++i)
        net.head_w[i] = rng.uniform(-bound, bound);
    net.head_b = 0.0;

    // Pre-scale the dataset once.
    std::vector<std::vector<double>> inputs(samples.size());
    std::vector<double> targets(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        inputs[k].resize(config.window);
        for (std::size_t t = 0; t < config.window; ++t)
            inputs[k][t] = net.scaler.transform(samples[k].input[t]);
        targets[k] = net.scaler.transform(samples[k].target);
    }

    auto params = parameter_blocks(net);
    std::vector<std::vector<double>> m(params.size()), v(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
        m[p].assign(params[p].size, 0.0);
        v[p].assign(params[p].size, 0.0);
    }

    LstmGradients grad(net);
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        double loss_sum = 0.0;
        for (std::size_t k = 0; k < samples.size(); ++k) {
            for (auto& layer : grad.layers)
                for (std::size_t g = 0; g < 4; ++g) {
                    layer.w[g].setZero();
                    layer.r[g].setZero();
                    layer.b[g].setZero();
                }
            grad.head_w.setZero();
            grad.head_b = 0.0;

            loss_sum += detail::backprop_sample(net, inputs[k], targets[k],
                                                config.dropout > 0.0, &rng, grad);

            ++step;
            double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
            double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
            auto grads = parameter_blocks(grad);
            for (std::size_t p = 0; p < params.size(); ++p) {
                for (std::size_t i = 0; i < params[p].size; ++i) {
                    double g = grads[p].data[i];
                    m[p][i] = config.beta1 * m[p][i] + (1.0 - config.beta1) * g;
                    v[p][i] = config.beta2 * v[p][i] + (1.0 - config.beta2) * g * g;
                    double mhat = m[p][i] / bc1;
                    double vhat = v[p][i] / bc2;
                    params[p].data[i] -=
                        config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
                }
            }
        }
        double mean_loss = loss_sum / static_cast<double>(samples.size());
        if (!std::isfinite(mean_loss))
            throw NonFiniteLoss("training diverged in epoch " + std::to_string(epoch));
        net.epoch_loss.push_back(mean_loss);
    }

    // In-sample one-step errors with dropout off, in raw rupees.
    net.residuals.resize(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        double pred = std::max(net.scaler.inverse(forward_scaled(net, inputs[k])), 0.0);
        net.residuals[k] = samples[k].target - pred;
    }
    return net;
}

/// Scale, forward with dropout off, unscale, clamp at zero.
inline double predict_one(const LstmNetwork& net, const std::vector<double>& window) {
    if (window.size() != net.config.window)
        throw WindowLengthMismatch("expected a window of " +
                                   std::to_string(net.config.window) + " days, got " +
                                   std::to_string(window.size()));
    std::vector<double> scaled(window.size());
    for (std::size_t t = 0; t < window.size(); ++t)
        scaled[t] = net.scaler.transform(window[t]);
    return std::max(net.scaler.inverse(forward_scaled(net, scaled)), 0.0);
}

/// Recursive multi-step forecast: each prediction is appended to the window.
inline ForecastResult lstm_forecast(const LstmNetwork& net,
                                    const std::vector<double>& last_window,
                                    std::size_t horizon, std::size_t period = 14) {
    if (horizon < 1) throw Error("forecast horizon must be >= 1");
    if (last_window.size() != net.config.window)
        throw WindowLengthMismatch("expected a window of " +
                                   std::to_string(net.config.window) + " days, got " +
                                   std::to_string(last_window.size()));
    ForecastResult out;
    out.horizon = horizon;
    out.model_tag = "LSTM";
    std::vector<double> stds;
    if (!net.residuals.empty()) stds = seasonal_residual_std(net.residuals, period);
    std::size_t n = net.residuals.size();
    std::vector<double> window = last_window;
    for (std::size_t h = 1; h <= horizon; ++h) {
        double pred = predict_one(net, window);
        out.expected.push_back(pred);
        out.dispersion.push_back(stds.empty() ? 0.0 : stds[(n + h - 1) % period]);
        window.erase(window.begin());
        window.push_back(pred);
    }
    return out;
}

}  // namespace atmopt
