#pragma once

// Next-slot throughput forecaster: LSTM -> Flatten -> Swish -> Dense(1).
//
// Per step (gates i, f, o sigmoid; candidate g tanh):
//   z_k = W_k x + U_k h + b_k
//   c'  = f * c + i * g
//   h'  = o * tanh(c')
// All T hidden states are concatenated (t-major) before Swish and the dense
// output. Training minimizes MSE on the normalized target with Adam and
// global-norm gradient clipping.

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "features.hpp"
#include "linalg.hpp"
#include "metrics.hpp"
#include "rng.hpp"

namespace slicekpi {

inline double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double swish(double x) noexcept { return x * sigmoid(x); }

inline double swish_grad(double x) noexcept {
    const double s = sigmoid(x);
    return s + x * s * (1.0 - s);
}

// ── parameters ───────────────────────────────────────────────────────────────

enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kOutputGate = 2, kCandidate = 3 };
inline constexpr std::array<const char*, 4> kGateNames = {"input", "forget", "output", "candidate"};

struct GateParams {
    Matrix input;      // H x F
    Matrix recurrent;  // H x H
    Vector bias;       // H

    bool operator==(const GateParams&) const = default;
};

struct LstmParams {
    std::size_t hidden = 0;
    std::size_t input_dim = 0;
    std::array<GateParams, 4> gates;

    static LstmParams zeros(std::size_t hidden, std::size_t input_dim) {
        LstmParams p;
        p.hidden = hidden;
        p.input_dim = input_dim;
        for (auto& g : p.gates) {
            g.input = Matrix(hidden, input_dim);
            g.recurrent = Matrix(hidden, hidden);
            g.bias.assign(hidden, 0.0);
        }
        return p;
    }

    bool operator==(const LstmParams&) const = default;
};

struct TrainingMeta {
    std::size_t epochs_run = 0;
    double final_train_mape = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0;
};

struct ForecastModel {
    LstmParams lstm;
    Vector dense_weights;  // T*H
    double dense_bias = 0.0;
    FeatureSpec spec;
    TrainingMeta meta;

    std::size_t window_len() const noexcept { return spec.window_len; }

    static ForecastModel zeros(const FeatureSpec& spec, std::size_t hidden) {
        ForecastModel m;
        m.spec = spec;
        m.lstm = LstmParams::zeros(hidden, spec.feature_dim());
        m.dense_weights.assign(spec.window_len * hidden, 0.0);
        return m;
    }
};

/// Visits every trainable scalar in a fixed order (gates, then dense).
template <class Model, class Fn>
void for_each_param(Model& m, Fn&& fn) {
    for (auto& g : m.lstm.gates) {
        for (auto& v : g.input.data()) fn(v);
        for (auto& v : g.recurrent.data()) fn(v);
        for (auto& v : g.bias) fn(v);
    }
    for (auto& v : m.dense_weights) fn(v);
    fn(m.dense_bias);
}

inline Vector flatten_params(const ForecastModel& m) {
    Vector out;
    for_each_param(m, [&](const double& v) { out.push_back(v); });
    return out;
}

inline void assign_params(ForecastModel& m, std::span<const double> flat) {
    std::size_t i = 0;
    for_each_param(m, [&](double& v) { v = flat[i++]; });
}

inline void check_shapes(const ForecastModel& m) {
    const std::size_t H = m.lstm.hidden, F = m.lstm.input_dim;
    if (F != m.spec.feature_dim())
        throw DataError("feature_dim " + std::to_string(F) + " does not match feature spec (" +
                        std::to_string(m.spec.feature_dim()) + ")");
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& g = m.lstm.gates[k];
        if (g.input.rows() != H || g.input.cols() != F || g.recurrent.rows() != H ||
            g.recurrent.cols() != H || g.bias.size() != H)
            throw DataError(std::string("gate_weights.") + kGateNames[k] + ": shape mismatch");
    }
    if (m.dense_weights.size() != m.spec.window_len * H)
        throw DataError("dense_weights: dimension " + std::to_string(m.dense_weights.size()) +
                        " != window_len*hidden_size (" + std::to_string(m.spec.window_len * H) + ")");
}

// ── forward ──────────────────────────────────────────────────────────────────

struct CellState {
    Vector h, c;
};

struct CellTrace {
    Vector i, f, o, g, c, tanh_c, h;
};

/// One LSTM step. Writes gate activations to `trace` when given.
inline CellState lstm_cell_forward(std::span<const double> x, std::span<const double> h,
                                   std::span<const double> c, const LstmParams& p,
                                   CellTrace* trace = nullptr) {
    const std::size_t H = p.hidden, F = p.input_dim;
    if (x.size() != F || h.size() != H || c.size() != H)
        throw DataError("lstm_cell_forward: shape mismatch (x " + std::to_string(x.size()) + "/" +
                        std::to_string(F) + ", h " + std::to_string(h.size()) + "/" +
                        std::to_string(H) + ")");
    std::array<Vector, 4> act;
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& gp = p.gates[k];
        act[k].resize(H);
        for (std::size_t j = 0; j < H; ++j) {
            double z = gp.bias[j] + dot(gp.input.row(j), x) + dot(gp.recurrent.row(j), h);
            act[k][j] = k == kCandidate ? std::tanh(z) : sigmoid(z);
        }
    }
    CellState out{Vector(H), Vector(H)};
    Vector tc(H);
    for (std::size_t j = 0; j < H; ++j) {
        out.c[j] = act[kForgetGate][j] * c[j] + act[kInputGate][j] * act[kCandidate][j];
        tc[j] = std::tanh(out.c[j]);
        out.h[j] = act[kOutputGate][j] * tc[j];
    }
    if (trace) {
        trace->i = std::move(act[kInputGate]);
        trace->f = std::move(act[kForgetGate]);
        trace->o = std::move(act[kOutputGate]);
        trace->g = std::move(act[kCandidate]);
        trace->c = out.c;
        trace->tanh_c = std::move(tc);
        trace->h = out.h;
    }
    return out;
}

struct ForwardTrace {
    std::vector<CellTrace> steps;
    Vector flat;  // T*H pre-activation
    double output = 0.0;
};

/// Normalized-space forward pass over a scaled window.
inline double forward_scaled(const ForecastModel& m, const Matrix& x, ForwardTrace* trace = nullptr) {
    const std::size_t H = m.lstm.hidden, T = m.spec.window_len;
    if (x.rows() != T || x.cols() != m.lstm.input_dim)
        throw DataError("forward: window is " + std::to_string(x.rows()) + "x" +
                        std::to_string(x.cols()) + ", model expects " + std::to_string(T) + "x" +
                        std::to_string(m.lstm.input_dim));
    if (m.dense_weights.size() != T * H) throw DataError("forward: dense dimension != T*H");

    CellState st{Vector(H, 0.0), Vector(H, 0.0)};
    double out = m.dense_bias;
    if (trace) {
        trace->steps.assign(T, {});
        trace->flat.assign(T * H, 0.0);
    }
    for (std::size_t t = 0; t < T; ++t) {
        st = lstm_cell_forward(x.row(t), st.h, st.c, m.lstm, trace ? &trace->steps[t] : nullptr);
        for (std::size_t j = 0; j < H; ++j) {
            out += m.dense_weights[t * H + j] * swish(st.h[j]);
            if (trace) trace->flat[t * H + j] = st.h[j];
        }
    }
    if (trace) trace->output = out;
    return out;
}

/// Predicted throughput in Mb/s.
inline double forward(const ForecastModel& m, const WindowSample& w) {
    const auto s = normalize(m.spec.normalizer, w);
    return m.spec.normalizer.invert_target(forward_scaled(m, s.x), w.slice);
}

// ── backward ─────────────────────────────────────────────────────────────────

/// Adds d(loss)/d(params) for loss = weight * (y - target)^2 into `grad`.
/// Returns the unweighted squared error.
inline double accumulate_gradient(const ForecastModel& m, const ScaledWindow& w, double weight,
                                  ForecastModel& grad) {
    const std::size_t H = m.lstm.hidden, F = m.lstm.input_dim, T = m.spec.window_len;
    ForwardTrace tr;
    const double y = forward_scaled(m, w.x, &tr);
    const double err = y - w.y;
    const double dy = 2.0 * weight * err;

    grad.dense_bias += dy;
    Vector dh_next(H, 0.0), dc_next(H, 0.0);
    std::array<Vector, 4> dz;
    for (auto& v : dz) v.resize(H);
    const Vector zeros(H, 0.0);

    for (std::size_t t = T; t-- > 0;) {
        const auto& s = tr.steps[t];
        const auto& c_prev = t ? tr.steps[t - 1].c : zeros;
        const auto& h_prev = t ? tr.steps[t - 1].h : zeros;
        for (std::size_t j = 0; j < H; ++j) {
            const double pre = tr.flat[t * H + j];
            grad.dense_weights[t * H + j] += dy * swish(pre);
            const double dh = dy * m.dense_weights[t * H + j] * swish_grad(pre) + dh_next[j];
            const double d_o = dh * s.tanh_c[j];
            const double dc = dc_next[j] + dh * s.o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
            dz[kInputGate][j] = dc * s.g[j] * s.i[j] * (1.0 - s.i[j]);
            dz[kForgetGate][j] = dc * c_prev[j] * s.f[j] * (1.0 - s.f[j]);
            dz[kOutputGate][j] = d_o * s.o[j] * (1.0 - s.o[j]);
            dz[kCandidate][j] = dc * s.i[j] * (1.0 - s.g[j] * s.g[j]);
            dc_next[j] = dc * s.f[j];
        }
        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        const auto x = w.x.row(t);
        for (std::size_t k = 0; k < 4; ++k) {
            auto& gg = grad.lstm.gates[k];
            const auto& gp = m.lstm.gates[k];
            for (std::size_t j = 0; j < H; ++j) {
                const double d = dz[k][j];
                if (d == 0.0) continue;
                gg.bias[j] += d;
                auto gin = gg.input.row(j);
                for (std::size_t q = 0; q < F; ++q) gin[q] += d * x[q];
                auto grec = gg.recurrent.row(j);
                const auto rec = gp.recurrent.row(j);
                for (std::size_t q = 0; q < H; ++q) {
                    grec[q] += d * h_prev[q];
                    dh_next[q] += d * rec[q];
                }
            }
        }
    }
    return err * err;
}

// ── gradient check ───────────────────────────────────────────────────────────

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
    Vector analytic;
    Vector numeric;
};

/// Relative error |a - n| / max(|a|, |n|, 1e-6) for every parameter of the
/// single-window loss (y - target)^2, against central differences.
inline GradientCheckResult gradient_check(const ForecastModel& m, const ScaledWindow& w,
                                          double step = 1e-5) {
    ForecastModel g = ForecastModel::zeros(m.spec, m.lstm.hidden);
    accumulate_gradient(m, w, 1.0, g);
    GradientCheckResult r;
    r.analytic = flatten_params(g);

    ForecastModel probe = m;
    Vector flat = flatten_params(m);
    r.numeric.resize(flat.size());
    const auto loss = [&](const Vector& p) {
        assign_params(probe, p);
        const double e = forward_scaled(probe, w.x) - w.y;
        return e * e;
    };
    for (std::size_t k = 0; k < flat.size(); ++k) {
        const double orig = flat[k];
        flat[k] = orig + step;
        const double lp = loss(flat);
        flat[k] = orig - step;
        const double lm = loss(flat);
        flat[k] = orig;
        r.numeric[k] = (lp - lm) / (2.0 * step);
        const double a = r.analytic[k], n = r.numeric[k];
        const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
        if (rel > r.max_relative_error) {
            r.max_relative_error = rel;
            r.worst_index = k;
        }
    }
    return r;
}

// ── training ─────────────────────────────────────────────────────────────────

struct TrainConfig {
    std::size_t epochs = 20;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t batch_size = 32;
    std::size_t hidden = 32;
    std::uint64_t seed = 1;
    double clip_norm = 5.0;
};

inline void validate(const TrainConfig& c) {
    if (c.epochs < 1) throw ConfigError("train 'epochs' must be >= 1");
    if (!(c.learning_rate > 0.0)) throw ConfigError("train 'learning_rate' must be > 0");
    if (!(c.beta1 > 0.0 && c.beta1 < 1.0)) throw ConfigError("train 'beta1' must be in (0,1)");
    if (!(c.beta2 > 0.0 && c.beta2 < 1.0)) throw ConfigError("train 'beta2' must be in (0,1)");
    if (!(c.adam_eps > 0.0)) throw ConfigError("train 'adam_eps' must be > 0");
    if (c.batch_size < 1) throw ConfigError("train 'batch_size' must be >= 1");
    if (c.hidden < 1) throw ConfigError("train 'hidden' must be >= 1");
    if (!(c.clip_norm > 0.0)) throw ConfigError("train 'clip_norm' must be > 0");
}

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;  // MSE, normalized target, after the epoch
    double train_mape = 0.0;
    double eval_mape = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    ForecastModel model;
    std::vector<EpochStats> history;
};

/// Seeded init: U(-1/sqrt(H), 1/sqrt(H)) for the LSTM, forget bias 1,
/// U(-1/sqrt(T*H), 1/sqrt(T*H)) for the dense weights, dense bias 0.
inline ForecastModel init_model(const FeatureSpec& spec, std::size_t hidden, std::uint64_t seed) {
    ForecastModel m = ForecastModel::zeros(spec, hidden);
    SplitMix64 rng(seed);
    const double a = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (std::size_t k = 0; k < 4; ++k) {
        auto& g = m.lstm.gates[k];
        for (auto& v : g.input.data()) v = rng.uniform(-a, a);
        for (auto& v : g.recurrent.data()) v = rng.uniform(-a, a);
        for (auto& v : g.bias) v = k == kForgetGate ? 1.0 : rng.uniform(-a, a);
    }
    const double b = 1.0 / std::sqrt(static_cast<double>(spec.window_len * hidden));
    for (auto& v : m.dense_weights) v = rng.uniform(-b, b);
    m.meta.seed = seed;
    return m;
}

namespace detail {

inline double mape_or_nan(const ForecastModel& m, std::span<const ScaledWindow> ws,
                          std::span<const double> raw_targets) {
    if (ws.empty()) return std::numeric_limits<double>::quiet_NaN();
    Vector pred(ws.size());
    for (std::size_t i = 0; i < ws.size(); ++i)
        pred[i] = m.spec.normalizer.invert_target(forward_scaled(m, ws[i].x), ws[i].slice);
    try {
        return mape(raw_targets, pred).percent;
    } catch (const DataError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace detail

/// Continues training from `initial`. Its spec must already carry the
/// normalization statistics used for `train` and `eval`.
inline TrainResult train_from(ForecastModel initial, std::span<const WindowSample> train,
                              std::span<const WindowSample> eval, const TrainConfig& cfg) {
    validate(cfg);
    if (train.empty()) throw DataError("training needs at least one window");
    check_shapes(initial);

    const auto& norm = initial.spec.normalizer;
    const auto tr = normalize(norm, train);
    const auto ev = normalize(norm, eval);
    Vector tr_raw, ev_raw;
    for (const auto& w : train) tr_raw.push_back(w.target);
    for (const auto& w : eval) ev_raw.push_back(w.target);

    TrainResult res{std::move(initial), {}};
    auto& m = res.model;
    Vector params = flatten_params(m);
    Vector m1(params.size(), 0.0), m2(params.size(), 0.0);
    std::vector<std::size_t> order(tr.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    SplitMix64 rng(cfg.seed ^ 0x5DEECE66DULL);
    std::uint64_t step = 0;

    const ForecastModel grad_zero = ForecastModel::zeros(m.spec, m.lstm.hidden);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const double wgt = 1.0 / static_cast<double>(end - start);
            ForecastModel grad = grad_zero;
            for (std::size_t b = start; b < end; ++b) accumulate_gradient(m, tr[order[b]], wgt, grad);

            Vector g = flatten_params(grad);
            double norm2 = 0.0;
            for (double v : g) norm2 += v * v;
            const double gn = std::sqrt(norm2);
            if (!std::isfinite(gn))
                throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                                     ": non-finite gradient");
            const double clip = gn > cfg.clip_norm ? cfg.clip_norm / gn : 1.0;

            ++step;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            for (std::size_t k = 0; k < params.size(); ++k) {
                const double gk = g[k] * clip;
                m1[k] = cfg.beta1 * m1[k] + (1.0 - cfg.beta1) * gk;
                m2[k] = cfg.beta2 * m2[k] + (1.0 - cfg.beta2) * gk * gk;
                params[k] -= cfg.learning_rate * (m1[k] / bc1) / (std::sqrt(m2[k] / bc2) + cfg.adam_eps);
            }
            assign_params(m, params);
        }

        EpochStats st;
        st.epoch = epoch;
        double sse = 0.0;
        for (const auto& w : tr) {
            const double e = forward_scaled(m, w.x) - w.y;
            sse += e * e;
        }
        st.train_loss = sse / static_cast<double>(tr.size());
        if (!std::isfinite(st.train_loss))
            throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                                 ": non-finite loss");
        st.train_mape = detail::mape_or_nan(m, tr, tr_raw);
        st.eval_mape = detail::mape_or_nan(m, ev, ev_raw);
        res.history.push_back(st);
    }
    m.meta.epochs_run += cfg.epochs;
    m.meta.final_train_mape = res.history.back().train_mape;
    m.meta.seed = cfg.seed;
    return res;
}

/// Fits normalization on `train`, initializes from cfg.seed and trains.
inline TrainResult train(std::span<const WindowSample> train, std::span<const WindowSample> eval,
                         FeatureSpec spec, const TrainConfig& cfg) {
    validate(cfg);
    if (train.empty()) throw DataError("training needs at least one window");
    spec.normalizer = fit_normalizer(train);
    return train_from(init_model(spec, cfg.hidden, cfg.seed), train, eval, cfg);
}

// ── persistence ──────────────────────────────────────────────────────────────

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json matrix_json(const Matrix& m) {
    auto rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        rows.push_back(Vector(row.begin(), row.end()));
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols,
                               const std::string& field) {
    if (!j.is_array() || j.size() != rows)
        throw DataError(field + ": expected " + std::to_string(rows) + " rows");
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto v = j[r].get<Vector>();
        if (v.size() != cols)
            throw DataError(field + ": row " + std::to_string(r) + " has " +
                            std::to_string(v.size()) + " columns, expected " + std::to_string(cols));
        std::copy(v.begin(), v.end(), m.row(r).begin());
    }
    return m;
}

inline nlohmann::json nan_as_null(double x) {
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace detail

inline nlohmann::json to_json(const ForecastModel& m) {
    nlohmann::json gates = nlohmann::json::object();
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& g = m.lstm.gates[k];
        gates[kGateNames[k]] = {{"input_weights", detail::matrix_json(g.input)},
                                {"recurrent_weights", detail::matrix_json(g.recurrent)},
                                {"bias", g.bias}};
    }
    return {{"format_version", kModelFormatVersion},
            {"hidden_size", m.lstm.hidden},
            {"window_len", m.spec.window_len},
            {"feature_dim", m.lstm.input_dim},
            {"gate_weights", gates},
            {"dense_weights", m.dense_weights},
            {"dense_bias", m.dense_bias},
            {"feature_spec", to_json(m.spec)},
            {"metadata",
             {{"epochs_run", m.meta.epochs_run},
              {"final_train_mape", detail::nan_as_null(m.meta.final_train_mape)},
              {"seed", m.meta.seed}}}};
}

inline ForecastModel model_from_json(const nlohmann::json& j) {
    ForecastModel m;
    try {
        const int version = j.at("format_version").get<int>();
        if (version != kModelFormatVersion)
            throw DataError("format_version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kModelFormatVersion) + ")");
        const auto H = j.at("hidden_size").get<std::size_t>();
        const auto T = j.at("window_len").get<std::size_t>();
        const auto F = j.at("feature_dim").get<std::size_t>();
        m.spec = feature_spec_from_json(j.at("feature_spec"));
        if (m.spec.window_len != T) throw DataError("window_len disagrees with feature_spec");
        if (m.spec.feature_dim() != F) throw DataError("feature_dim disagrees with feature_spec");
        m.lstm.hidden = H;
        m.lstm.input_dim = F;
        const auto& gates = j.at("gate_weights");
        for (std::size_t k = 0; k < 4; ++k) {
            const std::string field = std::string("gate_weights.") + kGateNames[k];
            const auto& gj = gates.at(kGateNames[k]);
            auto& g = m.lstm.gates[k];
            g.input = detail::matrix_from_json(gj.at("input_weights"), H, F, field + ".input_weights");
            g.recurrent =
                detail::matrix_from_json(gj.at("recurrent_weights"), H, H, field + ".recurrent_weights");
            g.bias = gj.at("bias").get<Vector>();
        }
        m.dense_weights = j.at("dense_weights").get<Vector>();
        m.dense_bias = j.at("dense_bias").get<double>();
        const auto& md = j.at("metadata");
        m.meta.epochs_run = md.at("epochs_run").get<std::size_t>();
        m.meta.final_train_mape = md.at("final_train_mape").is_null()
                                      ? std::numeric_limits<double>::quiet_NaN()
                                      : md.at("final_train_mape").get<double>();
        m.meta.seed = md.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model file: ") + e.what());
    }
    check_shapes(m);
    return m;
}

inline void save_model(const ForecastModel& m, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + path.string());
    os << to_json(m).dump(1) << '\n';
}

inline ForecastModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open model file: " + path.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file " + path.string() + ": parse error: " + e.what());
    }
    return model_from_json(j);
}

}  // namespace slicekpi
