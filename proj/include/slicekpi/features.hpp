#pragma once

// Supervised windowing of slice telemetry.
//
// Feature row layout (F = 5 + 3V + L):
//   [one-hot slice x4, throughput, vnf_cpu x V, vnf_ram x V, vnf_sto x V, link_cap x L]
// A window holds rows for slots t-T+1..t; its target is the throughput at t+1.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "linalg.hpp"

namespace slicekpi {

/// Min-max scaling fitted on training windows. Constant features map to 0.5.
/// The target is scaled per slice: slice throughputs differ by an order of
/// magnitude, and one shared range leaves the small slices near zero.
struct Normalizer {
    Vector feature_min, feature_max;
    std::array<double, kSliceCount> target_min{}, target_max{};

    static double scale(double x, double lo, double hi) noexcept {
        return hi > lo ? (x - lo) / (hi - lo) : 0.5;
    }
    static double unscale(double z, double lo, double hi) noexcept {
        return hi > lo ? lo + z * (hi - lo) : lo;
    }

    double feature(std::size_t j, double x) const noexcept {
        return scale(x, feature_min[j], feature_max[j]);
    }
    double invert_feature(std::size_t j, double z) const noexcept {
        return unscale(z, feature_min[j], feature_max[j]);
    }
    double target(double y, SliceType s) const noexcept {
        return scale(y, target_min[index_of(s)], target_max[index_of(s)]);
    }
    double invert_target(double z, SliceType s) const noexcept {
        return unscale(z, target_min[index_of(s)], target_max[index_of(s)]);
    }

    bool fitted() const noexcept { return !feature_min.empty(); }

    bool operator==(const Normalizer&) const = default;
};

struct FeatureSpec {
    std::size_t window_len = 12;
    std::size_t vnf_count = 3;
    std::size_t link_count = 2;
    Normalizer normalizer;

    std::size_t feature_dim() const noexcept { return 5 + 3 * vnf_count + link_count; }

    bool operator==(const FeatureSpec&) const = default;
};

struct WindowSample {
    SliceType slice = SliceType::EMBB;
    std::uint64_t target_slot = 0;
    Matrix features;  // T x F, raw units
    double target = 0.0;
};

/// Normalized copy of a window, as consumed by the forecaster.
struct ScaledWindow {
    Matrix x;  // T x F in [0,1] for in-range inputs
    double y = 0.0;
    SliceType slice = SliceType::EMBB;
};

inline void feature_row(const TelemetrySample& s, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    out[index_of(s.slice)] = 1.0;
    std::size_t k = 4;
    out[k++] = s.throughput;
    for (const auto* vec : {&s.vnf_cpu, &s.vnf_ram, &s.vnf_sto, &s.link_cap})
        for (double x : *vec) out[k++] = x;
}

/// Builds N-T windows per selected slice (all slices when `slices` is empty).
inline std::vector<WindowSample> build_windows(const Dataset& ds, const FeatureSpec& spec,
                                               std::span<const SliceType> slices = {}) {
    const std::size_t T = spec.window_len;
    const std::size_t F = spec.feature_dim();
    if (T == 0) throw ConfigError("window length must be >= 1");
    if (ds.meta.vnf_count != spec.vnf_count || ds.meta.link_count != spec.link_count)
        throw DataError("dataset V/L does not match feature spec");

    std::vector<SliceType> chosen(slices.begin(), slices.end());
    if (chosen.empty())
        for (const auto& [s, _] : ds.series) chosen.push_back(s);

    std::vector<WindowSample> out;
    for (auto sl : chosen) {
        const auto& series = ds.at(sl);
        const std::size_t N = series.size();
        if (N < T + 1)
            throw DataError("insufficient data for slice " + std::string(to_string(sl)) + ": " +
                            std::to_string(N) + " samples, window needs " + std::to_string(T + 1));
        std::vector<double> rows(N * F);
        for (std::size_t i = 0; i < N; ++i) feature_row(series[i], {rows.data() + i * F, F});
        for (std::size_t start = 0; start + T < N; ++start) {
            WindowSample w;
            w.slice = sl;
            w.target_slot = series[start + T].slot;
            w.target = series[start + T].throughput;
            w.features = Matrix(T, F);
            std::copy_n(rows.begin() + static_cast<std::ptrdiff_t>(start * F), T * F,
                        w.features.data().begin());
            out.push_back(std::move(w));
        }
    }
    return out;
}

inline Normalizer fit_normalizer(std::span<const WindowSample> train) {
    if (train.empty()) throw DataError("cannot fit normalizer on an empty training set");
    const std::size_t F = train.front().features.cols();
    Normalizer n;
    n.feature_min.assign(F, std::numeric_limits<double>::infinity());
    n.feature_max.assign(F, -std::numeric_limits<double>::infinity());
    n.target_min.fill(std::numeric_limits<double>::infinity());
    n.target_max.fill(-std::numeric_limits<double>::infinity());
    double all_min = std::numeric_limits<double>::infinity(), all_max = -all_min;
    for (const auto& w : train) {
        if (w.features.cols() != F) throw DataError("inconsistent feature dimension");
        for (std::size_t r = 0; r < w.features.rows(); ++r)
            for (std::size_t j = 0; j < F; ++j) {
                n.feature_min[j] = std::min(n.feature_min[j], w.features(r, j));
                n.feature_max[j] = std::max(n.feature_max[j], w.features(r, j));
            }
        const auto k = index_of(w.slice);
        n.target_min[k] = std::min(n.target_min[k], w.target);
        n.target_max[k] = std::max(n.target_max[k], w.target);
        all_min = std::min(all_min, w.target);
        all_max = std::max(all_max, w.target);
    }
    for (std::size_t k = 0; k < kSliceCount; ++k)
        if (n.target_min[k] > n.target_max[k]) {  // slice absent from training: shared range
            n.target_min[k] = all_min;
            n.target_max[k] = all_max;
        }
    return n;
}

/// Eval values outside the training range are not clamped.
inline ScaledWindow normalize(const Normalizer& n, const WindowSample& w) {
    if (w.features.cols() != n.feature_min.size())
        throw DataError("window feature dimension does not match normalizer");
    ScaledWindow s{Matrix(w.features.rows(), w.features.cols()), n.target(w.target, w.slice), w.slice};
    for (std::size_t r = 0; r < w.features.rows(); ++r)
        for (std::size_t j = 0; j < w.features.cols(); ++j) s.x(r, j) = n.feature(j, w.features(r, j));
    return s;
}

inline std::vector<ScaledWindow> normalize(const Normalizer& n, std::span<const WindowSample> ws) {
    std::vector<ScaledWindow> out;
    out.reserve(ws.size());
    for (const auto& w : ws) out.push_back(normalize(n, w));
    return out;
}

inline Matrix invert(const Normalizer& n, const Matrix& scaled) {
    Matrix m(scaled.rows(), scaled.cols());
    for (std::size_t r = 0; r < scaled.rows(); ++r)
        for (std::size_t j = 0; j < scaled.cols(); ++j) m(r, j) = n.invert_feature(j, scaled(r, j));
    return m;
}

// ── day split ────────────────────────────────────────────────────────────────

struct DaySplit {
    Dataset train;
    Dataset eval;
    std::vector<std::string> warnings;
};

/// Day 1 -> train, day 2 -> eval; anything beyond day 2 is dropped with a warning.
inline DaySplit split_by_day(const Dataset& ds) {
    DaySplit out;
    out.train.meta = ds.meta;
    out.eval.meta = ds.meta;
    for (const auto& [sl, series] : ds.series) {
        if (series.size() < 2 * kSlotsPerDay)
            throw DataError("slice " + std::string(to_string(sl)) + " spans " +
                            std::to_string(series.size()) + " slots; need at least 2 days (" +
                            std::to_string(2 * kSlotsPerDay) + ")");
        const auto day = static_cast<std::ptrdiff_t>(kSlotsPerDay);
        out.train.series[sl].assign(series.begin(), series.begin() + day);
        out.eval.series[sl].assign(series.begin() + day, series.begin() + 2 * day);
        if (series.size() > 2 * kSlotsPerDay)
            out.warnings.push_back("slice " + std::string(to_string(sl)) + ": ignoring " +
                                   std::to_string(series.size() - 2 * kSlotsPerDay) +
                                   " slots beyond day 2");
    }
    return out;
}

// ── JSON ─────────────────────────────────────────────────────────────────────

inline nlohmann::json to_json(const FeatureSpec& s) {
    return {{"window_len", s.window_len},
            {"vnf_count", s.vnf_count},
            {"link_count", s.link_count},
            {"feature_min", s.normalizer.feature_min},
            {"feature_max", s.normalizer.feature_max},
            {"target_min", s.normalizer.target_min},
            {"target_max", s.normalizer.target_max}};
}

inline FeatureSpec feature_spec_from_json(const nlohmann::json& j) {
    FeatureSpec s;
    try {
        s.window_len = j.at("window_len").get<std::size_t>();
        s.vnf_count = j.at("vnf_count").get<std::size_t>();
        s.link_count = j.at("link_count").get<std::size_t>();
        s.normalizer.feature_min = j.at("feature_min").get<Vector>();
        s.normalizer.feature_max = j.at("feature_max").get<Vector>();
        s.normalizer.target_min = j.at("target_min").get<std::array<double, kSliceCount>>();
        s.normalizer.target_max = j.at("target_max").get<std::array<double, kSliceCount>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("feature_spec: ") + e.what());
    }
    if (s.normalizer.feature_min.size() != s.feature_dim() ||
        s.normalizer.feature_max.size() != s.feature_dim())
        throw DataError("feature_spec: normalization statistics do not match feature_dim");
    for (std::size_t j2 = 0; j2 < s.feature_dim(); ++j2)
        if (s.normalizer.feature_min[j2] > s.normalizer.feature_max[j2])
            throw DataError("feature_spec: min > max for feature " + std::to_string(j2));
    for (std::size_t k = 0; k < kSliceCount; ++k)
        if (s.normalizer.target_min[k] > s.normalizer.target_max[k])
            throw DataError("feature_spec: target_min > target_max for slice " +
                            std::string(to_string(kAllSlices[k])));
    return s;
}

}  // namespace slicekpi
