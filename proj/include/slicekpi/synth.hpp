#pragma once

// Parametric diurnal slice-telemetry generator.
//
// For slice i and slot t (hour-of-day h):
//   profile(h) = 0.30 + A1*exp(-((h-c1)/w1)^2) + A2*exp(-((h-c2)/w2)^2)
//   demand     = ue_i * mean_demand_i * profile(h) * (1 + noise*eta) * burst
//   util       = min(demand / capacity_i, 0.99),  throughput = util * capacity_i
//   loads      = clamp(alpha_r * util + 0.02*eta', 0, 1)   alpha = {0.9, 0.7, 0.3}
//   links      = clamp(util + 0.02*eta'', 0, 1)
//   delay      = d0 + d1 * util / (1 - util)
//   loss       = loss_max / (1 + exp(-(util - theta) / tau))
//   jitter     = j0 + j1 * |delay_t - delay_{t-1}|
// Every numeric field is rounded to 9 significant digits.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <utility>
#include <string>

#include <json.hpp>

#include "core.hpp"
#include "rng.hpp"

namespace slicekpi {

struct SliceLoadProfile {
    std::uint64_t ue_count = 0;
    double mean_demand_mbps = 0.0;  // per UE
    double capacity_mbps = 1.0;

    bool operator==(const SliceLoadProfile&) const = default;
};

struct GeneratorConfig {
    std::array<SliceLoadProfile, kSliceCount> slices{};

    double peak1_amplitude = 0.45;
    double peak1_center_h = 12.0;
    double peak1_width_h = 3.5;
    double peak2_amplitude = 0.55;
    double peak2_center_h = 19.5;
    double peak2_width_h = 2.5;

    double noise_level = 0.10;
    double burst_probability = 0.02;
    double burst_multiplier = 1.5;

    double delay_base_ms = 2.0;
    double delay_scale_ms = 1.0;
    double loss_max = 0.1;
    double loss_midpoint = 0.8;
    double loss_steepness = 0.05;
    double jitter_base_ms = 0.1;
    double jitter_scale = 0.5;

    std::size_t vnf_count = 3;
    std::size_t link_count = 2;
    std::uint64_t days = 2;
    std::uint64_t seed = 1;

    bool operator==(const GeneratorConfig&) const = default;
};

inline constexpr double kUtilCap = 0.99;
inline constexpr double kLoadNoise = 0.02;
inline constexpr std::array<double, 3> kVnfLoadFactor = {0.9, 0.7, 0.3};  // cpu, ram, sto

inline GeneratorConfig default_config() {
    GeneratorConfig c;
    c.slices[index_of(SliceType::EMBB)] = {24322, 0.05, 1600.0};
    c.slices[index_of(SliceType::URLLC)] = {7304, 0.02, 200.0};
    c.slices[index_of(SliceType::MMTC)] = {6283, 0.01, 90.0};
    c.slices[index_of(SliceType::VOIP)] = {2684, 0.03, 120.0};
    return c;
}

inline void validate(const GeneratorConfig& c) {
    const auto fail = [](const std::string& key, const std::string& why) {
        throw ConfigError("generator config '" + key + "': " + why);
    };
    if (c.days == 0) fail("days", "must be >= 1");
    for (auto s : kAllSlices) {
        const auto& p = c.slices[index_of(s)];
        const std::string key = "slices." + std::string(to_string(s));
        if (p.ue_count == 0) fail(key + ".ue_count", "must be > 0");
        if (!(p.capacity_mbps > 0.0) || !std::isfinite(p.capacity_mbps))
            fail(key + ".capacity_mbps", "must be > 0");
        if (!(p.mean_demand_mbps >= 0.0) || !std::isfinite(p.mean_demand_mbps))
            fail(key + ".mean_demand_mbps", "must be >= 0");
    }
    if (!(c.noise_level >= 0.0 && c.noise_level < 1.0)) fail("noise_level", "must be in [0,1)");
    if (!(c.burst_probability >= 0.0 && c.burst_probability <= 1.0))
        fail("burst_probability", "must be in [0,1]");
    if (!(c.burst_multiplier > 0.0)) fail("burst_multiplier", "must be > 0");
    if (!(c.peak1_width_h > 0.0)) fail("profile.peak1_width_h", "must be > 0");
    if (!(c.peak2_width_h > 0.0)) fail("profile.peak2_width_h", "must be > 0");
    if (!(c.peak1_amplitude >= 0.0)) fail("profile.peak1_amplitude", "must be >= 0");
    if (!(c.peak2_amplitude >= 0.0)) fail("profile.peak2_amplitude", "must be >= 0");
    if (!(c.delay_base_ms > 0.0)) fail("kpi.delay_base_ms", "must be > 0");
    if (!(c.delay_scale_ms > 0.0)) fail("kpi.delay_scale_ms", "must be > 0");
    if (!(c.loss_max > 0.0 && c.loss_max <= 1.0)) fail("kpi.loss_max", "must be in (0,1]");
    if (!(c.loss_midpoint > 0.0 && c.loss_midpoint < 1.0)) fail("kpi.loss_midpoint", "must be in (0,1)");
    if (!(c.loss_steepness > 0.0)) fail("kpi.loss_steepness", "must be > 0");
    if (!(c.jitter_base_ms > 0.0)) fail("kpi.jitter_base_ms", "must be > 0");
    if (!(c.jitter_scale > 0.0)) fail("kpi.jitter_scale", "must be > 0");
}

// ── closed-form curves ───────────────────────────────────────────────────────

inline double diurnal_profile(double hour, const GeneratorConfig& c) noexcept {
    const auto bump = [](double h, double a, double ctr, double w) {
        const double z = (h - ctr) / w;
        return a * std::exp(-z * z);
    };
    return 0.30 + bump(hour, c.peak1_amplitude, c.peak1_center_h, c.peak1_width_h) +
           bump(hour, c.peak2_amplitude, c.peak2_center_h, c.peak2_width_h);
}

inline double delay_curve(double util, const GeneratorConfig& c) noexcept {
    return c.delay_base_ms + c.delay_scale_ms * util / (1.0 - util);
}

inline double loss_curve(double util, const GeneratorConfig& c) noexcept {
    return c.loss_max / (1.0 + std::exp(-(util - c.loss_midpoint) / c.loss_steepness));
}

inline double hour_of_slot(std::uint64_t slot) noexcept {
    return static_cast<double>(slot % kSlotsPerDay) * (kSlotSeconds / 3600.0);
}

/// Rounds to 9 significant digits so CSV output stays compact and exact.
inline double round9(double x) {
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 9);
    if (ec != std::errc{}) return x;
    double y = x;
    std::from_chars(buf, end, y);
    return y;
}

// ── JSON ─────────────────────────────────────────────────────────────────────

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                           const std::string& where) {
    if (!j.is_object()) throw ConfigError("config '" + where + "': expected an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok)
            throw ConfigError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
    }
}

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config key '" + (where.empty() ? std::string(key) : where + "." + key) +
                          "' has the wrong type");
    }
}

}  // namespace detail

inline nlohmann::json to_json(const GeneratorConfig& c) {
    nlohmann::json slices = nlohmann::json::object();
    for (auto s : kAllSlices) {
        const auto& p = c.slices[index_of(s)];
        slices[std::string(to_string(s))] = {{"ue_count", p.ue_count},
                                             {"mean_demand_mbps", p.mean_demand_mbps},
                                             {"capacity_mbps", p.capacity_mbps}};
    }
    return {
        {"slices", slices},
        {"profile",
         {{"peak1_amplitude", c.peak1_amplitude}, {"peak1_center_h", c.peak1_center_h},
          {"peak1_width_h", c.peak1_width_h}, {"peak2_amplitude", c.peak2_amplitude},
          {"peak2_center_h", c.peak2_center_h}, {"peak2_width_h", c.peak2_width_h}}},
        {"noise_level", c.noise_level},
        {"burst_probability", c.burst_probability},
        {"burst_multiplier", c.burst_multiplier},
        {"kpi",
         {{"delay_base_ms", c.delay_base_ms}, {"delay_scale_ms", c.delay_scale_ms},
          {"loss_max", c.loss_max}, {"loss_midpoint", c.loss_midpoint},
          {"loss_steepness", c.loss_steepness}, {"jitter_base_ms", c.jitter_base_ms},
          {"jitter_scale", c.jitter_scale}}},
        {"vnf_count", c.vnf_count},
        {"link_count", c.link_count},
        {"days", c.days},
        {"seed", c.seed},
    };
}

/// Every key optional (defaults from default_config()); unknown keys rejected.
inline GeneratorConfig generator_config_from_json(const nlohmann::json& j,
                                                  const std::string& where = "") {
    using detail::read_opt;
    GeneratorConfig c = default_config();
    const auto sub = [&](const char* k) { return where.empty() ? std::string(k) : where + "." + k; };
    detail::reject_unknown(j,
                           {"slices", "profile", "noise_level", "burst_probability",
                            "burst_multiplier", "kpi", "vnf_count", "link_count", "days", "seed"},
                           where);
    if (auto it = j.find("slices"); it != j.end()) {
        detail::reject_unknown(*it, {"eMBB", "uRLLC", "mMTC", "VoIP"}, sub("slices"));
        for (const auto& [label, body] : it->items()) {
            auto& p = c.slices[index_of(parse_slice(label))];
            const std::string w = sub("slices") + "." + label;
            detail::reject_unknown(body, {"ue_count", "mean_demand_mbps", "capacity_mbps"}, w);
            read_opt(body, "ue_count", p.ue_count, w);
            read_opt(body, "mean_demand_mbps", p.mean_demand_mbps, w);
            read_opt(body, "capacity_mbps", p.capacity_mbps, w);
        }
    }
    if (auto it = j.find("profile"); it != j.end()) {
        const std::string w = sub("profile");
        detail::reject_unknown(*it,
                               {"peak1_amplitude", "peak1_center_h", "peak1_width_h",
                                "peak2_amplitude", "peak2_center_h", "peak2_width_h"},
                               w);
        read_opt(*it, "peak1_amplitude", c.peak1_amplitude, w);
        read_opt(*it, "peak1_center_h", c.peak1_center_h, w);
        read_opt(*it, "peak1_width_h", c.peak1_width_h, w);
        read_opt(*it, "peak2_amplitude", c.peak2_amplitude, w);
        read_opt(*it, "peak2_center_h", c.peak2_center_h, w);
        read_opt(*it, "peak2_width_h", c.peak2_width_h, w);
    }
    if (auto it = j.find("kpi"); it != j.end()) {
        const std::string w = sub("kpi");
        detail::reject_unknown(*it,
                               {"delay_base_ms", "delay_scale_ms", "loss_max", "loss_midpoint",
                                "loss_steepness", "jitter_base_ms", "jitter_scale"},
                               w);
        read_opt(*it, "delay_base_ms", c.delay_base_ms, w);
        read_opt(*it, "delay_scale_ms", c.delay_scale_ms, w);
        read_opt(*it, "loss_max", c.loss_max, w);
        read_opt(*it, "loss_midpoint", c.loss_midpoint, w);
        read_opt(*it, "loss_steepness", c.loss_steepness, w);
        read_opt(*it, "jitter_base_ms", c.jitter_base_ms, w);
        read_opt(*it, "jitter_scale", c.jitter_scale, w);
    }
    read_opt(j, "noise_level", c.noise_level, where);
    read_opt(j, "burst_probability", c.burst_probability, where);
    read_opt(j, "burst_multiplier", c.burst_multiplier, where);
    read_opt(j, "vnf_count", c.vnf_count, where);
    read_opt(j, "link_count", c.link_count, where);
    read_opt(j, "days", c.days, where);
    read_opt(j, "seed", c.seed, where);
    validate(c);
    return c;
}

/// FNV-1a over the canonical JSON form.
inline std::string config_digest(const GeneratorConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_json(c).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    static constexpr char hex[] = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = hex[h & 0xF];
        h >>= 4;
    }
    buf[16] = '\0';
    return buf;
}

// ── generation ───────────────────────────────────────────────────────────────

inline std::vector<TelemetrySample> generate_slice(const GeneratorConfig& c, SliceType slice) {
    const auto& p = c.slices[index_of(slice)];
    SplitMix64 rng(c.seed ^ static_cast<std::uint64_t>(index_of(slice)));
    const std::uint64_t n = c.days * kSlotsPerDay;

    std::vector<TelemetrySample> out;
    out.reserve(n);
    double prev_delay = 0.0;
    for (std::uint64_t t = 0; t < n; ++t) {
        const double eta = rng.uniform(-1.0, 1.0);
        const double burst = rng.uniform01() < c.burst_probability ? c.burst_multiplier : 1.0;
        const double demand = static_cast<double>(p.ue_count) * p.mean_demand_mbps *
                              diurnal_profile(hour_of_slot(t), c) * (1.0 + c.noise_level * eta) *
                              burst;
        const double util = std::min(demand / p.capacity_mbps, kUtilCap);

        TelemetrySample s;
        s.slot = t;
        s.slice = slice;
        s.throughput = round9(util * p.capacity_mbps);
        const auto load = [&](double alpha) {
            return round9(std::clamp(alpha * util + kLoadNoise * rng.uniform(-1.0, 1.0), 0.0, 1.0));
        };
        for (auto [vec, alpha] : {std::pair{&s.vnf_cpu, kVnfLoadFactor[0]},
                                  std::pair{&s.vnf_ram, kVnfLoadFactor[1]},
                                  std::pair{&s.vnf_sto, kVnfLoadFactor[2]}}) {
            vec->resize(c.vnf_count);
            for (auto& x : *vec) x = load(alpha);
        }
        s.link_cap.resize(c.link_count);
        for (auto& x : s.link_cap) x = load(1.0);

        const double delay = delay_curve(util, c);
        s.delay_ms = round9(delay);
        s.packet_loss = round9(loss_curve(util, c));
        s.jitter_ms = round9(c.jitter_base_ms + c.jitter_scale * std::abs(delay - (t ? prev_delay : delay)));
        prev_delay = delay;
        out.push_back(std::move(s));
    }
    return out;
}

inline Dataset generate(const GeneratorConfig& c) {
    validate(c);
    Dataset ds;
    ds.meta.seed = c.seed;
    ds.meta.config_digest = config_digest(c);
    ds.meta.vnf_count = c.vnf_count;
    ds.meta.link_count = c.link_count;
    for (auto s : kAllSlices) ds.series[s] = generate_slice(c, s);
    return ds;
}

}  // namespace slicekpi
