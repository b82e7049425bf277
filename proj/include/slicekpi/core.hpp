#pragma once

// Shared domain types for slice telemetry: slice labels, per-slot samples,
// the dataset container and its validation.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace slicekpi {

// ── Errors ───────────────────────────────────────────────────────────────────

enum class ErrorKind { Config, Data, Numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

// ── SliceType ────────────────────────────────────────────────────────────────

enum class SliceType : std::uint8_t { EMBB = 0, URLLC = 1, MMTC = 2, VOIP = 3 };

inline constexpr std::size_t kSliceCount = 4;
inline constexpr std::array<SliceType, kSliceCount> kAllSlices = {
    SliceType::EMBB, SliceType::URLLC, SliceType::MMTC, SliceType::VOIP};

inline constexpr std::size_t index_of(SliceType s) noexcept { return static_cast<std::size_t>(s); }

inline std::string_view to_string(SliceType s) noexcept {
    switch (s) {
        case SliceType::EMBB: return "eMBB";
        case SliceType::URLLC: return "uRLLC";
        case SliceType::MMTC: return "mMTC";
        case SliceType::VOIP: return "VoIP";
    }
    return "?";
}

inline std::optional<SliceType> try_parse_slice(std::string_view label) noexcept {
    for (auto s : kAllSlices)
        if (to_string(s) == label) return s;
    return std::nullopt;
}

inline SliceType parse_slice(std::string_view label) {
    if (auto s = try_parse_slice(label)) return *s;
    throw DataError("unknown slice label '" + std::string(label) + "'");
}

// ── Samples ──────────────────────────────────────────────────────────────────

inline constexpr double kSlotSeconds = 300.0;
inline constexpr std::size_t kSlotsPerDay = 288;

struct TelemetrySample {
    std::uint64_t slot = 0;
    SliceType slice = SliceType::EMBB;
    double throughput = 0.0;  // Mb/s
    std::vector<double> vnf_cpu;
    std::vector<double> vnf_ram;
    std::vector<double> vnf_sto;
    std::vector<double> link_cap;
    double delay_ms = 1.0;
    double packet_loss = 0.0;
    double jitter_ms = 0.0;

    bool operator==(const TelemetrySample&) const = default;
};

struct DatasetMeta {
    std::uint64_t seed = 0;
    std::string config_digest;
    std::size_t vnf_count = 3;
    std::size_t link_count = 2;
    double slot_seconds = kSlotSeconds;

    bool operator==(const DatasetMeta&) const = default;
};

/// Per-slice ordered telemetry series. Slices iterate in enum order.
struct Dataset {
    DatasetMeta meta;
    std::map<SliceType, std::vector<TelemetrySample>> series;

    std::size_t sample_count() const noexcept {
        std::size_t n = 0;
        for (const auto& [s, v] : series) n += v.size();
        return n;
    }

    const std::vector<TelemetrySample>& at(SliceType s) const {
        auto it = series.find(s);
        if (it == series.end())
            throw DataError("dataset has no series for slice " + std::string(to_string(s)));
        return it->second;
    }

    bool operator==(const Dataset&) const = default;
};

// ── Validation ───────────────────────────────────────────────────────────────

struct Violation {
    SliceType slice;
    std::uint64_t slot;
    std::string rule;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
    std::size_t count(std::string_view rule) const noexcept {
        std::size_t n = 0;
        for (const auto& v : violations) n += (v.rule == rule);
        return n;
    }
    std::string summary() const {
        std::ostringstream os;
        for (const auto& v : violations)
            os << to_string(v.slice) << " slot " << v.slot << ": " << v.rule << " (" << v.detail
               << ")\n";
        return os.str();
    }
};

namespace detail {

inline bool is_fraction(double x) noexcept { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

}  // namespace detail

/// Reports every invariant violation; never throws.
inline ValidationReport validate_dataset(const Dataset& ds) {
    ValidationReport rep;
    const auto add = [&](SliceType sl, std::uint64_t slot, std::string rule, std::string detail) {
        rep.violations.push_back({sl, slot, std::move(rule), std::move(detail)});
    };
    const std::size_t V = ds.meta.vnf_count;
    const std::size_t L = ds.meta.link_count;

    for (const auto& [slice, samples] : ds.series) {
        if (samples.empty()) {
            add(slice, 0, "empty series", "slice has no samples");
            continue;
        }
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto& s = samples[i];
            if (s.slice != slice)
                add(slice, s.slot, "slice label", "sample labelled " + std::string(to_string(s.slice)));
            if (i > 0 && s.slot != samples[i - 1].slot + 1)
                add(slice, s.slot, "slot stride",
                    "previous slot " + std::to_string(samples[i - 1].slot));
            if (!(std::isfinite(s.throughput) && s.throughput >= 0.0))
                add(slice, s.slot, "throughput range", std::to_string(s.throughput));

            const auto check_loads = [&](const std::vector<double>& v, std::size_t want,
                                         const char* name) {
                if (v.size() != want)
                    add(slice, s.slot, std::string(name) + " length",
                        std::to_string(v.size()) + " != " + std::to_string(want));
                for (double x : v)
                    if (!detail::is_fraction(x)) {
                        add(slice, s.slot, std::string(name) + " range", std::to_string(x));
                        break;
                    }
            };
            check_loads(s.vnf_cpu, V, "vnf_cpu");
            check_loads(s.vnf_ram, V, "vnf_ram");
            check_loads(s.vnf_sto, V, "vnf_sto");
            check_loads(s.link_cap, L, "link_cap");

            if (!(std::isfinite(s.delay_ms) && s.delay_ms > 0.0))
                add(slice, s.slot, "delay_ms range", std::to_string(s.delay_ms));
            if (!detail::is_fraction(s.packet_loss))
                add(slice, s.slot, "packet_loss range", std::to_string(s.packet_loss));
            if (!(std::isfinite(s.jitter_ms) && s.jitter_ms >= 0.0))
                add(slice, s.slot, "jitter_ms range", std::to_string(s.jitter_ms));
        }
    }
    return rep;
}

// ── KPI selection ────────────────────────────────────────────────────────────

enum class Kpi { Delay, PacketLoss, Jitter };

inline constexpr std::array<Kpi, 3> kAllKpis = {Kpi::Delay, Kpi::PacketLoss, Kpi::Jitter};

inline std::string_view to_string(Kpi k) noexcept {
    switch (k) {
        case Kpi::Delay: return "delay";
        case Kpi::PacketLoss: return "packet_loss";
        case Kpi::Jitter: return "jitter";
    }
    return "?";
}

inline Kpi parse_kpi(std::string_view name) {
    for (auto k : kAllKpis)
        if (to_string(k) == name) return k;
    throw ConfigError("unknown KPI '" + std::string(name) + "'");
}

inline double kpi_value(const TelemetrySample& s, Kpi k) noexcept {
    switch (k) {
        case Kpi::Delay: return s.delay_ms;
        case Kpi::PacketLoss: return s.packet_loss;
        case Kpi::Jitter: return s.jitter_ms;
    }
    return 0.0;
}

}  // namespace slicekpi
