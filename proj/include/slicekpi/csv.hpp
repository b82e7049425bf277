#pragma once

// Dataset persistence. One row per slot x slice, header required:
//   slot,slice,throughput_mbps,vnf_cpu_0..,vnf_ram_0..,vnf_sto_0..,link_cap_0..,
//   delay_ms,packet_loss,jitter_ms
// Dataset metadata (seed, digest, V, L) lives in a "<path>.meta.json" sidecar.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "core.hpp"

namespace slicekpi {

namespace csv {

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) throw DataError("cannot format number");
    return std::string(buf, end);
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim_cr(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    return s;
}

inline double parse_double(std::string_view field, std::size_t line, std::string_view column) {
    field = trim_cr(field);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty())
        throw DataError("line " + std::to_string(line) + ", column '" + std::string(column) +
                        "': malformed number '" + std::string(field) + "'");
    return v;
}

inline std::uint64_t parse_u64(std::string_view field, std::size_t line, std::string_view column) {
    field = trim_cr(field);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty())
        throw DataError("line " + std::to_string(line) + ", column '" + std::string(column) +
                        "': malformed integer '" + std::string(field) + "'");
    return v;
}

}  // namespace csv

inline std::vector<std::string> dataset_columns(std::size_t V, std::size_t L) {
    std::vector<std::string> cols = {"slot", "slice", "throughput_mbps"};
    for (const char* g : {"vnf_cpu_", "vnf_ram_", "vnf_sto_"})
        for (std::size_t i = 0; i < V; ++i) cols.push_back(g + std::to_string(i));
    for (std::size_t i = 0; i < L; ++i) cols.push_back("link_cap_" + std::to_string(i));
    cols.insert(cols.end(), {"delay_ms", "packet_loss", "jitter_ms"});
    return cols;
}

/// Rows are written slot-major, slices in enum order within a slot.
inline void write_csv(const Dataset& ds, std::ostream& os) {
    const auto cols = dataset_columns(ds.meta.vnf_count, ds.meta.link_count);
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';

    struct Cursor {
        const std::vector<TelemetrySample>* v;
        std::size_t i;
    };
    std::vector<Cursor> cur;
    for (const auto& [s, v] : ds.series) cur.push_back({&v, 0});

    const auto put = [&](double x) { os << ',' << csv::format_double(x); };
    while (true) {
        std::uint64_t next = UINT64_MAX;
        for (const auto& c : cur)
            if (c.i < c.v->size()) next = std::min(next, (*c.v)[c.i].slot);
        if (next == UINT64_MAX) break;
        for (auto& c : cur) {
            if (c.i >= c.v->size() || (*c.v)[c.i].slot != next) continue;
            const auto& s = (*c.v)[c.i++];
            os << s.slot << ',' << to_string(s.slice);
            put(s.throughput);
            for (const auto* vec : {&s.vnf_cpu, &s.vnf_ram, &s.vnf_sto, &s.link_cap})
                for (double x : *vec) put(x);
            put(s.delay_ms);
            put(s.packet_loss);
            put(s.jitter_ms);
            os << '\n';
        }
    }
}

/// Parses rows into a dataset; V and L are taken from the header.
inline Dataset read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DataError("line 1: missing header");
    const auto header = csv::split(csv::trim_cr(line));

    std::size_t V = 0, L = 0;
    for (auto h : header) {
        h = csv::trim_cr(h);
        if (h.rfind("vnf_cpu_", 0) == 0) ++V;
        if (h.rfind("link_cap_", 0) == 0) ++L;
    }
    const auto expected = dataset_columns(V, L);
    for (const auto& col : expected) {
        bool found = std::any_of(header.begin(), header.end(),
                                 [&](std::string_view h) { return csv::trim_cr(h) == col; });
        if (!found) throw DataError("schema error: missing column '" + col + "'");
    }
    if (header.size() != expected.size())
        throw DataError("schema error: expected " + std::to_string(expected.size()) +
                        " columns, header has " + std::to_string(header.size()));
    for (std::size_t i = 0; i < expected.size(); ++i)
        if (csv::trim_cr(header[i]) != expected[i])
            throw DataError("schema error: column " + std::to_string(i) + " should be '" +
                            expected[i] + "'");

    Dataset ds;
    ds.meta.vnf_count = V;
    ds.meta.link_count = L;

    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        auto trimmed = csv::trim_cr(line);
        if (trimmed.empty()) continue;
        const auto f = csv::split(trimmed);
        if (f.size() != expected.size())
            throw DataError("line " + std::to_string(lineno) + ": expected " +
                            std::to_string(expected.size()) + " fields, got " +
                            std::to_string(f.size()));
        TelemetrySample s;
        std::size_t k = 0;
        s.slot = csv::parse_u64(f[k], lineno, expected[k]);
        ++k;
        auto label = csv::trim_cr(f[k++]);
        auto slice = try_parse_slice(label);
        if (!slice)
            throw DataError("line " + std::to_string(lineno) + ", column 'slice': unknown slice label '" +
                            std::string(label) + "'");
        s.slice = *slice;
        const auto num = [&]() {
            double v = csv::parse_double(f[k], lineno, expected[k]);
            ++k;
            return v;
        };
        s.throughput = num();
        for (auto* vec : {&s.vnf_cpu, &s.vnf_ram, &s.vnf_sto}) {
            vec->resize(V);
            for (auto& x : *vec) x = num();
        }
        s.link_cap.resize(L);
        for (auto& x : s.link_cap) x = num();
        s.delay_ms = num();
        s.packet_loss = num();
        s.jitter_ms = num();
        ds.series[s.slice].push_back(std::move(s));
    }
    if (ds.series.empty()) throw DataError("dataset file has no rows");
    return ds;
}

// ── file variants with metadata sidecar ──────────────────────────────────────

inline std::filesystem::path meta_sidecar(const std::filesystem::path& csv_path) {
    return std::filesystem::path(csv_path.string() + ".meta.json");
}

inline nlohmann::json to_json(const DatasetMeta& m) {
    return {{"seed", m.seed},
            {"config_digest", m.config_digest},
            {"vnf_count", m.vnf_count},
            {"link_count", m.link_count},
            {"slot_seconds", m.slot_seconds}};
}

inline void write_csv(const Dataset& ds, const std::filesystem::path& path) {
    auto report = validate_dataset(ds);
    if (!report.ok()) throw DataError("refusing to write invalid dataset:\n" + report.summary());
    const auto dir = path.parent_path();
    if (!dir.empty() && !std::filesystem::is_directory(dir))
        throw DataError("output directory does not exist: " + dir.string());
    {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw DataError("cannot open for writing: " + path.string());
        write_csv(ds, os);
    }
    std::ofstream ms(meta_sidecar(path), std::ios::binary);
    if (!ms) throw DataError("cannot open for writing: " + meta_sidecar(path).string());
    ms << to_json(ds.meta).dump(2) << '\n';
}

inline Dataset read_csv(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open dataset: " + path.string());
    Dataset ds = read_csv(is);
    const auto side = meta_sidecar(path);
    if (std::filesystem::exists(side)) {
        std::ifstream ms(side);
        nlohmann::json j;
        try {
            ms >> j;
        } catch (const nlohmann::json::exception& e) {
            throw DataError("malformed metadata sidecar " + side.string() + ": " + e.what());
        }
        ds.meta.seed = j.value("seed", std::uint64_t{0});
        ds.meta.config_digest = j.value("config_digest", std::string{});
        ds.meta.slot_seconds = j.value("slot_seconds", kSlotSeconds);
        if (j.value("vnf_count", ds.meta.vnf_count) != ds.meta.vnf_count ||
            j.value("link_count", ds.meta.link_count) != ds.meta.link_count)
            throw DataError("metadata sidecar disagrees with CSV header on V/L");
    }
    return ds;
}

}  // namespace slicekpi
