#pragma once

// LP-KPI: next-slot KPI estimate from a sliding history window.
//
//   minimize  s.w        s = [1, V_t (current loads), Theta_hat_{t+1}]
//   subject to S w >= k   one row [1, V_tau, Theta_tau] per history slot tau
//              -W <= w <= W
//   estimate = s.w* + eps
//
// With more weights than history rows the box is usually what stops the
// objective, and the "optimum" is an artifact of W. When that happens and
// reduce_on_bound_activity is set, the same LP is re-solved on [1, Theta] and
// then on [1] (which is the window maximum of k). Weights of dropped columns
// are reported as 0, so S w >= k still holds for the full history rows.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "csv.hpp"
#include "linalg.hpp"
#include "simplex.hpp"

namespace slicekpi {

struct LpKpiConfig {
    std::size_t window = 12;
    double epsilon = 0.0;
    double weight_bound = 1e3;
    bool intercept = true;
    Kpi kpi = Kpi::Delay;
    bool reduce_on_bound_activity = true;
};

inline void validate(const LpKpiConfig& c) {
    if (c.window == 0) throw ConfigError("lp_kpi 'window' must be >= 1");
    if (!(c.weight_bound > 0.0) || !std::isfinite(c.weight_bound))
        throw ConfigError("lp_kpi 'weight_bound' must be finite and > 0");
    if (!std::isfinite(c.epsilon)) throw ConfigError("lp_kpi 'epsilon' must be finite");
}

enum class LpTier { Full, Throughput, Intercept };

enum class EstimateStatus { Optimal, ReducedThroughput, ReducedIntercept, CarriedForward, SolverError };

inline std::string_view to_string(EstimateStatus s) noexcept {
    switch (s) {
        case EstimateStatus::Optimal: return "optimal";
        case EstimateStatus::ReducedThroughput: return "reduced_throughput";
        case EstimateStatus::ReducedIntercept: return "reduced_intercept";
        case EstimateStatus::CarriedForward: return "carried_forward";
        case EstimateStatus::SolverError: return "solver_error";
    }
    return "?";
}

inline EstimateStatus parse_estimate_status(std::string_view s) {
    for (auto st : {EstimateStatus::Optimal, EstimateStatus::ReducedThroughput,
                    EstimateStatus::ReducedIntercept, EstimateStatus::CarriedForward,
                    EstimateStatus::SolverError})
        if (to_string(st) == s) return st;
    throw DataError("unknown estimate status '" + std::string(s) + "'");
}

/// True for statuses whose weights came from an LP solve.
inline bool solved(EstimateStatus s) noexcept {
    return s == EstimateStatus::Optimal || s == EstimateStatus::ReducedThroughput ||
           s == EstimateStatus::ReducedIntercept;
}

struct EstimateRecord {
    std::uint64_t slot = 0;  // slot being estimated (t+1)
    SliceType slice = SliceType::EMBB;
    Kpi kpi = Kpi::Delay;
    double estimate = 0.0;
    double actual = std::numeric_limits<double>::quiet_NaN();
    EstimateStatus status = EstimateStatus::Optimal;
    bool bound_active = false;  // full-state solve hit the box
    Vector weights;             // full column layout; dropped columns are 0
    double rows_per_weight = 0.0;
};

inline std::size_t lp_weight_count(std::size_t V, std::size_t L, bool intercept) noexcept {
    return (intercept ? 1 : 0) + 3 * V + L + 1;
}

namespace detail {

inline std::vector<std::size_t> tier_columns(LpTier tier, std::size_t V, std::size_t L, bool intercept) {
    const std::size_t m = lp_weight_count(V, L, intercept);
    std::vector<std::size_t> cols;
    if (intercept) cols.push_back(0);
    switch (tier) {
        case LpTier::Full:
            for (std::size_t j = intercept ? 1 : 0; j < m; ++j) cols.push_back(j);
            break;
        case LpTier::Throughput: cols.push_back(m - 1); break;
        case LpTier::Intercept: break;
    }
    return cols;
}

inline void state_row(const TelemetrySample& s, double throughput, bool intercept, std::span<double> out) {
    std::size_t k = 0;
    if (intercept) out[k++] = 1.0;
    for (const auto* v : {&s.vnf_cpu, &s.vnf_ram, &s.vnf_sto, &s.link_cap})
        for (double x : *v) out[k++] = x;
    out[k] = throughput;
}

}  // namespace detail

/// Builds the LP over `history` (oldest first). `current` supplies the loads of
/// the objective row; `predicted_throughput` is its throughput entry.
inline LpProblem assemble(std::span<const TelemetrySample> history, std::span<const double> kpi_history,
                          double predicted_throughput, const TelemetrySample& current,
                          const LpKpiConfig& cfg, LpTier tier = LpTier::Full) {
    if (kpi_history.size() != history.size())
        throw DataError("KPI history has " + std::to_string(kpi_history.size()) +
                        " entries but state history has " + std::to_string(history.size()));
    if (history.size() != cfg.window)
        throw DataError("state history has " + std::to_string(history.size()) + " rows, window is " +
                        std::to_string(cfg.window));
    if (tier == LpTier::Intercept && !cfg.intercept)
        throw ConfigError("intercept-only model requested without an intercept column");
    const std::size_t V = current.vnf_cpu.size(), L = current.link_cap.size();
    for (const auto& h : history) {
        if (h.slice != current.slice) throw DataError("LP history mixes slices");
        if (h.vnf_cpu.size() != V || h.vnf_ram.size() != V || h.vnf_sto.size() != V ||
            h.link_cap.size() != L)
            throw DataError("LP history rows have inconsistent V/L");
    }
    if (!std::isfinite(predicted_throughput)) throw DataError("predicted throughput is not finite");

    const std::size_t m_full = lp_weight_count(V, L, cfg.intercept);
    const auto cols = detail::tier_columns(tier, V, L, cfg.intercept);
    const std::size_t m = cols.size(), n = history.size();

    Vector full(m_full);
    LpProblem p;
    p.c.resize(m);
    detail::state_row(current, predicted_throughput, cfg.intercept, full);
    for (std::size_t j = 0; j < m; ++j) p.c[j] = full[cols[j]];
    p.A = Matrix(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        detail::state_row(history[i], history[i].throughput, cfg.intercept, full);
        for (std::size_t j = 0; j < m; ++j) p.A(i, j) = full[cols[j]];
    }
    p.b.assign(kpi_history.begin(), kpi_history.end());
    p.lo.assign(m, -cfg.weight_bound);
    p.hi.assign(m, cfg.weight_bound);
    return p;
}

struct SlotEstimate {
    double estimate = 0.0;
    EstimateStatus status = EstimateStatus::CarriedForward;
    bool bound_active = false;
    Vector weights;  // full layout, empty unless solved
};

/// One slot: full solve, then the reduced tiers while the box stays active.
/// `fallback` is used when no tier yields an optimum.
inline SlotEstimate estimate_slot(std::span<const TelemetrySample> history, std::span<const double> kpi_history,
                                  double predicted_throughput, const TelemetrySample& current,
                                  const LpKpiConfig& cfg, double fallback) {
    const std::size_t V = current.vnf_cpu.size(), L = current.link_cap.size();
    std::vector<LpTier> tiers{LpTier::Full};
    if (cfg.reduce_on_bound_activity) {
        tiers.push_back(LpTier::Throughput);
        if (cfg.intercept) tiers.push_back(LpTier::Intercept);
    }

    SlotEstimate out;
    out.estimate = fallback;
    for (std::size_t ti = 0; ti < tiers.size(); ++ti) {
        const auto p = assemble(history, kpi_history, predicted_throughput, current, cfg, tiers[ti]);
        const auto sol = solve(p);
        if (sol.status == LpStatus::Infeasible) break;  // dropping columns cannot restore feasibility
        if (sol.status != LpStatus::Optimal) continue;
        const bool active = bound_active(sol, p);
        if (ti == 0) out.bound_active = active;
        if (active && ti + 1 < tiers.size()) continue;

        const auto cols = detail::tier_columns(tiers[ti], V, L, cfg.intercept);
        out.weights.assign(lp_weight_count(V, L, cfg.intercept), 0.0);
        for (std::size_t j = 0; j < cols.size(); ++j) out.weights[cols[j]] = sol.w[j];
        out.estimate = sol.objective + cfg.epsilon;
        out.status = tiers[ti] == LpTier::Full         ? EstimateStatus::Optimal
                     : tiers[ti] == LpTier::Throughput ? EstimateStatus::ReducedThroughput
                                                       : EstimateStatus::ReducedIntercept;
        return out;
    }
    return out;
}

/// Forecast lookup: predicted throughput keyed by the slot it predicts.
using ForecastMap = std::map<std::uint64_t, double>;

/// Estimates every slot t+1 of `series` that has a forecast, using history
/// slots t-|T|+1..t. Each forecast must land on a slot with a full window.
/// Optional `timings_us` receives the wall time of each slot's solve.
inline std::vector<EstimateRecord> estimate_kpi(std::span<const TelemetrySample> series,
                                                const ForecastMap& forecasts, const LpKpiConfig& cfg,
                                                std::vector<double>* timings_us = nullptr) {
    validate(cfg);
    const std::size_t T = cfg.window;
    if (series.size() <= T)
        throw DataError("series has " + std::to_string(series.size()) + " slots; window " +
                        std::to_string(T) + " needs more");

    std::map<std::uint64_t, std::size_t> index;
    for (std::size_t i = 0; i < series.size(); ++i) index[series[i].slot] = i;
    for (const auto& [slot, _] : forecasts) {
        auto it = index.find(slot);
        if (it == index.end())
            throw DataError("forecast for slot " + std::to_string(slot) + " has no matching telemetry row");
        if (it->second < T)
            throw DataError("forecast for slot " + std::to_string(slot) + " lacks a full history window");
    }

    std::vector<EstimateRecord> out;
    std::vector<double> kpi_hist(T);
    std::optional<double> last_solved;
    const double ratio =
        static_cast<double>(T) /
        static_cast<double>(lp_weight_count(series[0].vnf_cpu.size(), series[0].link_cap.size(), cfg.intercept));

    for (std::size_t t = T - 1; t + 1 < series.size(); ++t) {
        const auto& target = series[t + 1];
        auto f = forecasts.find(target.slot);
        if (f == forecasts.end()) continue;

        const auto hist = series.subspan(t + 1 - T, T);
        double window_max = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < T; ++i) {
            kpi_hist[i] = kpi_value(hist[i], cfg.kpi);
            window_max = std::max(window_max, kpi_hist[i]);
        }
        const double fallback = last_solved ? *last_solved : window_max + cfg.epsilon;

        EstimateRecord r;
        r.slot = target.slot;
        r.slice = target.slice;
        r.kpi = cfg.kpi;
        r.actual = kpi_value(target, cfg.kpi);
        r.rows_per_weight = ratio;

        const auto t0 = std::chrono::steady_clock::now();
        try {
            auto e = estimate_slot(hist, kpi_hist, f->second, series[t], cfg, fallback);
            r.estimate = e.estimate;
            r.status = e.status;
            r.bound_active = e.bound_active;
            r.weights = std::move(e.weights);
        } catch (const NumericalError&) {
            r.estimate = fallback;
            r.status = EstimateStatus::SolverError;
        }
        const auto t1 = std::chrono::steady_clock::now();
        if (timings_us) timings_us->push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());

        if (solved(r.status)) last_solved = r.estimate;
        out.push_back(std::move(r));
    }
    return out;
}

// ── estimates CSV ────────────────────────────────────────────────────────────

inline constexpr std::string_view kEstimatesHeader = "slot,slice,kpi,estimate,actual,status,bound_active";

inline void write_estimates_csv(std::span<const EstimateRecord> records, std::ostream& os) {
    os << kEstimatesHeader << '\n';
    for (const auto& r : records) {
        os << r.slot << ',' << to_string(r.slice) << ',' << to_string(r.kpi) << ','
           << csv::format_double(r.estimate) << ',' << (std::isnan(r.actual) ? "" : csv::format_double(r.actual))
           << ',' << to_string(r.status) << ',' << (r.bound_active ? 1 : 0) << '\n';
    }
}

inline std::vector<EstimateRecord> read_estimates_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || csv::trim_cr(line) != kEstimatesHeader)
        throw DataError("estimates file: expected header '" + std::string(kEstimatesHeader) + "'");
    std::vector<EstimateRecord> out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (csv::trim_cr(line).empty()) continue;
        const auto f = csv::split(csv::trim_cr(line));
        if (f.size() != 7)
            throw DataError("estimates file line " + std::to_string(lineno) + ": expected 7 fields");
        EstimateRecord r;
        r.slot = csv::parse_u64(f[0], lineno, "slot");
        auto sl = try_parse_slice(csv::trim_cr(f[1]));
        if (!sl) throw DataError("estimates file line " + std::to_string(lineno) + ": unknown slice");
        r.slice = *sl;
        r.kpi = parse_kpi(csv::trim_cr(f[2]));
        r.estimate = csv::parse_double(f[3], lineno, "estimate");
        if (!csv::trim_cr(f[4]).empty()) r.actual = csv::parse_double(f[4], lineno, "actual");
        r.status = parse_estimate_status(csv::trim_cr(f[5]));
        r.bound_active = csv::parse_u64(f[6], lineno, "bound_active") != 0;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace slicekpi
