#pragma once

// Asymmetric KPI scoring.
//
//   d   = (est - act) / (est + act)                (0 when both are 0)
//   rho = 1 if d in (0, dbar], 3 if d > dbar, 5 if d < 0, 0 otherwise
//   P   = mean(rho) over the evaluated slots
//   MAPE = 100 * mean(|act - est| / act) over slots with act != 0

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"

namespace slicekpi {

struct MetricConfig {
    double dbar = 0.15;
    std::map<Kpi, double> per_kpi_dbar;  // optional overrides

    double limit_for(Kpi k) const {
        auto it = per_kpi_dbar.find(k);
        return it == per_kpi_dbar.end() ? dbar : it->second;
    }
};

inline void validate(const MetricConfig& c) {
    if (!(c.dbar > 0.0)) throw ConfigError("metrics 'dbar' must be > 0");
    for (const auto& [k, v] : c.per_kpi_dbar)
        if (!(v > 0.0))
            throw ConfigError("metrics 'dbar' override for " + std::string(to_string(k)) + " must be > 0");
}

enum class Branch : std::uint8_t { Exact = 0, WithinLimit = 1, Over = 2, Under = 3 };

inline constexpr std::array<Branch, 4> kAllBranches = {Branch::Exact, Branch::WithinLimit,
                                                       Branch::Over, Branch::Under};

inline std::string_view to_string(Branch b) noexcept {
    switch (b) {
        case Branch::Exact: return "exact";
        case Branch::WithinLimit: return "within_limit";
        case Branch::Over: return "over";
        case Branch::Under: return "under";
    }
    return "?";
}

struct PenaltyScore {
    int value = 0;
    Branch branch = Branch::Exact;

    bool operator==(const PenaltyScore&) const = default;
};

inline constexpr int penalty_value(Branch b) noexcept {
    switch (b) {
        case Branch::Exact: return 0;
        case Branch::WithinLimit: return 1;
        case Branch::Over: return 3;
        case Branch::Under: return 5;
    }
    return 0;
}

inline double gap(double estimate, double actual) {
    if (!(estimate >= 0.0) || !(actual >= 0.0))
        throw DataError("gap: inputs must be non-negative (estimate " + std::to_string(estimate) +
                        ", actual " + std::to_string(actual) + ")");
    const double sum = estimate + actual;
    if (sum == 0.0) return 0.0;
    return (estimate - actual) / sum;
}

inline PenaltyScore rho(double estimate, double actual, double dbar) {
    const double d = gap(estimate, actual);
    Branch b = Branch::Exact;
    if (d > 0.0 && d <= dbar)
        b = Branch::WithinLimit;
    else if (d > dbar)
        b = Branch::Over;
    else if (d < 0.0)
        b = Branch::Under;
    return {penalty_value(b), b};
}

inline PenaltyScore rho(double estimate, double actual, const MetricConfig& c, Kpi k) {
    return rho(estimate, actual, c.limit_for(k));
}

inline double overall_performance(std::span<const PenaltyScore> penalties) {
    if (penalties.empty()) throw DataError("overall performance needs at least one event");
    double s = 0.0;
    for (const auto& p : penalties) s += p.value;
    return s / static_cast<double>(penalties.size());
}

struct MapeResult {
    double percent = 0.0;
    std::size_t included = 0;
    std::size_t excluded_zero = 0;
};

inline MapeResult mape(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size())
        throw DataError("mape: length mismatch (" + std::to_string(actual.size()) + " vs " +
                        std::to_string(predicted.size()) + ")");
    MapeResult r;
    double s = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (actual[i] == 0.0) {
            ++r.excluded_zero;
            continue;
        }
        s += 100.0 * std::abs(actual[i] - predicted[i]) / std::abs(actual[i]);
        ++r.included;
    }
    if (r.included == 0) throw DataError("mape: every actual value is zero");
    r.percent = s / static_cast<double>(r.included);
    return r;
}

inline bool scale_invariance_check(double estimate, double actual, double c, double dbar = 0.15) {
    const double g0 = gap(estimate, actual);
    const double g1 = gap(c * estimate, c * actual);
    return std::abs(g0 - g1) <= 1e-12 && rho(estimate, actual, dbar) == rho(c * estimate, c * actual, dbar);
}

// ── aggregate statistics ─────────────────────────────────────────────────────

struct ScoreSummary {
    std::size_t n = 0;
    double P = 0.0;
    std::array<std::size_t, 4> branch_counts{};  // indexed by Branch
    double gap_mean = 0.0;
    double gap_std = 0.0;
    std::vector<double> gaps;

    std::size_t count(Branch b) const noexcept { return branch_counts[static_cast<std::size_t>(b)]; }
};

/// Scores paired (estimate, actual) sequences. Estimates are clamped at 0.
inline ScoreSummary score(std::span<const double> estimates, std::span<const double> actuals,
                          double dbar) {
    if (estimates.size() != actuals.size()) throw DataError("score: length mismatch");
    if (estimates.empty()) throw DataError("score: no events");
    ScoreSummary s;
    s.n = estimates.size();
    std::vector<PenaltyScore> pens;
    pens.reserve(s.n);
    s.gaps.reserve(s.n);
    for (std::size_t i = 0; i < s.n; ++i) {
        const double est = std::max(estimates[i], 0.0);
        auto p = rho(est, actuals[i], dbar);
        pens.push_back(p);
        ++s.branch_counts[static_cast<std::size_t>(p.branch)];
        s.gaps.push_back(gap(est, actuals[i]));
    }
    s.P = overall_performance(pens);
    double m = 0.0;
    for (double g : s.gaps) m += g;
    m /= static_cast<double>(s.n);
    double v = 0.0;
    for (double g : s.gaps) v += (g - m) * (g - m);
    s.gap_mean = m;
    s.gap_std = s.n > 1 ? std::sqrt(v / static_cast<double>(s.n - 1)) : 0.0;
    return s;
}

/// Linear-interpolated quantile of an unsorted sample, q in [0,1].
inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw DataError("quantile of empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

}  // namespace slicekpi
