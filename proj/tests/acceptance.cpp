// Acceptance run: one PASS/FAIL line per criterion, details indented below.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "lp_oracle.hpp"
#include "support.hpp"

using namespace slicekpi;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass = true;
    std::vector<std::string> notes;
    void check(bool ok, const std::string& what) {
        if (!ok) pass = false;
        notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    }
};

int failures = 0;

void report(int id, const char* name, const Verdict& v, double secs) {
    std::printf("criterion %d %-28s %s (%.2f s)\n", id, name, v.pass ? "PASS" : "FAIL", secs);
    for (const auto& n : v.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
    if (!v.pass) ++failures;
}

std::string fmt(const char* f, auto... a) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), {}};
}

int cli(const std::string& args) {
    const std::string cmd = "SLICEKPI_LOG=quiet " SLICEKPI_CLI " " + args + " >/dev/null";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

// ── 1 ───────────────────────────────────────────────────────────────────────

void metric_exactness() {
    const auto t0 = Clock::now();
    Verdict v;
    const std::pair<double, int> cases[] = {{100, 0}, {110, 1}, {150, 3}, {90, 5}};
    for (auto [est, want] : cases) {
        const int got = rho(est, 100.0, 0.15).value;
        v.check(got == want, fmt("rho(%g, 100) = %d, expected %d", est, got, want));
    }
    std::vector<PenaltyScore> ps;
    for (auto b : {Branch::Exact, Branch::WithinLimit, Branch::Over, Branch::Under}) ps.push_back({penalty_value(b), b});
    const double P = overall_performance(ps);
    v.check(P == 2.25, fmt("P([0,1,3,5]) = %.17g", P));
    const std::vector<double> a = {100, 200}, p = {90, 210};
    const double m = mape(a, p).percent;
    v.check(m == 7.5, fmt("MAPE = %.17g", m));
    const double secs = seconds_since(t0);
    v.check(secs < 1.0, "runtime < 1 s");
    report(1, "metric exactness", v, secs);
}

// ── 2 ───────────────────────────────────────────────────────────────────────

void lp_oracle_equivalence() {
    const auto t0 = Clock::now();
    Verdict v;
    std::mt19937_64 g(20240601);
    int optimal = 0, infeasible = 0, mismatch = 0, status_disagree = 0;
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const auto prob = oracle::random_lp(g, 4, 6);
        const auto s = solve(prob);
        const auto o = oracle::enumerate_vertices(prob);
        if (!o.feasible) {
            // bounded box: no feasible vertex means the polytope is empty
            if (s.status != LpStatus::Infeasible) ++status_disagree;
            ++infeasible;
            continue;
        }
        if (s.status != LpStatus::Optimal) {
            ++status_disagree;
            continue;
        }
        ++optimal;
        const double d = std::abs(s.objective - o.objective);
        worst = std::max(worst, d);
        Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(s.w.data(), Eigen::Index(s.w.size()));
        if (d > 1e-8 || !oracle::feasible_point(prob, w, 1e-9)) ++mismatch;
    }
    v.check(mismatch == 0 && status_disagree == 0,
            fmt("200 bounded LPs: %d optimal, %d infeasible, max |obj diff| %.3g, %d mismatches, %d status "
                "disagreements",
                optimal, infeasible, worst, mismatch, status_disagree));

    // Unbounded certificates: same generator with every other variable freed.
    int unbounded = 0, bad_ray = 0, other = 0;
    for (int k = 0; k < 200; ++k) {
        auto prob = oracle::random_lp(g, 4, 6);
        for (std::size_t j = 0; j < prob.vars(); j += 2) {
            prob.lo[j] = -std::numeric_limits<double>::infinity();
            prob.hi[j] = std::numeric_limits<double>::infinity();
        }
        const auto s = solve(prob);
        if (s.status == LpStatus::Unbounded) {
            ++unbounded;
            if (!oracle::ray_certifies(prob, s.ray)) ++bad_ray;
        } else if (s.status == LpStatus::Optimal) {
            auto q = prob;
            for (std::size_t j = 0; j < q.vars(); ++j) {
                q.lo[j] = std::max(q.lo[j], -1e4);
                q.hi[j] = std::min(q.hi[j], 1e4);
            }
            const auto o = oracle::enumerate_vertices(q);
            if (!o.feasible || std::abs(o.objective - s.objective) > 1e-7 * (1 + std::abs(o.objective))) ++other;
        } else if (oracle::enumerate_vertices([&] {
                       auto q = prob;
                       for (std::size_t j = 0; j < q.vars(); ++j) {
                           q.lo[j] = std::max(q.lo[j], -1e6);
                           q.hi[j] = std::min(q.hi[j], 1e6);
                       }
                       return q;
                   }())
                       .feasible) {
            ++other;
        }
    }
    v.check(bad_ray == 0 && other == 0 && unbounded > 0,
            fmt("200 LPs with free variables: %d unbounded, %d rays failing the certificate, %d other disagreements",
                unbounded, bad_ray, other));
    const double secs = seconds_since(t0);
    v.check(secs < 10.0, "runtime < 10 s");
    report(2, "LP oracle equivalence", v, secs);
}

// ── 3 ───────────────────────────────────────────────────────────────────────

double worst_history_slack(std::span<const TelemetrySample> series, const EstimateRecord& r, const LpKpiConfig& cfg) {
    std::size_t t = 0;
    while (series[t].slot != r.slot) ++t;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = t - cfg.window; i < t; ++i) {
        const auto& s = series[i];
        std::vector<double> row;
        if (cfg.intercept) row.push_back(1.0);
        for (const auto* x : {&s.vnf_cpu, &s.vnf_ram, &s.vnf_sto, &s.link_cap}) row.insert(row.end(), x->begin(), x->end());
        row.push_back(s.throughput);
        double sw = 0;
        for (std::size_t j = 0; j < row.size(); ++j) sw += row[j] * r.weights.at(j);
        worst = std::min(worst, sw - kpi_value(s, cfg.kpi));
    }
    return worst;
}

void history_invariant(const Dataset& ds, const RunConfig& cfg, const std::vector<ForecastRow>& forecasts) {
    const auto t0 = Clock::now();
    Verdict v;
    const auto fmaps = align_forecasts(forecasts, ds);
    const auto out = estimate_all(ds, fmaps, cfg);
    std::size_t checked = 0, violations = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& r : out.records) {
        if (!solved(r.status)) continue;
        LpKpiConfig lc = cfg.lp;
        lc.kpi = r.kpi;
        const double s = worst_history_slack(two_day_series(ds, r.slice), r, lc);
        worst = std::min(worst, s);
        ++checked;
        if (s < -1e-9) ++violations;
    }
    v.check(out.records.size() == kSlotsPerDay * 4 * 3, fmt("%zu estimates", out.records.size()));
    std::string statuses;
    for (const auto& [k, n] : out.status_counts) statuses += " " + k + "=" + std::to_string(n);
    v.notes.push_back("     statuses:" + statuses);
    v.check(violations == 0,
            fmt("%zu solved estimates checked, %zu violations, smallest slack %.3g", checked, violations, worst));
    const double secs = seconds_since(t0);
    v.check(secs < 120.0, "runtime < 2 min");
    report(3, "history invariant", v, secs);
}

// ── 4 ───────────────────────────────────────────────────────────────────────

void gradient_check_20() {
    const auto t0 = Clock::now();
    Verdict v;
    std::mt19937_64 g(77);
    std::uniform_real_distribution<double> u(-0.8, 0.8), u01(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t H = 1 + trial % 8, T = 1 + (trial * 5) % 6;
        FeatureSpec spec;
        spec.window_len = T;
        spec.vnf_count = 1 + trial % 2;
        spec.link_count = 1;
        auto m = ForecastModel::zeros(spec, H);
        Vector p = flatten_params(m);
        for (auto& x : p) x = u(g);
        assign_params(m, p);
        ScaledWindow w{Matrix(T, m.lstm.input_dim), u01(g), SliceType::EMBB};
        for (auto& x : w.x.data()) x = u01(g);
        worst = std::max(worst, gradient_check(m, w).max_relative_error);
    }
    v.check(worst < 1e-4, fmt("20 models (H <= 8, T <= 6): max relative error %.3g", worst));
    const double secs = seconds_since(t0);
    v.check(secs < 60.0, "runtime < 1 min");
    report(4, "gradient check", v, secs);
}

// ── 5, 6, 8 ─────────────────────────────────────────────────────────────────

const nlohmann::json* find_entry(const nlohmann::json& arr, const std::string& model, const std::string& kpi = "") {
    for (const auto& e : arr)
        if (e.at("model") == model && (kpi.empty() || e.at("kpi") == kpi)) return &e;
    return nullptr;
}

struct SeedRuns {
    std::vector<CompareResult> runs;
    std::vector<Dataset> data;
    std::vector<RunConfig> cfgs;
    double seconds = 0.0;
};

SeedRuns run_seeds() {
    SeedRuns s;
    const auto t0 = Clock::now();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        RunConfig c;
        c.apply_seed(seed);
        c.metrics.dbar = 0.15;
        auto ds = generate(c.generator);
        s.runs.push_back(run_compare(ds, c));
        s.data.push_back(std::move(ds));
        s.cfgs.push_back(c);
        std::printf("  ran compare for seed %llu (%.0f s elapsed)\n", static_cast<unsigned long long>(seed),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    s.seconds = seconds_since(t0);
    return s;
}

void forecast_ordering(const SeedRuns& s) {
    Verdict v;
    int held = 0;
    for (std::size_t i = 0; i < s.runs.size(); ++i) {
        const auto& tr = s.runs[i].report.at("traffic");
        const double l = find_entry(tr, "lstm-fsd")->at("mape");
        bool ok = true;
        std::string line = fmt("seed %zu: lstm-fsd %.2f%%", i + 1, l);
        for (const char* b : {"ols", "ridge", "elasticnet"}) {
            const double x = find_entry(tr, b)->at("mape");
            ok = ok && l < x;
            line += fmt(", %s %.2f%%", b, x);
        }
        if (ok) ++held;
        v.notes.push_back(std::string(ok ? "ok   " : "no   ") + line);
    }
    v.check(held >= 8, fmt("ordering holds on %d of 10 seeds (need 8)", held));
    report(5, "forecast ordering", v, s.seconds);
}

void kpi_ordering(const SeedRuns& s) {
    Verdict v;
    int held = 0, p_held = 0, under_held = 0;
    for (std::size_t i = 0; i < s.runs.size(); ++i) {
        const auto& kp = s.runs[i].report.at("kpi");
        bool p_ok = true, under_ok = true;
        std::string line = fmt("seed %zu:", i + 1);
        for (const char* k : {"delay", "packet_loss"}) {
            const auto* lp = find_entry(kp, "lpkpi", k);
            const double P_lp = lp->at("P"), P_ols = find_entry(kp, "ols", k)->at("P");
            const std::size_t u_lp = lp->at("branch_counts").at("under");
            p_ok = p_ok && P_lp < P_ols;
            line += fmt(" %s P lpkpi %.3f ols %.3f, under lpkpi %zu", k, P_lp, P_ols, u_lp);
            std::string vs;
            for (const char* b : {"ols", "ridge", "adaboost", "bagging"}) {
                const std::size_t u = find_entry(kp, b, k)->at("branch_counts").at("under");
                if (u_lp > u) {
                    under_ok = false;
                    vs += fmt(" %s=%zu", b, u);
                }
            }
            if (!vs.empty()) line += " (fewer:" + vs + ")";
            line += ";";
        }
        p_held += p_ok;
        under_held += under_ok;
        const bool ok = p_ok && under_ok;
        held += ok;
        v.notes.push_back(std::string(ok ? "ok   " : "no   ") + line);
    }
    v.notes.push_back(fmt("     P(lpkpi) < P(ols) on %d/10 seeds; under-count clause on %d/10 seeds", p_held, under_held));
    v.check(held >= 8, fmt("ordering holds on %d of 10 seeds (need 8)", held));
    report(6, "KPI estimation ordering", v, s.seconds);
}

void timing_sanity(const SeedRuns& s) {
    Verdict v;
    const auto& timing = s.runs.front().report.at("timing");
    const auto* lp = find_entry(timing, "lpkpi");
    v.check(lp != nullptr, "lpkpi timing present");
    if (lp) {
        const double med = lp->at("median_us");
        v.check(med < 10000.0, fmt("lpkpi median %.1f us per prediction over %zu samples", med,
                                   lp->at("samples").get<std::size_t>()));
    }
    bool sorted = true;
    double prev = -1.0;
    std::string order;
    for (const auto& e : timing) {
        const double m = e.at("median_us");
        sorted = sorted && m >= prev;
        prev = m;
        order += fmt(" %s/%s=%.1f", e.at("model").get<std::string>().c_str(), e.at("task").get<std::string>().c_str(), m);
    }
    v.check(sorted, "timing ordered by median:" + order);
    report(8, "timing harness", v, 0.0);
}

// ── 7 ───────────────────────────────────────────────────────────────────────

void determinism() {
    const auto t0 = Clock::now();
    Verdict v;
    testutil::TempDir dir("acceptance");
    const auto d = [&](const std::string& n) { return (dir.path / n).string(); };
    fs::create_directories(dir.path / "c1");
    fs::create_directories(dir.path / "c2");
    bool ran = cli("gen --seed 7 --out " + d("a.csv")) == 0 && cli("gen --seed 7 --out " + d("b.csv")) == 0;
    v.check(ran, "gen ran twice");
    v.check(ran && slurp(d("a.csv")) == slurp(d("b.csv")) && !slurp(d("a.csv")).empty(), "datasets byte-identical");
    v.check(ran && slurp(d("a.csv.meta.json")) == slurp(d("b.csv.meta.json")), "metadata byte-identical");
    ran = cli("train --seed 7 --data " + d("a.csv") + " --out " + d("m1.json")) == 0 &&
          cli("train --seed 7 --data " + d("a.csv") + " --out " + d("m2.json")) == 0;
    v.check(ran, "train ran twice");
    v.check(ran && slurp(d("m1.json")) == slurp(d("m2.json")) && !slurp(d("m1.json")).empty(),
            "model files byte-identical");
    ran = cli("compare --seed 7 --data " + d("a.csv") + " --out " + d("c1")) == 0 &&
          cli("compare --seed 7 --data " + d("a.csv") + " --out " + d("c2")) == 0;
    v.check(ran, "compare ran twice");
    if (ran) {
        auto r1 = nlohmann::json::parse(slurp(dir.path / "c1" / "report.json"));
        auto r2 = nlohmann::json::parse(slurp(dir.path / "c2" / "report.json"));
        r1.erase("timing");
        r2.erase("timing");
        v.check(r1 == r2, "reports identical outside timing");
        for (const char* f : {"forecasts.csv", "estimates.csv", "kpi_predictions.csv", "gaps.csv"})
            v.check(slurp(dir.path / "c1" / f) == slurp(dir.path / "c2" / f), fmt("%s byte-identical", f));
    }
    const double secs = seconds_since(t0);
    v.check(secs < 900.0, "runtime < 15 min");
    report(7, "determinism", v, secs);
}

}  // namespace

int main() {
    setenv("SLICEKPI_LOG", "quiet", 0);
    try {
        metric_exactness();
        lp_oracle_equivalence();
        const auto seeds = run_seeds();
        history_invariant(seeds.data.front(), seeds.cfgs.front(), seeds.runs.front().forecasts);
        gradient_check_20();
        forecast_ordering(seeds);
        kpi_ordering(seeds);
        determinism();
        timing_sanity(seeds);
    } catch (const std::exception& e) {
        std::printf("acceptance aborted: %s\n", e.what());
        return 2;
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
