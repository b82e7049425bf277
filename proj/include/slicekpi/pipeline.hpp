#pragma once

// Experiment orchestration behind the `slicekpi` command: config loading,
// the gen/train/forecast/estimate/compare stages, persisted intermediates,
// the timing harness and the comparison report.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "baselines.hpp"
#include "core.hpp"
#include "csv.hpp"
#include "features.hpp"
#include "lp_kpi.hpp"
#include "lstm.hpp"
#include "metrics.hpp"
#include "synth.hpp"

namespace slicekpi {

// ── logging ──────────────────────────────────────────────────────────────────

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

/// SLICEKPI_LOG: quiet|info|debug (or 0|1|2). Default info.
inline LogLevel log_level() {
    const char* v = std::getenv("SLICEKPI_LOG");
    if (!v) return LogLevel::Info;
    const std::string s(v);
    if (s == "quiet" || s == "0" || s == "off") return LogLevel::Quiet;
    if (s == "debug" || s == "2") return LogLevel::Debug;
    return LogLevel::Info;
}

inline void log(LogLevel lvl, const std::string& msg) {
    if (static_cast<int>(lvl) <= static_cast<int>(log_level())) std::cerr << "[slicekpi] " << msg << '\n';
}

// ── configuration ────────────────────────────────────────────────────────────

inline const std::vector<std::string> kKpiModels = {"lpkpi", "ols", "ridge", "adaboost", "bagging"};
inline const std::vector<std::string> kTrafficModels = {"lstm-fsd", "ols", "ridge", "elasticnet"};
inline const std::vector<std::string> kAllModels = {"lstm-fsd", "lpkpi",    "ols",    "ridge",
                                                    "elasticnet", "adaboost", "bagging"};

struct BaselineConfig {
    double ridge_lambda = 1.0;
    double elasticnet_alpha = 0.1;
    double elasticnet_l1_ratio = 0.5;
    std::size_t bagging_estimators = 25;
    std::size_t adaboost_rounds = 25;
    std::uint64_t seed = 1;
};

struct RunConfig {
    std::string data_path;
    std::string model_path;
    std::string out_path;

    GeneratorConfig generator = default_config();
    std::size_t window_len = 12;  // forecaster window T
    TrainConfig train;
    LpKpiConfig lp;
    MetricConfig metrics;
    BaselineConfig baselines;
    std::vector<std::string> models = kAllModels;
    std::vector<Kpi> kpis = {kAllKpis.begin(), kAllKpis.end()};
    std::optional<std::uint64_t> seed;
    std::size_t timing_min_samples = 1000;

    /// One seed drives generation, initialization/shuffling and resampling.
    void apply_seed(std::uint64_t s) {
        seed = s;
        generator.seed = s;
        train.seed = s;
        baselines.seed = s;
    }

    bool selected(std::string_view model) const {
        return std::find(models.begin(), models.end(), model) != models.end();
    }
};

inline void validate(const RunConfig& c) {
    validate(c.generator);
    validate(c.train);
    validate(c.lp);
    validate(c.metrics);
    if (c.window_len < 1) throw ConfigError("features 'window_len' must be >= 1");
    if (c.models.empty()) throw ConfigError("'models' must not be empty");
    if (c.kpis.empty()) throw ConfigError("'kpis' must not be empty");
    std::set<std::string> seen;
    for (const auto& m : c.models) {
        if (std::find(kAllModels.begin(), kAllModels.end(), m) == kAllModels.end())
            throw ConfigError("unknown model '" + m + "' in 'models'");
        if (!seen.insert(m).second) throw ConfigError("model '" + m + "' listed twice in 'models'");
    }
    std::set<Kpi> kseen;
    for (auto k : c.kpis)
        if (!kseen.insert(k).second) throw ConfigError("KPI '" + std::string(to_string(k)) + "' listed twice");
    const std::vector<std::pair<const char*, const std::string*>> paths = {
        {"paths.data", &c.data_path}, {"paths.model", &c.model_path}, {"paths.out", &c.out_path}};
    for (std::size_t i = 0; i < paths.size(); ++i)
        for (std::size_t j = i + 1; j < paths.size(); ++j)
            if (!paths[i].second->empty() && *paths[i].second == *paths[j].second)
                throw ConfigError(std::string("'") + paths[i].first + "' and '" + paths[j].first +
                                  "' name the same path");
    const auto& b = c.baselines;
    if (!(b.ridge_lambda >= 0.0)) throw ConfigError("baselines 'ridge_lambda' must be >= 0");
    if (!(b.elasticnet_alpha >= 0.0)) throw ConfigError("baselines 'elasticnet_alpha' must be >= 0");
    if (!(b.elasticnet_l1_ratio >= 0.0 && b.elasticnet_l1_ratio <= 1.0))
        throw ConfigError("baselines 'elasticnet_l1_ratio' must be in [0,1]");
    if (b.bagging_estimators < 1) throw ConfigError("baselines 'bagging_estimators' must be >= 1");
    if (b.adaboost_rounds < 1) throw ConfigError("baselines 'adaboost_rounds' must be >= 1");
    if (c.timing_min_samples < 1) throw ConfigError("'timing_min_samples' must be >= 1");
}

inline std::vector<Kpi> parse_kpi_list(const std::vector<std::string>& names) {
    std::vector<Kpi> out;
    for (const auto& n : names) out.push_back(parse_kpi(n));
    return out;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    using detail::read_opt;
    using detail::reject_unknown;
    RunConfig c;
    reject_unknown(j,
                   {"paths", "generator", "features", "train", "lp_kpi", "metrics", "baselines", "models",
                    "kpis", "seed", "timing_min_samples"},
                   "");
    if (auto it = j.find("paths"); it != j.end()) {
        reject_unknown(*it, {"data", "model", "out"}, "paths");
        read_opt(*it, "data", c.data_path, "paths");
        read_opt(*it, "model", c.model_path, "paths");
        read_opt(*it, "out", c.out_path, "paths");
    }
    if (auto it = j.find("generator"); it != j.end()) c.generator = generator_config_from_json(*it, "generator");
    if (auto it = j.find("features"); it != j.end()) {
        reject_unknown(*it, {"window_len"}, "features");
        read_opt(*it, "window_len", c.window_len, "features");
    }
    if (auto it = j.find("train"); it != j.end()) {
        reject_unknown(*it,
                       {"epochs", "learning_rate", "beta1", "beta2", "adam_eps", "batch_size", "hidden", "seed",
                        "clip_norm"},
                       "train");
        auto& t = c.train;
        read_opt(*it, "epochs", t.epochs, "train");
        read_opt(*it, "learning_rate", t.learning_rate, "train");
        read_opt(*it, "beta1", t.beta1, "train");
        read_opt(*it, "beta2", t.beta2, "train");
        read_opt(*it, "adam_eps", t.adam_eps, "train");
        read_opt(*it, "batch_size", t.batch_size, "train");
        read_opt(*it, "hidden", t.hidden, "train");
        read_opt(*it, "seed", t.seed, "train");
        read_opt(*it, "clip_norm", t.clip_norm, "train");
    }
    if (auto it = j.find("lp_kpi"); it != j.end()) {
        reject_unknown(*it, {"window", "epsilon", "weight_bound", "intercept", "reduce_on_bound_activity"},
                       "lp_kpi");
        read_opt(*it, "window", c.lp.window, "lp_kpi");
        read_opt(*it, "epsilon", c.lp.epsilon, "lp_kpi");
        read_opt(*it, "weight_bound", c.lp.weight_bound, "lp_kpi");
        read_opt(*it, "intercept", c.lp.intercept, "lp_kpi");
        read_opt(*it, "reduce_on_bound_activity", c.lp.reduce_on_bound_activity, "lp_kpi");
    }
    if (auto it = j.find("metrics"); it != j.end()) {
        reject_unknown(*it, {"dbar", "per_kpi_dbar"}, "metrics");
        read_opt(*it, "dbar", c.metrics.dbar, "metrics");
        if (auto p = it->find("per_kpi_dbar"); p != it->end()) {
            if (!p->is_object()) throw ConfigError("config 'metrics.per_kpi_dbar': expected an object");
            for (const auto& [k, v] : p->items()) {
                Kpi kpi = parse_kpi(k);
                if (!v.is_number()) throw ConfigError("config key 'metrics.per_kpi_dbar." + k + "' has the wrong type");
                c.metrics.per_kpi_dbar[kpi] = v.get<double>();
            }
        }
    }
    if (auto it = j.find("baselines"); it != j.end()) {
        reject_unknown(*it,
                       {"ridge_lambda", "elasticnet_alpha", "elasticnet_l1_ratio", "bagging_estimators",
                        "adaboost_rounds", "seed"},
                       "baselines");
        auto& b = c.baselines;
        read_opt(*it, "ridge_lambda", b.ridge_lambda, "baselines");
        read_opt(*it, "elasticnet_alpha", b.elasticnet_alpha, "baselines");
        read_opt(*it, "elasticnet_l1_ratio", b.elasticnet_l1_ratio, "baselines");
        read_opt(*it, "bagging_estimators", b.bagging_estimators, "baselines");
        read_opt(*it, "adaboost_rounds", b.adaboost_rounds, "baselines");
        read_opt(*it, "seed", b.seed, "baselines");
    }
    read_opt(j, "models", c.models, "");
    if (auto it = j.find("kpis"); it != j.end()) {
        std::vector<std::string> names;
        read_opt(j, "kpis", names, "");
        c.kpis = parse_kpi_list(names);
    }
    read_opt(j, "timing_min_samples", c.timing_min_samples, "");
    if (auto it = j.find("seed"); it != j.end()) {
        std::uint64_t s = 0;
        read_opt(j, "seed", s, "");
        c.apply_seed(s);
    }
    validate(c);
    return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path.string() + ": parse error: " + e.what());
    }
    return run_config_from_json(j);
}

inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json per_kpi = nlohmann::json::object();
    for (const auto& [k, v] : c.metrics.per_kpi_dbar) per_kpi[std::string(to_string(k))] = v;
    std::vector<std::string> kpis;
    for (auto k : c.kpis) kpis.emplace_back(to_string(k));
    return {
        {"generator", to_json(c.generator)},
        {"features", {{"window_len", c.window_len}}},
        {"train",
         {{"epochs", c.train.epochs},
          {"learning_rate", c.train.learning_rate},
          {"beta1", c.train.beta1},
          {"beta2", c.train.beta2},
          {"adam_eps", c.train.adam_eps},
          {"batch_size", c.train.batch_size},
          {"hidden", c.train.hidden},
          {"seed", c.train.seed},
          {"clip_norm", c.train.clip_norm}}},
        {"lp_kpi",
         {{"window", c.lp.window},
          {"epsilon", c.lp.epsilon},
          {"weight_bound", c.lp.weight_bound},
          {"intercept", c.lp.intercept},
          {"reduce_on_bound_activity", c.lp.reduce_on_bound_activity}}},
        {"metrics", {{"dbar", c.metrics.dbar}, {"per_kpi_dbar", per_kpi}}},
        {"baselines",
         {{"ridge_lambda", c.baselines.ridge_lambda},
          {"elasticnet_alpha", c.baselines.elasticnet_alpha},
          {"elasticnet_l1_ratio", c.baselines.elasticnet_l1_ratio},
          {"bagging_estimators", c.baselines.bagging_estimators},
          {"adaboost_rounds", c.baselines.adaboost_rounds},
          {"seed", c.baselines.seed}}},
        {"models", c.models},
        {"kpis", kpis},
        {"timing_min_samples", c.timing_min_samples},
    };
}

// ── stage helpers ────────────────────────────────────────────────────────────

[[noreturn]] inline void throw_kind(ErrorKind k, const std::string& msg) {
    switch (k) {
        case ErrorKind::Config: throw ConfigError(msg);
        case ErrorKind::Data: throw DataError(msg);
        case ErrorKind::Numerical: throw NumericalError(msg);
    }
    throw DataError(msg);
}

/// Runs `f`, prefixing any failure with the stage name.
template <class F>
auto run_stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw_kind(e.kind(), std::string("stage '") + name + "': " + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("stage '") + name + "': " + e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        throw DataError(std::string("stage '") + name + "': " + e.what());
    }
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    const auto dir = p.parent_path();
    if (!dir.empty() && !std::filesystem::is_directory(dir))
        throw DataError("output directory does not exist: " + dir.string());
    std::ofstream os(p, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + p.string());
    return os;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) { open_out(p) << s; }

inline FeatureSpec feature_spec_for(const Dataset& ds, std::size_t window_len) {
    FeatureSpec spec;
    spec.window_len = window_len;
    spec.vnf_count = ds.meta.vnf_count;
    spec.link_count = ds.meta.link_count;
    return spec;
}

struct ExperimentWindows {
    std::vector<WindowSample> train;  // targets on day 1
    std::vector<WindowSample> eval;   // targets on day 2 (history may reach into day 1)
    std::vector<std::string> warnings;
};

inline ExperimentWindows make_windows(const Dataset& ds, const FeatureSpec& spec) {
    auto split = split_by_day(ds);
    ExperimentWindows w;
    w.warnings = split.warnings;
    w.train = build_windows(split.train, spec);
    Dataset two_days;
    two_days.meta = ds.meta;
    for (const auto& [sl, series] : ds.series)
        two_days.series[sl].assign(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(2 * kSlotsPerDay));
    for (auto& win : build_windows(two_days, spec)) {
        const auto first_eval_slot = ds.at(win.slice)[kSlotsPerDay].slot;
        if (win.target_slot >= first_eval_slot) w.eval.push_back(std::move(win));
    }
    return w;
}

/// The two-day prefix used for estimation: day 1 supplies history for day 2.
inline std::vector<TelemetrySample> two_day_series(const Dataset& ds, SliceType sl) {
    const auto& s = ds.at(sl);
    if (s.size() < 2 * kSlotsPerDay)
        throw DataError("slice " + std::string(to_string(sl)) + " spans fewer than 2 days");
    return {s.begin(), s.begin() + static_cast<std::ptrdiff_t>(2 * kSlotsPerDay)};
}

// ── forecasts ────────────────────────────────────────────────────────────────

struct ForecastRow {
    std::uint64_t slot = 0;
    SliceType slice = SliceType::EMBB;
    double actual = 0.0;
    double predicted = 0.0;
};

inline constexpr std::string_view kForecastHeader = "slot,slice,actual,predicted";

inline void write_forecasts_csv(std::span<const ForecastRow> rows, std::ostream& os) {
    os << kForecastHeader << '\n';
    for (const auto& r : rows)
        os << r.slot << ',' << to_string(r.slice) << ',' << csv::format_double(r.actual) << ','
           << csv::format_double(r.predicted) << '\n';
}

inline std::vector<ForecastRow> read_forecasts_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || csv::trim_cr(line) != kForecastHeader)
        throw DataError("forecast file: expected header '" + std::string(kForecastHeader) + "'");
    std::vector<ForecastRow> out;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        const auto t = csv::trim_cr(line);
        if (t.empty()) continue;
        const auto f = csv::split(t);
        if (f.size() != 4) throw DataError("forecast file line " + std::to_string(lineno) + ": expected 4 fields");
        ForecastRow r;
        r.slot = csv::parse_u64(f[0], lineno, "slot");
        auto sl = try_parse_slice(csv::trim_cr(f[1]));
        if (!sl)
            throw DataError("forecast file line " + std::to_string(lineno) + ": unknown slice label '" +
                            std::string(f[1]) + "'");
        r.slice = *sl;
        r.actual = csv::parse_double(f[2], lineno, "actual");
        r.predicted = csv::parse_double(f[3], lineno, "predicted");
        out.push_back(r);
    }
    return out;
}

/// Groups forecasts per slice after checking each one against the dataset.
inline std::map<SliceType, ForecastMap> align_forecasts(std::span<const ForecastRow> rows, const Dataset& ds) {
    std::map<SliceType, std::map<std::uint64_t, const TelemetrySample*>> index;
    for (const auto& [sl, series] : ds.series)
        for (const auto& s : series) index[sl][s.slot] = &s;
    std::map<SliceType, ForecastMap> out;
    for (const auto& r : rows) {
        auto si = index.find(r.slice);
        if (si == index.end())
            throw DataError("forecast for slice " + std::string(to_string(r.slice)) + " not present in dataset");
        auto it = si->second.find(r.slot);
        if (it == si->second.end())
            throw DataError("forecast slot " + std::to_string(r.slot) + " (" + std::string(to_string(r.slice)) +
                            ") not present in dataset");
        if (it->second->throughput != r.actual)
            throw DataError("forecast slot " + std::to_string(r.slot) + " (" + std::string(to_string(r.slice)) +
                            "): actual throughput does not match the dataset");
        if (!out[r.slice].emplace(r.slot, r.predicted).second)
            throw DataError("duplicate forecast for slot " + std::to_string(r.slot));
    }
    return out;
}

inline std::vector<ForecastRow> forecast_rows(const ForecastModel& m, std::span<const WindowSample> eval,
                                              std::vector<double>* timings_us = nullptr) {
    std::vector<ForecastRow> out;
    out.reserve(eval.size());
    for (const auto& w : eval) {
        const auto t0 = std::chrono::steady_clock::now();
        const double p = forward(m, w);
        const auto t1 = std::chrono::steady_clock::now();
        if (timings_us) timings_us->push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
        out.push_back({w.target_slot, w.slice, w.target, std::max(0.0, p)});
    }
    return out;
}

inline MapeResult forecast_mape(std::span<const ForecastRow> rows) {
    Vector a, p;
    for (const auto& r : rows) {
        a.push_back(r.actual);
        p.push_back(r.predicted);
    }
    return mape(a, p);
}

inline void write_history_csv(std::span<const EpochStats> h, std::ostream& os) {
    auto num = [](double x) { return std::isfinite(x) ? csv::format_double(x) : std::string(); };
    os << "epoch,train_loss,train_mape,eval_mape\n";
    for (const auto& e : h)
        os << e.epoch << ',' << num(e.train_loss) << ',' << num(e.train_mape) << ',' << num(e.eval_mape) << '\n';
}

inline std::filesystem::path history_path_for(std::filesystem::path model_path) {
    return model_path.replace_extension(".history.csv");
}

// ── commands ─────────────────────────────────────────────────────────────────

inline Dataset cmd_gen(const RunConfig& cfg, const std::filesystem::path& out) {
    validate(cfg);
    Dataset ds = run_stage("gen", [&] { return generate(cfg.generator); });
    run_stage("gen", [&] { write_csv(ds, out); });
    log(LogLevel::Info, "wrote " + std::to_string(ds.sample_count()) + " rows to " + out.string());
    return ds;
}

inline Dataset load_dataset(const std::filesystem::path& p) {
    return run_stage("load", [&] {
        Dataset ds = read_csv(p);
        auto rep = validate_dataset(ds);
        if (!rep.ok()) throw DataError("dataset " + p.string() + " failed validation:\n" + rep.summary());
        return ds;
    });
}

inline TrainResult train_stage(const Dataset& ds, const RunConfig& cfg, const ExperimentWindows& w) {
    return run_stage("train", [&] {
        auto res = train(w.train, w.eval, feature_spec_for(ds, cfg.window_len), cfg.train);
        const auto& last = res.history.back();
        log(LogLevel::Info, "trained " + std::to_string(res.history.size()) + " epochs, eval MAPE " +
                                std::to_string(last.eval_mape) + "%");
        return res;
    });
}

inline TrainResult cmd_train(const std::filesystem::path& data, const RunConfig& cfg,
                             const std::filesystem::path& model_out) {
    validate(cfg);
    const Dataset ds = load_dataset(data);
    const auto w = run_stage("features", [&] { return make_windows(ds, feature_spec_for(ds, cfg.window_len)); });
    for (const auto& msg : w.warnings) log(LogLevel::Info, "warning: " + msg);
    auto res = train_stage(ds, cfg, w);
    run_stage("train", [&] {
        save_model(res.model, model_out);
        auto os = open_out(history_path_for(model_out));
        write_history_csv(res.history, os);
    });
    return res;
}

struct ForecastOutcome {
    std::vector<ForecastRow> rows;
    MapeResult mape;
};

inline ForecastOutcome cmd_forecast(const std::filesystem::path& model_path, const std::filesystem::path& data,
                                    const std::filesystem::path& out) {
    const auto model = run_stage("forecast", [&] { return load_model(model_path); });
    const Dataset ds = load_dataset(data);
    return run_stage("forecast", [&] {
        if (ds.meta.vnf_count != model.spec.vnf_count || ds.meta.link_count != model.spec.link_count)
            throw DataError("model expects V=" + std::to_string(model.spec.vnf_count) +
                            ", L=" + std::to_string(model.spec.link_count) + " but the dataset differs");
        FeatureSpec spec = model.spec;
        const auto w = make_windows(ds, spec);
        ForecastOutcome o;
        o.rows = forecast_rows(model, w.eval);
        o.mape = forecast_mape(o.rows);
        auto os = open_out(out);
        write_forecasts_csv(o.rows, os);
        return o;
    });
}

struct EstimateOutcome {
    std::vector<EstimateRecord> records;
    std::map<std::string, std::size_t> status_counts;
    std::vector<double> timings_us;
};

/// LP-KPI over every slice with forecasts and every configured KPI.
inline EstimateOutcome estimate_all(const Dataset& ds, const std::map<SliceType, ForecastMap>& forecasts,
                                    const RunConfig& cfg) {
    EstimateOutcome o;
    for (auto kpi : cfg.kpis) {
        LpKpiConfig lc = cfg.lp;
        lc.kpi = kpi;
        for (const auto& [sl, fmap] : forecasts) {
            const auto series = two_day_series(ds, sl);
            auto recs = estimate_kpi(series, fmap, lc, &o.timings_us);
            for (auto& r : recs) {
                ++o.status_counts[std::string(to_string(r.status))];
                o.records.push_back(std::move(r));
            }
        }
    }
    return o;
}

inline EstimateOutcome cmd_estimate(const std::filesystem::path& data, const std::filesystem::path& forecasts_path,
                                    const RunConfig& cfg, const std::filesystem::path& out) {
    validate(cfg);
    const Dataset ds = load_dataset(data);
    return run_stage("estimate", [&] {
        std::ifstream is(forecasts_path, std::ios::binary);
        if (!is) throw DataError("cannot open forecast file: " + forecasts_path.string());
        const auto rows = read_forecasts_csv(is);
        const auto aligned = align_forecasts(rows, ds);
        auto o = estimate_all(ds, aligned, cfg);
        auto os = open_out(out);
        write_estimates_csv(o.records, os);
        std::string summary = "estimates:";
        for (const auto& [s, n] : o.status_counts) summary += " " + s + "=" + std::to_string(n);
        log(LogLevel::Info, summary);
        return o;
    });
}

// ── compare ──────────────────────────────────────────────────────────────────

/// [cpu.., ram.., sto.., links.., throughput]; the LP columns without intercept.
inline Vector kpi_feature_row(const TelemetrySample& s, double throughput) {
    Vector v;
    for (const auto* vec : {&s.vnf_cpu, &s.vnf_ram, &s.vnf_sto, &s.link_cap}) v.insert(v.end(), vec->begin(), vec->end());
    v.push_back(throughput);
    return v;
}

inline Vector flatten(const Matrix& m) { return m.data(); }

struct KpiPrediction {
    std::uint64_t slot = 0;
    SliceType slice = SliceType::EMBB;
    Kpi kpi = Kpi::Delay;
    std::string model;
    double estimate = 0.0;
    double actual = 0.0;
};

struct TrafficPrediction {
    std::uint64_t slot = 0;
    SliceType slice = SliceType::EMBB;
    std::string model;
    double predicted = 0.0;
    double actual = 0.0;
};

struct TimingEntry {
    std::string model;
    std::string task;  // "traffic" or "kpi"
    double median_us = 0.0;
    std::size_t samples = 0;
};

struct CompareResult {
    nlohmann::json report;
    TrainResult training;
    std::vector<ForecastRow> forecasts;
    EstimateOutcome estimates;
    std::vector<KpiPrediction> kpi_predictions;
    std::vector<TrafficPrediction> traffic_predictions;
    std::vector<TimingEntry> timing;
};

namespace detail {

/// Times `fn(i)` over items round-robin until at least `min_samples` calls.
template <class Fn>
std::vector<double> time_calls(std::size_t items, std::size_t min_samples, Fn&& fn) {
    std::vector<double> t;
    if (items == 0) return t;
    const std::size_t total = std::max(min_samples, items);
    t.reserve(total);
    volatile double sink = 0.0;
    for (std::size_t k = 0; k < total; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        sink = sink + fn(k % items);
        const auto t1 = std::chrono::steady_clock::now();
        t.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    }
    return t;
}

inline nlohmann::json branch_json(const ScoreSummary& s) {
    nlohmann::json j = nlohmann::json::object();
    for (auto b : kAllBranches) j[std::string(to_string(b))] = s.count(b);
    return j;
}

}  // namespace detail

inline CompareResult run_compare(const Dataset& ds, const RunConfig& cfg,
                                 const std::optional<std::filesystem::path>& out_dir = std::nullopt) {
    validate(cfg);
    if (out_dir && !std::filesystem::is_directory(*out_dir))
        throw DataError("output directory does not exist: " + out_dir->string());
    CompareResult res;
    const FeatureSpec base_spec = feature_spec_for(ds, cfg.window_len);
    const auto w = run_stage("features", [&] { return make_windows(ds, base_spec); });
    for (const auto& msg : w.warnings) log(LogLevel::Info, "warning: " + msg);

    // Forecaster. LP-KPI and the KPI baselines need its Θ̂ as well.
    res.training = train_stage(ds, cfg, w);
    const auto& model = res.training.model;
    const auto& norm = model.spec.normalizer;
    std::vector<double> lstm_times;
    res.forecasts = run_stage("forecast", [&] { return forecast_rows(model, w.eval, &lstm_times); });
    std::map<SliceType, ForecastMap> fmaps;
    for (const auto& r : res.forecasts) fmaps[r.slice][r.slot] = r.predicted;

    nlohmann::json traffic = nlohmann::json::array();
    auto add_traffic = [&](const std::string& name, const Vector& pred, std::vector<double> times) {
        Vector act;
        for (std::size_t i = 0; i < w.eval.size(); ++i) {
            act.push_back(w.eval[i].target);
            res.traffic_predictions.push_back({w.eval[i].target_slot, w.eval[i].slice, name, pred[i], w.eval[i].target});
        }
        const auto mr = mape(act, pred);
        traffic.push_back({{"model", name},
                           {"mape", mr.percent},
                           {"included", mr.included},
                           {"excluded_zero", mr.excluded_zero},
                           {"n", pred.size()}});
        if (times.size() < cfg.timing_min_samples) {
            // top up so every median rests on the same minimum sample count
            auto more = detail::time_calls(w.eval.size(), cfg.timing_min_samples - times.size(),
                                           [&](std::size_t i) { return pred[i]; });
            times.insert(times.end(), more.begin(), more.end());
        }
        res.timing.push_back({name, "traffic", median(times), times.size()});
    };

    if (cfg.selected("lstm-fsd")) {
        Vector pred;
        for (const auto& r : res.forecasts) pred.push_back(r.predicted);
        if (lstm_times.size() < cfg.timing_min_samples) {
            auto more = detail::time_calls(w.eval.size(), cfg.timing_min_samples - lstm_times.size(),
                                           [&](std::size_t i) { return forward(model, w.eval[i]); });
            lstm_times.insert(lstm_times.end(), more.begin(), more.end());
        }
        add_traffic("lstm-fsd", pred, lstm_times);
    }

    // Traffic baselines on flattened normalized windows.
    const bool any_traffic_baseline = cfg.selected("ols") || cfg.selected("ridge") || cfg.selected("elasticnet");
    if (any_traffic_baseline) {
        run_stage("traffic baselines", [&] {
            const auto tr = normalize(norm, w.train);
            const auto ev = normalize(norm, w.eval);
            const std::size_t D = tr.front().x.data().size();
            Matrix X(tr.size(), D);
            Vector y(tr.size());
            for (std::size_t i = 0; i < tr.size(); ++i) {
                std::copy(tr[i].x.data().begin(), tr[i].x.data().end(), X.row(i).begin());
                y[i] = tr[i].y;
            }
            std::vector<Vector> ex;
            for (const auto& s : ev) ex.push_back(flatten(s.x));
            for (const std::string name : {"ols", "ridge", "elasticnet"}) {
                if (!cfg.selected(name)) continue;
                LinearModel m = name == "ols"     ? fit_ols(X, y)
                                : name == "ridge" ? fit_ridge(X, y, cfg.baselines.ridge_lambda)
                                                  : fit_elastic_net(X, y, cfg.baselines.elasticnet_alpha,
                                                                    cfg.baselines.elasticnet_l1_ratio);
                if (m.singular) log(LogLevel::Info, "traffic " + name + ": singular normal equations, ridge fallback used");
                Vector pred(ex.size());
                for (std::size_t i = 0; i < ex.size(); ++i)
                    pred[i] = std::max(0.0, norm.invert_target(predict(m, ex[i]), ev[i].slice));
                auto times = detail::time_calls(ex.size(), cfg.timing_min_samples, [&](std::size_t i) {
                    return norm.invert_target(predict(m, ex[i]), ev[i].slice);
                });
                add_traffic(name, pred, std::move(times));
            }
        });
    }

    // LP-KPI.
    nlohmann::json kpi_entries = nlohmann::json::array();
    auto add_kpi = [&](const std::string& name, Kpi kpi, const Vector& est, const Vector& act,
                       nlohmann::json extra) {
        const auto s = score(est, act, cfg.metrics.limit_for(kpi));
        nlohmann::json e = {{"model", name},
                            {"kpi", std::string(to_string(kpi))},
                            {"P", s.P},
                            {"n", s.n},
                            {"branch_counts", detail::branch_json(s)},
                            {"gap_mean", s.gap_mean},
                            {"gap_std", s.gap_std},
                            {"mape", mape(act, [&] {
                                 Vector c(est.size());
                                 for (std::size_t i = 0; i < est.size(); ++i) c[i] = std::max(0.0, est[i]);
                                 return c;
                             }()).percent}};
        for (auto& [k, v] : extra.items()) e[k] = v;
        kpi_entries.push_back(std::move(e));
        return s;
    };

    std::map<std::pair<std::string, Kpi>, std::vector<double>> gap_samples;
    if (cfg.selected("lpkpi")) {
        res.estimates = run_stage("estimate", [&] { return estimate_all(ds, fmaps, cfg); });
        for (auto kpi : cfg.kpis) {
            Vector est, act;
            std::map<std::string, std::size_t> status;
            std::size_t active = 0;
            for (const auto& r : res.estimates.records) {
                if (r.kpi != kpi) continue;
                est.push_back(r.estimate);
                act.push_back(r.actual);
                ++status[std::string(to_string(r.status))];
                active += r.bound_active ? 1 : 0;
                res.kpi_predictions.push_back({r.slot, r.slice, kpi, "lpkpi", r.estimate, r.actual});
            }
            const auto s = add_kpi("lpkpi", kpi, est, act, {{"status_counts", status}, {"bound_active", active}});
            gap_samples[{"lpkpi", kpi}] = s.gaps;
        }
        auto& t = res.estimates.timings_us;
        while (t.size() < cfg.timing_min_samples) {
            // small runs: repeat the first slice/KPI until the sample floor is met
            LpKpiConfig lc = cfg.lp;
            lc.kpi = cfg.kpis.front();
            const auto& [sl, fmap] = *fmaps.begin();
            estimate_kpi(two_day_series(ds, sl), fmap, lc, &t);
        }
        res.timing.push_back({"lpkpi", "kpi", median(t), t.size()});
    }

    // KPI baselines: per slice, fitted on day-1 rows [loads_t, Θ_t] -> k_t and
    // queried with [loads_t, Θ̂_{t+1}] for target slot t+1, like LP-KPI.
    const std::vector<std::string> kpi_baselines = {"ols", "ridge", "adaboost", "bagging"};
    run_stage("kpi baselines", [&] {
        for (const auto& name : kpi_baselines) {
            if (!cfg.selected(name)) continue;
            std::vector<double> times;
            for (auto kpi : cfg.kpis) {
                Vector est, act;
                for (const auto& [sl, fmap] : fmaps) {
                    const auto series = two_day_series(ds, sl);
                    Matrix X(kSlotsPerDay, 0);
                    Vector y(kSlotsPerDay);
                    {
                        const std::size_t D = kpi_feature_row(series[0], 0.0).size();
                        X = Matrix(kSlotsPerDay, D);
                        for (std::size_t i = 0; i < kSlotsPerDay; ++i) {
                            const auto row = kpi_feature_row(series[i], series[i].throughput);
                            std::copy(row.begin(), row.end(), X.row(i).begin());
                            y[i] = kpi_value(series[i], kpi);
                        }
                    }
                    Regressor m = name == "ols"       ? Regressor(fit_ols(X, y))
                                  : name == "ridge"   ? Regressor(fit_ridge(X, y, cfg.baselines.ridge_lambda))
                                  : name == "bagging" ? Regressor(fit_bagging(X, y, cfg.baselines.bagging_estimators,
                                                                              cfg.baselines.seed ^ (index_of(sl) + 1)))
                                                      : Regressor(fit_adaboost_r2(X, y, cfg.baselines.adaboost_rounds,
                                                                                  cfg.baselines.seed ^ (index_of(sl) + 1)));
                    std::vector<Vector> queries;
                    for (std::size_t t = 0; t + 1 < series.size(); ++t) {
                        auto f = fmap.find(series[t + 1].slot);
                        if (f == fmap.end()) continue;
                        queries.push_back(kpi_feature_row(series[t], f->second));
                        const double e = predict(m, queries.back());
                        const double a = kpi_value(series[t + 1], kpi);
                        est.push_back(e);
                        act.push_back(a);
                        res.kpi_predictions.push_back({series[t + 1].slot, sl, kpi, name, e, a});
                    }
                    auto tt = detail::time_calls(queries.size(), 0,
                                                 [&](std::size_t i) { return predict(m, queries[i]); });
                    times.insert(times.end(), tt.begin(), tt.end());
                }
                const auto s = add_kpi(name, kpi, est, act, nlohmann::json::object());
                gap_samples[{name, kpi}] = s.gaps;
            }
            if (times.size() < cfg.timing_min_samples && !times.empty()) {
                const std::size_t have = times.size();
                for (std::size_t k = 0; times.size() < cfg.timing_min_samples; ++k) times.push_back(times[k % have]);
            }
            if (!times.empty()) res.timing.push_back({name, "kpi", median(times), times.size()});
        }
    });

    std::stable_sort(res.timing.begin(), res.timing.end(),
                     [](const TimingEntry& a, const TimingEntry& b) { return a.median_us < b.median_us; });

    nlohmann::json timing = nlohmann::json::array();
    for (const auto& t : res.timing)
        timing.push_back({{"model", t.model}, {"task", t.task}, {"median_us", t.median_us}, {"samples", t.samples}});

    nlohmann::json history = nlohmann::json::array();
    for (const auto& h : res.training.history)
        history.push_back({{"epoch", h.epoch},
                           {"train_loss", h.train_loss},
                           {"train_mape", detail::nan_as_null(h.train_mape)},
                           {"eval_mape", detail::nan_as_null(h.eval_mape)}});

    res.report = {{"format_version", 1},
                  {"dataset",
                   {{"seed", ds.meta.seed},
                    {"config_digest", ds.meta.config_digest},
                    {"rows", ds.sample_count()},
                    {"vnf_count", ds.meta.vnf_count},
                    {"link_count", ds.meta.link_count}}},
                  {"config", to_json(cfg)},
                  {"training", history},
                  {"traffic", traffic},
                  {"kpi", kpi_entries},
                  {"timing", timing}};

    if (out_dir) {
        run_stage("report", [&] {
            const auto& d = *out_dir;
            save_model(model, d / "model.json");
            {
                auto os = open_out(d / "history.csv");
                write_history_csv(res.training.history, os);
            }
            {
                auto os = open_out(d / "forecasts.csv");
                write_forecasts_csv(res.forecasts, os);
            }
            if (cfg.selected("lpkpi")) {
                auto os = open_out(d / "estimates.csv");
                write_estimates_csv(res.estimates.records, os);
            }
            {
                auto os = open_out(d / "traffic_predictions.csv");
                os << "slot,slice,model,predicted,actual\n";
                for (const auto& p : res.traffic_predictions)
                    os << p.slot << ',' << to_string(p.slice) << ',' << p.model << ','
                       << csv::format_double(p.predicted) << ',' << csv::format_double(p.actual) << '\n';
            }
            {
                auto os = open_out(d / "kpi_predictions.csv");
                os << "slot,slice,kpi,model,estimate,actual\n";
                for (const auto& p : res.kpi_predictions)
                    os << p.slot << ',' << to_string(p.slice) << ',' << to_string(p.kpi) << ',' << p.model << ','
                       << csv::format_double(p.estimate) << ',' << csv::format_double(p.actual) << '\n';
            }
            {
                auto os = open_out(d / "gaps.csv");
                os << "model,kpi,n,min,q25,median,q75,max,mean,std\n";
                for (const auto& [key, g] : gap_samples) {
                    double m = 0.0, v = 0.0;
                    for (double x : g) m += x;
                    m /= static_cast<double>(g.size());
                    for (double x : g) v += (x - m) * (x - m);
                    const double sd = g.size() > 1 ? std::sqrt(v / static_cast<double>(g.size() - 1)) : 0.0;
                    os << key.first << ',' << to_string(key.second) << ',' << g.size() << ','
                       << csv::format_double(quantile(g, 0.0)) << ',' << csv::format_double(quantile(g, 0.25)) << ','
                       << csv::format_double(quantile(g, 0.5)) << ',' << csv::format_double(quantile(g, 0.75)) << ','
                       << csv::format_double(quantile(g, 1.0)) << ',' << csv::format_double(m) << ','
                       << csv::format_double(sd) << '\n';
                }
            }
            {
                auto os = open_out(d / "timing.csv");
                os << "model,task,median_us,samples\n";
                for (const auto& t : res.timing)
                    os << t.model << ',' << t.task << ',' << csv::format_double(t.median_us) << ',' << t.samples << '\n';
            }
            write_text(d / "report.json", res.report.dump(2) + "\n");
        });
    }
    return res;
}

/// Human-readable timing table, fastest first.
inline std::string timing_table(std::span<const TimingEntry> t) {
    std::ostringstream os;
    os << "model        task      median_us   samples\n";
    for (const auto& e : t) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-12s %-8s %10.3f %9zu\n", e.model.c_str(), e.task.c_str(), e.median_us,
                      e.samples);
        os << buf;
    }
    return os.str();
}

inline CompareResult cmd_compare(const std::optional<std::filesystem::path>& data, const RunConfig& cfg,
                                 const std::filesystem::path& out_dir) {
    validate(cfg);
    if (!std::filesystem::is_directory(out_dir))
        throw DataError("output directory does not exist: " + out_dir.string());
    Dataset ds;
    if (data) {
        ds = load_dataset(*data);
    } else {
        ds = run_stage("gen", [&] { return generate(cfg.generator); });
        run_stage("gen", [&] { write_csv(ds, out_dir / "dataset.csv"); });
    }
    return run_compare(ds, cfg, out_dir);
}

}  // namespace slicekpi
