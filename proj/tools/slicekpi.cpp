// slicekpi: gen | train | forecast | estimate | compare

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <slicekpi/slicekpi.hpp>

namespace fs = std::filesystem;
using namespace slicekpi;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::string data;
    std::string model;
    std::string forecasts;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> epochs;
    std::vector<std::string> kpis;
    std::vector<std::string> models;
    std::optional<double> dbar;
};

RunConfig resolve(const Options& o) {
    RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
    if (o.seed) c.apply_seed(*o.seed);
    if (o.epochs) c.train.epochs = *o.epochs;
    if (!o.kpis.empty()) c.kpis = parse_kpi_list(o.kpis);
    if (!o.models.empty()) c.models = o.models;
    if (o.dbar) c.metrics.dbar = *o.dbar;
    validate(c);
    return c;
}

std::string pick(const std::string& flag, const std::string& from_config, const char* what) {
    if (!flag.empty()) return flag;
    if (!from_config.empty()) return from_config;
    throw ConfigError(std::string("no ") + what + " path given");
}

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::Config: return 2;
        case ErrorKind::Data: return 3;
        case ErrorKind::Numerical: return 4;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Network-slice KPI prediction lab"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* s) {
        s->add_option("--config", o.config, "run configuration (JSON)");
        s->add_option("--out", o.out, "output path");
        s->add_option("--seed", o.seed, "seed for generation, training and resampling");
        s->add_option("--epochs", o.epochs, "training epochs");
        s->add_option("--kpi", o.kpis, "KPIs: delay,packet_loss,jitter")->delimiter(',');
        s->add_option("--models", o.models, "models to compare")->delimiter(',');
        s->add_option("--dbar", o.dbar, "over-provisioning limit");
        s->add_option("--data", o.data, "dataset CSV");
    };

    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    auto* trn = app.add_subcommand("train", "train the LSTM forecaster on day 1");
    auto* fct = app.add_subcommand("forecast", "forecast eval-day throughput");
    auto* est = app.add_subcommand("estimate", "LP-KPI estimates for the eval day");
    auto* cmp = app.add_subcommand("compare", "end-to-end comparison report");
    for (auto* s : {gen, trn, fct, est, cmp}) common(s);
    fct->add_option("--model", o.model, "model file");
    trn->add_option("--model", o.model, "model output (alias of --out)");
    est->add_option("--forecasts", o.forecasts, "forecast CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const RunConfig cfg = resolve(o);
        if (*gen) {
            cmd_gen(cfg, pick(o.out, cfg.data_path, "output"));
        } else if (*trn) {
            const fs::path model_out = !o.out.empty() ? fs::path(o.out) : fs::path(pick(o.model, cfg.model_path, "model"));
            auto r = cmd_train(pick(o.data, cfg.data_path, "data"), cfg, model_out);
            std::cout << "epochs " << r.history.size() << ", eval MAPE " << r.history.back().eval_mape << "%\n";
        } else if (*fct) {
            auto r = cmd_forecast(pick(o.model, cfg.model_path, "model"), pick(o.data, cfg.data_path, "data"),
                                  pick(o.out, cfg.out_path, "output"));
            std::cout << "forecasts " << r.rows.size() << ", MAPE " << csv::format_double(r.mape.percent) << "% ("
                      << r.mape.excluded_zero << " zero-actual slots excluded)\n";
        } else if (*est) {
            auto r = cmd_estimate(pick(o.data, cfg.data_path, "data"), pick(o.forecasts, "", "forecasts"), cfg,
                                  pick(o.out, cfg.out_path, "output"));
            std::cout << "estimates " << r.records.size();
            for (const auto& [s, n] : r.status_counts) std::cout << ", " << s << " " << n;
            std::cout << '\n';
        } else if (*cmp) {
            std::optional<fs::path> data;
            if (!o.data.empty()) data = o.data;
            else if (!cfg.data_path.empty()) data = cfg.data_path;
            auto r = cmd_compare(data, cfg, pick(o.out, cfg.out_path, "output directory"));
            std::cout << timing_table(r.timing);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
