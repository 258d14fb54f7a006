// sc3d command-line front end: generate, discover, evaluate, sweep, ablate, track.

#include "sc3d/sc3d.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace sc3d;

struct Common {
    std::string config_path;
    std::optional<int> jobs;
};

struct GenFlags {
    std::optional<std::string> system, nonlinearity;
    std::optional<int> d, L, T, N;
    std::optional<bool> instantaneous;
};

void add_gen_flags(CLI::App* app, GenFlags& g, bool with_L = true) {
    app->add_option("--system", g.system, "svar | lorenz96 | nc8 | tvsem");
    app->add_option("--d", g.d, "number of variables");
    if (with_L) app->add_option("--L", g.L, "lag order");
    app->add_option("--T", g.T, "time steps per trajectory");
    app->add_option("--N", g.N, "number of trajectories");
    app->add_option("--nonlinearity", g.nonlinearity, "linear | tanh (svar)");
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
    std::vector<std::uint64_t> out;
    if (s.find(',') == std::string::npos) {
        const int n = std::stoi(s);
        if (n < 1) throw ConfigError("--seeds: count must be >= 1");
        for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint64_t>(i));
        return out;
    }
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoull(tok));
    return out;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

// Config file first, then any flag given on the command line.
ExperimentConfig build_config(const Common& c, const GenFlags& g) {
    ExperimentConfig cfg;
    if (!c.config_path.empty()) cfg = load_config(c.config_path);
    if (g.system) cfg.generator.system = system_from_string(*g.system);
    if (g.nonlinearity) cfg.generator.nonlinearity = nonlinearity_from_string(*g.nonlinearity);
    if (g.d) cfg.generator.dim = *g.d;
    if (g.L) cfg.generator.lag_order = *g.L;
    if (g.T) cfg.generator.horizon = *g.T;
    if (g.N) cfg.generator.trajectories = *g.N;
    if (g.instantaneous) cfg.generator.instantaneous = *g.instantaneous;
    if (c.jobs) cfg.jobs = *c.jobs;
    return cfg;
}

int finish_rows(const std::vector<MetricsRow>& rows, const std::string& out, bool summaries) {
    detail::write_atomically(out, metrics_csv(rows, summaries));
    int failed = 0;
    for (const auto& r : rows)
        if (!r.ok) {
            ++failed;
            std::cerr << "row " << r.variant << " " << r.group << " seed " << r.seed << " failed: " << r.message
                      << "\n";
        }
    std::cerr << rows.size() - static_cast<std::size_t>(failed) << "/" << rows.size() << " rows completed -> " << out
              << "\n";
    return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sc3d: two-stage temporal causal discovery"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--config", common.config_path, "experiment config JSON (flags override it)")->check(CLI::ExistingFile);
    app.add_option("--jobs", common.jobs, "worker threads (default: SC3D_JOBS or all cores)");

    // generate
    auto* gen = app.add_subcommand("generate", "simulate a benchmark dataset");
    GenFlags gen_flags;
    std::uint64_t gen_seed = 0;
    std::string gen_out, gen_truth_out;
    bool gen_no_inst = false;
    add_gen_flags(gen, gen_flags);
    gen->add_option("--seed", gen_seed, "experiment seed");
    gen->add_flag("--no-instantaneous", gen_no_inst, "svar without instantaneous edges");
    gen->add_option("--out", gen_out, "dataset CSV")->required();
    gen->add_option("--truth-out", gen_truth_out, "ground-truth graph JSON");

    // discover
    auto* disc = app.add_subcommand("discover", "run both stages on a dataset CSV");
    std::string disc_data, disc_out, disc_log, disc_scores, disc_truth, disc_run_dir, disc_variant = "";
    std::optional<int> disc_L;
    std::optional<std::uint64_t> disc_seed;
    bool disc_inst = false, disc_keep = false;
    disc->add_option("--data", disc_data, "dataset CSV")->required()->check(CLI::ExistingFile);
    disc->add_option("--L", disc_L, "lag order");
    disc->add_flag("--instantaneous", disc_inst, "also learn instantaneous edges");
    disc->add_option("--out", disc_out, "estimated graph JSON")->required();
    disc->add_option("--log", disc_log, "stage-two training log CSV");
    disc->add_option("--scores-out", disc_scores, "stage-one score JSON");
    disc->add_option("--truth", disc_truth, "ground-truth graph JSON for metrics")->check(CLI::ExistingFile);
    disc->add_option("--variant", disc_variant, "full | linear | no-freeze | no-2cycle | no-stage1");
    disc->add_option("--seed", disc_seed, "training seed");
    disc->add_option("--run-dir", disc_run_dir, "write every run artifact here");
    disc->add_flag("--keep-intermediate", disc_keep, "also write masks and stage-one scores to the run dir");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "score an estimated graph against ground truth");
    std::string ev_est, ev_truth, ev_out;
    std::optional<int> ev_topk;
    std::optional<double> ev_tol;
    bool ev_keep_self = false;
    eval->add_option("--est", ev_est, "estimated graph JSON")->required()->check(CLI::ExistingFile);
    eval->add_option("--truth", ev_truth, "ground-truth graph JSON")->required()->check(CLI::ExistingFile);
    eval->add_option("--out", ev_out, "metrics CSV")->required();
    eval->add_option("--topk", ev_topk, "also report top-k SHD_A");
    eval->add_option("--tol", ev_tol, "binarization tolerance");
    eval->add_flag("--include-self-lags", ev_keep_self, "rank self-lag pairs too");

    // sweep
    auto* sw = app.add_subcommand("sweep", "vary d or L over seeds");
    GenFlags sw_flags;
    std::string sw_kind = "d", sw_values = "10,20,30,40,50", sw_seeds, sw_out, sw_variant, sw_run_dir;
    bool sw_keep = false;
    add_gen_flags(sw, sw_flags);
    sw->add_option("--kind", sw_kind, "d | L");
    sw->add_option("--values", sw_values, "comma-separated values");
    sw->add_option("--seeds", sw_seeds, "seed count or comma-separated seed list");
    sw->add_option("--variant", sw_variant, "method variant");
    sw->add_option("--out", sw_out, "results CSV")->required();
    sw->add_option("--run-dir", sw_run_dir, "per-cell artifact directory");
    sw->add_flag("--keep-intermediate", sw_keep, "also write masks and stage-one scores");

    // ablate
    auto* ab = app.add_subcommand("ablate", "compare method variants");
    GenFlags ab_flags;
    std::string ab_variants = "full,linear,no-freeze,no-2cycle,no-stage1", ab_seeds, ab_out, ab_run_dir;
    bool ab_keep = false;
    add_gen_flags(ab, ab_flags);
    ab->add_option("--variants", ab_variants, "comma-separated variants");
    ab->add_option("--seeds", ab_seeds, "seed count or comma-separated seed list");
    ab->add_option("--out", ab_out, "results CSV")->required();
    ab->add_option("--run-dir", ab_run_dir, "per-cell artifact directory");
    ab->add_flag("--keep-intermediate", ab_keep, "also write masks and stage-one scores");

    // track
    auto* tr = app.add_subcommand("track", "windowed direction tracking on TVSEM");
    GenFlags tr_flags;
    std::optional<int> tr_window, tr_stride, tr_period;
    std::optional<std::uint64_t> tr_seed;
    std::string tr_out;
    tr->add_option("--system", tr_flags.system, "tvsem");
    tr->add_option("--T", tr_flags.T, "time steps");
    tr->add_option("--window", tr_window, "window width");
    tr->add_option("--stride", tr_stride, "window stride");
    tr->add_option("--period", tr_period, "regime length");
    tr->add_option("--seed", tr_seed, "seed");
    tr->add_option("--out", tr_out, "tracking CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            if (gen_no_inst) gen_flags.instantaneous = false;
            const ExperimentConfig cfg = build_config(common, gen_flags);
            const TimeSeriesDataset ds = generate(cfg.generator, gen_seed);
            save_dataset(ds, gen_out);
            if (!gen_truth_out.empty() && ds.truth) save_graph(*ds.truth, gen_truth_out);
            return 0;
        }
        if (*disc) {
            ExperimentConfig cfg = build_config(common, {});
            if (disc_L) cfg.generator.lag_order = *disc_L;
            if (!disc_variant.empty()) cfg.variant = variant_from_string(disc_variant);
            const std::uint64_t seed = disc_seed ? *disc_seed : cfg.seeds.front();
            TimeSeriesDataset ds = load_dataset(disc_data);
            if (!disc_truth.empty()) ds.truth = load_graph(disc_truth).graph;
            const DiscoveryConfig dcfg = discovery_for(cfg, cfg.variant, seed, resolve_jobs(cfg.jobs));
            const PipelineRun run = run_pipeline(std::move(ds), cfg.generator.lag_order, disc_inst, dcfg, cfg.metrics);
            save_graph(run.result.graph, disc_out);
            if (!disc_log.empty()) detail::write_atomically(disc_log, training_log_csv(run.result.log));
            if (!disc_scores.empty())
                detail::write_atomically(disc_scores, dump_json(scores_to_json(run.result.stage1_scores)));
            MetricsRow row;
            row.system = "external";
            row.variant = to_string(cfg.variant);
            row.group = to_string(cfg.variant);
            row.dim = run.data.dim();
            row.lag_order = cfg.generator.lag_order;
            row.horizon = run.data.horizon();
            row.seed = std::to_string(seed);
            row.ok = run.metrics.has_value();
            if (row.ok) row.report = *run.metrics;
            else row.message = "no ground truth";
            row.frozen = run.result.freeze.frozen;
            if (!disc_run_dir.empty()) {
                ExperimentConfig echo = cfg;
                echo.seeds = {seed};
                write_run_dir(disc_run_dir, echo, run, row, disc_keep);
            }
            if (run.metrics) std::cout << metrics_csv({row}, false);
            return 0;
        }
        if (*eval) {
            const GraphFile est = load_graph(ev_est), truth = load_graph(ev_truth);
            MetricOptions opt;
            if (!common.config_path.empty()) opt = load_config(common.config_path).metrics;
            if (ev_topk) opt.topk = *ev_topk;
            if (ev_tol) opt.tol = *ev_tol;
            if (ev_keep_self) opt.exclude_self_lags = false;
            MetricsRow row;
            row.system = "external";
            row.group = "evaluate";
            row.dim = est.graph.dim;
            row.lag_order = est.graph.lag_order;
            row.seed = "undefined";
            row.report = graph_metrics(est.graph, truth.graph, opt);
            row.ok = true;
            detail::write_atomically(ev_out, metrics_csv({row}, false));
            return 0;
        }
        if (*sw) {
            ExperimentConfig cfg = build_config(common, sw_flags);
            if (!sw_seeds.empty()) cfg.seeds = parse_seeds(sw_seeds);
            if (!sw_variant.empty()) cfg.variant = variant_from_string(sw_variant);
            std::vector<int> values;
            for (const auto& v : split(sw_values)) values.push_back(std::stoi(v));
            CellOptions opt;
            if (!sw_run_dir.empty()) opt.run_dir = sw_run_dir;
            opt.keep_intermediate = sw_keep;
            return finish_rows(sweep(cfg, sweep_kind_from_string(sw_kind), values, opt), sw_out, true);
        }
        if (*ab) {
            ExperimentConfig cfg = build_config(common, ab_flags);
            if (!ab_seeds.empty()) cfg.seeds = parse_seeds(ab_seeds);
            std::vector<Variant> variants;
            for (const auto& v : split(ab_variants)) variants.push_back(variant_from_string(v));
            CellOptions opt;
            if (!ab_run_dir.empty()) opt.run_dir = ab_run_dir;
            opt.keep_intermediate = ab_keep;
            return finish_rows(ablate(cfg, variants, opt), ab_out, true);
        }
        if (*tr) {
            ExperimentConfig cfg = build_config(common, tr_flags);
            if (!tr_flags.system) cfg.generator.system = SystemTag::tvsem;
            if (!tr_flags.T && common.config_path.empty()) cfg.generator.horizon = 800;
            if (tr_window) cfg.tracking.window = *tr_window;
            if (tr_stride) cfg.tracking.stride = *tr_stride;
            if (tr_period) cfg.tracking.period = *tr_period;
            const TrackRun run = track(cfg, tr_seed ? *tr_seed : cfg.seeds.front());
            detail::write_atomically(tr_out, tracking_csv(run.result));
            std::fprintf(stderr, "directional accuracy %.6f (%d/%d windows), flips at boundaries: %s\n",
                         run.result.accuracy(), run.result.correct_windows, run.result.scored_windows,
                         run.flips_ok ? "yes" : "no");
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "sc3d: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
