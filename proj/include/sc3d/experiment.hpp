#ifndef SC3D_EXPERIMENT_HPP
#define SC3D_EXPERIMENT_HPP

#include "sc3d/config.hpp"
#include "sc3d/core/io.hpp"
#include "sc3d/core/parallel.hpp"
#include "sc3d/core/rng.hpp"
#include "sc3d/datagen/lorenz96.hpp"
#include "sc3d/datagen/nc8.hpp"
#include "sc3d/datagen/svar.hpp"
#include "sc3d/datagen/tvsem.hpp"
#include "sc3d/eval/metrics.hpp"
#include "sc3d/eval/tracking.hpp"
#include "sc3d/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sc3d {

// Seed streams derived from one experiment seed.
inline std::uint64_t noise_seed_of(std::uint64_t seed) { return derive_seed(seed, 1); }
inline std::uint64_t training_seed_of(std::uint64_t seed) { return derive_seed(seed, 2); }

/// Simulates the configured system. For svar the structure is drawn from
/// `seed` and the noise from a derived stream.
inline TimeSeriesDataset generate(const GeneratorConfig& g, std::uint64_t seed) {
    switch (g.system) {
        case SystemTag::svar: {
            SvarSpec s;
            s.dim = g.dim;
            s.lag_order = g.lag_order;
            s.lag_indegree = g.lag_indegree;
            s.instant_indegree = g.instant_indegree;
            s.instantaneous = g.instantaneous;
            s.weight_low = g.weight_low;
            s.weight_high = g.weight_high;
            s.noise_sigma = g.noise_sigma;
            s.nonlinearity = g.nonlinearity;
            s.horizon = g.horizon;
            s.trajectories = g.trajectories;
            s.seed = seed;
            s.noise_seed = noise_seed_of(seed);
            return simulate_svar(s);
        }
        case SystemTag::lorenz96: return simulate_lorenz96(g.dim, g.horizon, g.trajectories, seed);
        case SystemTag::nc8: return simulate_nc8(g.horizon, g.trajectories, seed);
        case SystemTag::tvsem: return simulate_tvsem(g.horizon, g.trajectories, seed);
        case SystemTag::external: break;
    }
    throw ConfigError("generate: system 'external' cannot be simulated");
}

// Only the svar generator has instantaneous edges to recover.
inline bool fits_instantaneous(const GeneratorConfig& g) {
    return g.system == SystemTag::svar && g.instantaneous;
}

inline DiscoveryConfig discovery_for(const ExperimentConfig& cfg, Variant v, std::uint64_t seed, int inner_jobs) {
    DiscoveryConfig d = apply_variant(cfg.discovery, v);
    d.stage1.seed = d.stage2.seed = training_seed_of(seed);
    d.stage1.jobs = d.stage2.jobs = inner_jobs;
    d.stage2.hidden_width = d.stage1.hidden_width;
    return d;
}

// ---------------------------------------------------------------- writers

inline std::string fixed6(double v) {
    if (!std::isfinite(v)) return "undefined";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s = buf;
    return s == "-0.000000" ? "0.000000" : s;
}

inline std::string opt_cell(const std::optional<double>& v) { return v ? fixed6(*v) : "undefined"; }

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

inline std::string training_log_csv(const std::vector<Stage2LogRow>& log) {
    std::string out = "epoch,loss,nll,l1_lag,l1_inst,gamma,rho,two_cycle,frozen\n";
    for (const auto& r : log)
        out += std::to_string(r.epoch) + "," + detail::format_double(r.loss) + "," + detail::format_double(r.nll) + "," +
               detail::format_double(r.l1_lag) + "," + detail::format_double(r.l1_inst) + "," +
               detail::format_double(r.gamma) + "," + detail::format_double(r.rho) + "," +
               detail::format_double(r.two_cycle) + "," + (r.frozen ? "1" : "0") + "\n";
    return out;
}

inline std::string tracking_csv(const TrackingResult& tr) {
    std::string out = "window_start,score_xy,score_yx,regime\n";
    for (const auto& w : tr.windows)
        out += std::to_string(w.window_start) + "," + fixed6(w.score_xy) + "," + fixed6(w.score_yx) + "," +
               (w.regime ? std::to_string(*w.regime) : std::string("mixed")) + "\n";
    return out;
}

inline nlohmann::json scores_to_json(const ScoreTable& s) {
    nlohmann::json j;
    j["dim"] = s.dim();
    j["lag_order"] = s.lag_order();
    j["lag_scores"] = nlohmann::json::array();
    for (const auto& m : s.lag_scores) j["lag_scores"].push_back(matrix_to_json(m));
    j["instant_scores"] = matrix_to_json(s.instant_scores);
    return j;
}

inline std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// ------------------------------------------------------------ metric rows

// One row of a metrics CSV: the identity of the run and its report (or the
// failure that prevented one).
struct MetricsRow {
    std::string system;
    std::string variant = "full";
    std::string group;  // sweep value or variant; identifies summary groups
    int dim = 0, lag_order = 0, horizon = 0;
    std::string seed;
    bool ok = false;
    std::string message;
    MetricsReport report;
    std::optional<bool> frozen;
};

inline const std::vector<std::string>& metric_columns() {
    static const std::vector<std::string> cols{"shd_A",   "shd_B",   "shd_total", "f1_B",      "auroc_A",
                                               "auprc_A", "auroc_B", "auprc_B",   "topk_shd_A"};
    return cols;
}

inline std::optional<double> metric_value(const MetricsReport& r, const std::string& col) {
    if (col == "shd_A") return r.shd_A;
    if (col == "shd_B") return r.shd_B;
    if (col == "shd_total") return r.shd_total;
    if (col == "f1_B") return r.f1_B;
    if (col == "auroc_A") return r.auroc_A;
    if (col == "auprc_A") return r.auprc_A;
    if (col == "auroc_B") return r.auroc_B;
    if (col == "auprc_B") return r.auprc_B;
    if (col == "topk_shd_A")
        return r.topk_shd_A ? std::optional<double>(*r.topk_shd_A) : std::nullopt;
    throw Error("unknown metric column '" + col + "'");
}

inline std::string metrics_header() {
    std::string h = "system,variant,group,d,L,T,seed,status,shd_per_lag";
    for (const auto& c : metric_columns()) h += "," + c;
    return h + ",frozen,message\n";
}

inline std::string metrics_row_csv(const MetricsRow& r) {
    std::string out = r.system + "," + r.variant + "," + csv_quote(r.group) + "," + std::to_string(r.dim) + "," +
                      std::to_string(r.lag_order) + "," + std::to_string(r.horizon) + "," + r.seed + "," +
                      (r.ok ? "ok" : "failed") + ",";
    if (!r.ok) {
        out += "undefined";
        for (std::size_t k = 0; k < metric_columns().size(); ++k) out += ",undefined";
        return out + ",undefined," + csv_quote(r.message) + "\n";
    }
    std::string per_lag;
    for (std::size_t l = 0; l < r.report.shd_per_lag.size(); ++l)
        per_lag += (l ? ";" : "") + std::to_string(r.report.shd_per_lag[l]);
    out += per_lag;
    for (const auto& c : metric_columns()) {
        const auto v = metric_value(r.report, c);
        const bool integral = c.rfind("shd", 0) == 0 || c == "topk_shd_A";
        out += "," + (v ? (integral ? std::to_string(static_cast<long>(*v)) : fixed6(*v)) : std::string("undefined"));
    }
    out += "," + (r.frozen ? std::string(*r.frozen ? "1" : "0") : std::string("undefined"));
    return out + "," + csv_quote(r.message) + "\n";
}

struct MeanSd {
    int n = 0;
    double mean = 0, sd = 0;
};

// Mean and sample standard deviation.
inline MeanSd mean_sd(const std::vector<double>& xs) {
    MeanSd m;
    m.n = static_cast<int>(xs.size());
    if (xs.empty()) return m;
    for (double x : xs) m.mean += x;
    m.mean /= m.n;
    if (m.n > 1) {
        double ss = 0;
        for (double x : xs) ss += (x - m.mean) * (x - m.mean);
        m.sd = std::sqrt(ss / (m.n - 1));
    }
    return m;
}

/// Per-group summary line: each metric cell is "mean+-sd" over the group's
/// successful rows ("undefined" when no row defines the metric; the SD part
/// is "undefined" with a single value).
inline std::string summary_row_csv(const std::vector<MetricsRow>& rows) {
    const MetricsRow& head = rows.front();
    int ok = 0;
    for (const auto& r : rows) ok += r.ok;
    std::string out = head.system + "," + head.variant + "," + csv_quote(head.group) + "," + std::to_string(head.dim) +
                      "," + std::to_string(head.lag_order) + "," + std::to_string(head.horizon) + ",summary," +
                      std::to_string(ok) + "/" + std::to_string(rows.size()) + ",undefined";
    for (const auto& c : metric_columns()) {
        std::vector<double> xs;
        for (const auto& r : rows)
            if (r.ok)
                if (auto v = metric_value(r.report, c)) xs.push_back(*v);
        const MeanSd m = mean_sd(xs);
        out += ",";
        if (m.n == 0) out += "undefined";
        else out += fixed6(m.mean) + "+-" + (m.n > 1 ? fixed6(m.sd) : std::string("undefined"));
    }
    return out + ",undefined,\n";
}

/// Rows in order, then one summary row per group in order of first
/// appearance.
inline std::string metrics_csv(const std::vector<MetricsRow>& rows, bool summaries) {
    std::string out = metrics_header();
    for (const auto& r : rows) out += metrics_row_csv(r);
    if (summaries) {
        std::vector<std::string> order;
        std::map<std::string, std::vector<MetricsRow>> groups;
        for (const auto& r : rows) {
            const std::string key = r.variant + "\x1f" + r.group;
            if (!groups.count(key)) order.push_back(key);
            groups[key].push_back(r);
        }
        for (const auto& k : order) out += summary_row_csv(groups[k]);
    }
    return out;
}

// ------------------------------------------------------------------ runs

struct PipelineRun {
    TimeSeriesDataset data;
    DiscoveryResult result;
    std::optional<MetricsReport> metrics;
};

/// Algorithm end to end on one dataset: discovery, then metrics when the
/// dataset carries ground truth.
inline PipelineRun run_pipeline(TimeSeriesDataset ds, int L, bool instantaneous, const DiscoveryConfig& dcfg,
                                const MetricOptions& mopt) {
    PipelineRun run;
    run.result = discover(ds, L, instantaneous, dcfg);
    if (ds.truth) {
        try {
            run.metrics = graph_metrics(run.result.graph, *ds.truth, mopt);
        } catch (const Error& e) {
            throw StageError("evaluate", e.what());
        }
    }
    run.data = std::move(ds);
    return run;
}

/// Writes the artifacts of one run: echoed config, dataset copy, graph
/// JSON, metrics CSV, training log; masks and stage-one scores when
/// `keep_intermediate`.
inline void write_run_dir(const std::filesystem::path& dir, const ExperimentConfig& cfg, const PipelineRun& run,
                          const MetricsRow& row, bool keep_intermediate) {
    std::filesystem::create_directories(dir);
    detail::write_atomically(dir / "config.json", dump_json(to_json(cfg)));
    save_dataset(run.data, dir / "data.csv");
    if (run.data.truth) save_graph(*run.data.truth, dir / "truth.json");
    save_graph(run.result.graph, dir / "graph.json");
    detail::write_atomically(dir / "metrics.csv", metrics_csv({row}, false));
    detail::write_atomically(dir / "train.csv", training_log_csv(run.result.log));
    if (keep_intermediate) {
        DynamicGraph mask_graph(run.result.graph.dim, run.result.graph.lag_order, run.result.graph.instant_enabled);
        for (int l = 1; l <= mask_graph.lag_order; ++l)
            mask_graph.lag(l) = run.result.masks.lag_masks[static_cast<std::size_t>(l - 1)].cast<double>();
        if (mask_graph.instant_enabled) mask_graph.instant_matrix = run.result.masks.instant_mask.cast<double>();
        save_graph(mask_graph, dir / "masks.json");
        detail::write_atomically(dir / "stage1_scores.json", dump_json(scores_to_json(run.result.stage1_scores)));
    }
}

struct Cell {
    GeneratorConfig generator;
    Variant variant = Variant::full;
    std::uint64_t seed = 0;
    std::string group;
};

inline MetricsRow row_skeleton(const Cell& c) {
    MetricsRow r;
    r.system = to_string(c.generator.system);
    r.variant = to_string(c.variant);
    r.group = c.group;
    r.dim = c.generator.system == SystemTag::nc8 ? Nc8::dim : c.generator.system == SystemTag::tvsem ? 2 : c.generator.dim;
    r.lag_order = c.generator.lag_order;
    r.horizon = c.generator.horizon;
    r.seed = std::to_string(c.seed);
    return r;
}

struct CellOptions {
    std::optional<std::filesystem::path> run_dir;  // one subdirectory per cell
    bool keep_intermediate = false;
};

inline std::string cell_dir_name(const MetricsRow& r) {
    std::string g = r.group;
    for (char& ch : g)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '.') ch = '_';
    return r.variant + "_" + g + "_seed" + r.seed;
}

/// Runs every cell (generate, discover, evaluate); failures are recorded in
/// their row and never stop the others. Cells run concurrently with
/// single-threaded inner stages.
inline std::vector<MetricsRow> run_cells(const ExperimentConfig& cfg, const std::vector<Cell>& cells,
                                         const CellOptions& opt = {}) {
    std::vector<MetricsRow> rows(cells.size());
    const int jobs = resolve_jobs(cfg.jobs);
    const int inner = cells.size() > 1 ? 1 : jobs;
    parallel_for(static_cast<int>(cells.size()), jobs, [&](int k) {
        const Cell& c = cells[static_cast<std::size_t>(k)];
        MetricsRow row = row_skeleton(c);
        try {
            TimeSeriesDataset ds;
            try {
                ds = generate(c.generator, c.seed);
            } catch (const Error& e) {
                throw StageError("generate", e.what());
            }
            PipelineRun run = run_pipeline(std::move(ds), c.generator.lag_order, fits_instantaneous(c.generator),
                                           discovery_for(cfg, c.variant, c.seed, inner), cfg.metrics);
            row.ok = run.metrics.has_value();
            if (!row.ok) row.message = "no ground truth";
            else row.report = *run.metrics;
            row.frozen = run.result.freeze.frozen;
            if (opt.run_dir) {
                ExperimentConfig echo = cfg;
                echo.generator = c.generator;
                echo.variant = c.variant;
                echo.seeds = {c.seed};
                write_run_dir(*opt.run_dir / cell_dir_name(row), echo, run, row, opt.keep_intermediate);
            }
        } catch (const std::exception& e) {
            row.ok = false;
            row.message = e.what();
        }
        rows[static_cast<std::size_t>(k)] = std::move(row);
    });
    return rows;
}

enum class SweepKind { d, L };

inline SweepKind sweep_kind_from_string(const std::string& s) {
    if (s == "d") return SweepKind::d;
    if (s == "L") return SweepKind::L;
    throw ConfigError("sweep kind must be 'd' or 'L' (got '" + s + "')");
}

/// One row per (value, seed) plus one summary row per value.
inline std::vector<MetricsRow> sweep(const ExperimentConfig& cfg, SweepKind kind, const std::vector<int>& values,
                                     const CellOptions& opt = {}) {
    if (values.empty()) throw ConfigError("sweep: no values given");
    if (cfg.seeds.empty()) throw ConfigError("sweep: no seeds given");
    std::vector<Cell> cells;
    for (int v : values)
        for (auto s : cfg.seeds) {
            Cell c;
            c.generator = cfg.generator;
            (kind == SweepKind::d ? c.generator.dim : c.generator.lag_order) = v;
            c.variant = cfg.variant;
            c.seed = s;
            c.group = std::string(kind == SweepKind::d ? "d=" : "L=") + std::to_string(v);
            cells.push_back(c);
        }
    return run_cells(cfg, cells, opt);
}

/// Every variant on the same seeds; one summary row per variant.
inline std::vector<MetricsRow> ablate(const ExperimentConfig& cfg, const std::vector<Variant>& variants,
                                      const CellOptions& opt = {}) {
    if (variants.empty()) throw ConfigError("ablate: no variants given");
    if (cfg.seeds.empty()) throw ConfigError("ablate: no seeds given");
    std::vector<Cell> cells;
    for (Variant v : variants)
        for (auto s : cfg.seeds) {
            Cell c;
            c.generator = cfg.generator;
            c.variant = v;
            c.seed = s;
            c.group = to_string(v);
            cells.push_back(c);
        }
    return run_cells(cfg, cells, opt);
}

// Regime-r dominant direction of the TVSEM system: true when x -> y is the
// stronger lag-1 edge.
inline bool tvsem_xy_dominant(int regime) {
    const Matrix a = tvsem_regime_matrix(regime);
    return a(1, 0) > a(0, 1);
}

struct TrackRun {
    std::uint64_t seed = 0;
    TrackingResult result;
    bool flips_ok = false;
};

/// Windowed lag-1 direction tracking on a regime-switching TVSEM trajectory.
/// Windows are fitted with L = 1 and no instantaneous edges.
inline TrackRun track(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.generator.system != SystemTag::tvsem) throw ConfigError("track: only the tvsem system has regimes");
    const TimeSeriesDataset ds = simulate_tvsem(cfg.generator.horizon, cfg.generator.trajectories, seed, 0.1,
                                                cfg.tracking.period);
    DiscoveryConfig dcfg = discovery_for(cfg, cfg.variant, seed, 1);
    if (cfg.tracking.stage1_epochs > 0) dcfg.stage1.epochs = cfg.tracking.stage1_epochs;
    const auto fit = [&](const TimeSeriesDataset& w) { return discover(w, 1, false, dcfg).graph; };
    TrackRun run;
    run.seed = seed;
    run.result = windowed_tracking(ds, cfg.tracking.window, cfg.tracking.stride, fit, tvsem_xy_dominant);
    run.flips_ok = flips_at_boundaries(run.result, tvsem_xy_dominant);
    return run;
}

}  // namespace sc3d

#endif  // SC3D_EXPERIMENT_HPP
