#ifndef SC3D_PIPELINE_HPP
#define SC3D_PIPELINE_HPP

#include "sc3d/core/types.hpp"
#include "sc3d/stage1/design.hpp"
#include "sc3d/stage1/stage1.hpp"
#include "sc3d/stage2/stage2.hpp"

#include <string>
#include <vector>

namespace sc3d {

enum class Variant { full, linear, no_freeze, no_2cycle, no_stage1 };

inline std::string to_string(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::linear: return "linear";
        case Variant::no_freeze: return "no-freeze";
        case Variant::no_2cycle: return "no-2cycle";
        case Variant::no_stage1: return "no-stage1";
    }
    return "full";
}

inline Variant variant_from_string(const std::string& s) {
    for (Variant v : {Variant::full, Variant::linear, Variant::no_freeze, Variant::no_2cycle, Variant::no_stage1})
        if (to_string(v) == s) return v;
    throw Error("unknown variant '" + s + "' (full, linear, no-freeze, no-2cycle, no-stage1)");
}

struct DiscoveryConfig {
    Standardize standardize = Standardize::automatic;
    Stage1Config stage1;
    Stage2Config stage2;
};

// Flags for one ablation variant on top of a base config.
inline DiscoveryConfig apply_variant(DiscoveryConfig cfg, Variant v) {
    switch (v) {
        case Variant::full: break;
        case Variant::linear:
            cfg.stage1.linear_predictor = true;
            cfg.stage2.linear_predictor = true;
            break;
        case Variant::no_freeze: cfg.stage2.freeze_enabled = false; break;
        case Variant::no_2cycle: cfg.stage2.two_cycle_enabled = false; break;
        case Variant::no_stage1: cfg.stage2.use_stage1_masks = false; break;
    }
    return cfg;
}

struct DiscoveryResult {
    DynamicGraph graph;
    Standardizer standardizer;
    EdgeMasks masks;  // masks handed to stage two
    ScoreTable stage1_scores;
    FreezeState freeze;
    std::vector<Stage2LogRow> log;
};

class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& what) : Error(stage + ": " + what) {}
};

/// Standardize -> stage one -> masks -> stage two. Without stage-one masks
/// the second stage starts from all-ones masks and a fresh initialization.
inline DiscoveryResult discover(const TimeSeriesDataset& raw, int L, bool instantaneous, DiscoveryConfig cfg) {
    cfg.stage1.instantaneous = instantaneous;
    DiscoveryResult out;
    Design des;
    try {
        raw.validate();
        out.standardizer = Standardizer::fit(raw, resolve_standardize(cfg.standardize, instantaneous));
        des = build_design(out.standardizer.apply(raw), L, instantaneous);
    } catch (const Error& e) {
        throw StageError("design", e.what());
    }
    Stage1Result s1;
    if (cfg.stage2.use_stage1_masks) {
        try {
            s1 = run_stage1(des, cfg.stage1);
        } catch (const Error& e) {
            throw StageError("stage 1", e.what());
        }
        out.masks = s1.masks;
        out.stage1_scores = s1.scores;
    } else {
        out.masks = EdgeMasks::all_ones(raw.dim(), L, instantaneous);
        out.stage1_scores = ScoreTable(raw.dim(), L);
    }
    try {
        Stage2Result s2 = run_stage2(des, out.masks, cfg.stage2.use_stage1_masks ? &s1.predictors : nullptr, cfg.stage2);
        out.graph = std::move(s2.graph);
        out.freeze = s2.freeze;
        out.log = std::move(s2.log);
    } catch (const Error& e) {
        throw StageError("stage 2", e.what());
    }
    return out;
}

}  // namespace sc3d

#endif  // SC3D_PIPELINE_HPP
