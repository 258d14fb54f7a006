#ifndef SC3D_EVAL_TRACKING_HPP
#define SC3D_EVAL_TRACKING_HPP

#include "sc3d/core/types.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sc3d {

struct WindowScore {
    int window_start = 0;
    double score_xy = 0;  // lag-1 strength of x -> y
    double score_yx = 0;  // lag-1 strength of y -> x
    std::optional<int> regime;  // empty when the window straddles a boundary
};

struct TrackingResult {
    std::vector<WindowScore> windows;
    int scored_windows = 0;  // windows inside a single regime
    int correct_windows = 0;
    double accuracy() const { return scored_windows ? static_cast<double>(correct_windows) / scored_windows : 0.0; }
};

// Regime index of time t given sorted boundaries (regime k covers [b_{k-1}, b_k)).
inline int regime_of(int t, const std::vector<int>& boundaries) {
    int r = 0;
    for (int b : boundaries)
        if (t >= b) ++r;
    return r;
}

/// Slides a window of `width` steps with `stride` over trajectory 0, runs
/// `discover` on each slice and records the two directional lag-1 scores
/// between variables 0 (x) and 1 (y). A window counts toward accuracy only if
/// it lies inside one regime; it is correct when the larger score points in
/// the direction `xy_dominant(regime)` predicts.
inline TrackingResult windowed_tracking(const TimeSeriesDataset& ds, int width, int stride,
                                        const std::function<DynamicGraph(const TimeSeriesDataset&)>& discover,
                                        const std::function<bool(int)>& xy_dominant) {
    if (width < 2 || stride < 1) throw Error("tracking: window must be >= 2 and stride >= 1");
    if (ds.dim() < 2) throw Error("tracking: need at least two variables");
    if (ds.horizon() < width)
        throw Error("tracking: no complete window (T=" + std::to_string(ds.horizon()) + " < W=" +
                    std::to_string(width) + ")");
    const std::vector<int> bounds = ds.regime_boundaries.value_or(std::vector<int>{});
    TrackingResult res;
    for (int start = 0; start + width <= ds.horizon(); start += stride) {
        const DynamicGraph g = discover(ds.slice(start, width));
        WindowScore w;
        w.window_start = start;
        w.score_xy = std::abs(g.lag(1)(1, 0));
        w.score_yx = std::abs(g.lag(1)(0, 1));
        const int r0 = regime_of(start, bounds), r1 = regime_of(start + width - 1, bounds);
        if (r0 == r1) {
            w.regime = r0;
            ++res.scored_windows;
            const bool predicted_xy = w.score_xy > w.score_yx;
            if (predicted_xy == xy_dominant(r0) && w.score_xy != w.score_yx) ++res.correct_windows;
        }
        res.windows.push_back(w);
    }
    return res;
}

/// True when the dominant direction changes only next to regime changes:
/// every single-regime window is correct, and the sign sequence switches once
/// per boundary crossed.
inline bool flips_at_boundaries(const TrackingResult& tr, const std::function<bool(int)>& xy_dominant) {
    if (tr.correct_windows != tr.scored_windows) return false;
    int flips = 0, regime_changes = 0;
    std::optional<int> last_regime;
    for (std::size_t k = 0; k < tr.windows.size(); ++k) {
        const auto& w = tr.windows[k];
        if (k > 0 && (w.score_xy > w.score_yx) != (tr.windows[k - 1].score_xy > tr.windows[k - 1].score_yx)) ++flips;
        if (w.regime) {
            if (last_regime && xy_dominant(*w.regime) != xy_dominant(*last_regime)) ++regime_changes;
            last_regime = w.regime;
        }
    }
    return flips == regime_changes;
}

}  // namespace sc3d

#endif  // SC3D_EVAL_TRACKING_HPP
