#ifndef SC3D_STAGE1_DESIGN_HPP
#define SC3D_STAGE1_DESIGN_HPP

#include "sc3d/core/types.hpp"
#include "sc3d/predictor/node_predictor.hpp"

#include <string>
#include <vector>

namespace sc3d {

enum class Standardize { automatic, per_variable, pooled, none };

inline std::string to_string(Standardize s) {
    switch (s) {
        case Standardize::automatic: return "auto";
        case Standardize::per_variable: return "per-variable";
        case Standardize::pooled: return "pooled";
        case Standardize::none: return "none";
    }
    return "none";
}

inline Standardize standardize_from_string(const std::string& s) {
    if (s == "auto") return Standardize::automatic;
    if (s == "per-variable") return Standardize::per_variable;
    if (s == "pooled") return Standardize::pooled;
    if (s == "none") return Standardize::none;
    throw Error("unknown standardization '" + s + "' (auto, per-variable, pooled, none)");
}

// auto: z-score each variable for lag-only models; with instantaneous
// inputs use the pooled scale, since per-variable z-scoring erases the
// variance ordering that orients contemporaneous edges.
inline Standardize resolve_standardize(Standardize mode, bool instantaneous) {
    if (mode != Standardize::automatic) return mode;
    return instantaneous ? Standardize::pooled : Standardize::per_variable;
}

// Affine per-variable transform fitted once and reused by both stages.
// per_variable: z-score each variable. pooled: center each variable and
// divide all by one pooled standard deviation (keeps relative scales).
struct Standardizer {
    Vector mean;
    Vector scale;

    static Standardizer fit(const TimeSeriesDataset& ds, Standardize mode) {
        if (mode == Standardize::automatic) throw Error("Standardizer::fit: resolve 'auto' first");
        const int d = ds.dim();
        Standardizer s{Vector::Zero(d), Vector::Ones(d)};
        if (mode == Standardize::none) return s;
        const double count = static_cast<double>(ds.num_trajectories()) * ds.horizon();
        Vector sum = Vector::Zero(d), sq = Vector::Zero(d);
        for (int n = 0; n < ds.num_trajectories(); ++n)
            for (int t = 0; t < ds.horizon(); ++t) sum += ds.row(n, t);
        s.mean = sum / count;
        for (int n = 0; n < ds.num_trajectories(); ++n)
            for (int t = 0; t < ds.horizon(); ++t) sq += (ds.row(n, t) - s.mean).cwiseAbs2();
        const Vector var = sq / count;
        if (mode == Standardize::per_variable) {
            for (int i = 0; i < d; ++i) s.scale[i] = var[i] > 0 ? std::sqrt(var[i]) : 1.0;
        } else {
            const double pooled = std::sqrt(var.mean());
            s.scale.setConstant(pooled > 0 ? pooled : 1.0);
        }
        return s;
    }

    TimeSeriesDataset apply(const TimeSeriesDataset& ds) const {
        TimeSeriesDataset out = ds;
        for (int n = 0; n < ds.num_trajectories(); ++n)
            for (int t = 0; t < ds.horizon(); ++t)
                out.row(n, t) = (ds.row(n, t) - mean).cwiseQuotient(scale);
        return out;
    }
};

/// Lagged/contemporaneous design shared by every node.
///
/// Row r corresponds to one (trajectory, t) with t in [L, T-2]; the target
/// slice is X_{t+1}. Column (l-1)*d + i holds X_{t+1-l}^i and, when
/// instantaneous inputs are enabled, column d*L + i holds X_{t+1}^i.
struct Design {
    int dim = 0;
    int lag_order = 0;
    bool instantaneous = false;
    Matrix inputs;   // n x (dL [+ d])
    Matrix targets;  // n x d

    int rows() const { return static_cast<int>(targets.rows()); }

    // Window matrix for node j laid out as window_groups(d, L, inst, j).
    Matrix node_inputs(int j) const {
        const int dl = dim * lag_order;
        if (!instantaneous) return inputs.leftCols(dl);
        Matrix x(inputs.rows(), dl + dim - 1);
        x.leftCols(dl) = inputs.leftCols(dl);
        int c = dl;
        for (int i = 0; i < dim; ++i)
            if (i != j) x.col(c++) = inputs.col(dl + i);
        return x;
    }
};

inline Design build_design(const TimeSeriesDataset& ds, int L, bool instantaneous) {
    if (L < 1) throw Error("build_design: lag order must be >= 1");
    const int T = ds.horizon(), d = ds.dim();
    if (T <= L + 1)
        throw Error("build_design: horizon T=" + std::to_string(T) + " must exceed L+1=" + std::to_string(L + 1));
    const int per_traj = T - L - 1;
    const int n = ds.num_trajectories() * per_traj;
    Design des;
    des.dim = d;
    des.lag_order = L;
    des.instantaneous = instantaneous;
    des.inputs.resize(n, d * L + (instantaneous ? d : 0));
    des.targets.resize(n, d);
    int r = 0;
    for (int traj = 0; traj < ds.num_trajectories(); ++traj) {
        for (int t = L; t <= T - 2; ++t, ++r) {
            for (int l = 1; l <= L; ++l) des.inputs.row(r).segment((l - 1) * d, d) = ds.row(traj, t + 1 - l).transpose();
            if (instantaneous) des.inputs.row(r).segment(d * L, d) = ds.row(traj, t + 1).transpose();
            des.targets.row(r) = ds.row(traj, t + 1).transpose();
        }
    }
    return des;
}

}  // namespace sc3d

#endif  // SC3D_STAGE1_DESIGN_HPP
