#ifndef SC3D_CORE_TYPES_HPP
#define SC3D_CORE_TYPES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sc3d {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Binary matrices are stored as uint8 so they serialize as 0/1 and never
// pick up rounding noise.
using BinaryMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Every error raised by the library derives from this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

// Matrix convention used everywhere: entry [j, i] is the weight of the edge
// i -> j (row = target, column = source).

struct DynamicGraph {
    int dim = 0;
    int lag_order = 0;
    std::vector<Matrix> lag_matrices;  // A_1 .. A_L
    Matrix instant_matrix;              // B
    bool instant_enabled = false;

    DynamicGraph() = default;
    DynamicGraph(int d, int L, bool instant)
        : dim(d), lag_order(L),
          lag_matrices(static_cast<std::size_t>(L), Matrix::Zero(d, d)),
          instant_matrix(Matrix::Zero(d, d)), instant_enabled(instant) {}

    const Matrix& lag(int l) const { return lag_matrices.at(static_cast<std::size_t>(l - 1)); }
    Matrix& lag(int l) { return lag_matrices.at(static_cast<std::size_t>(l - 1)); }

    void validate() const {
        if (dim <= 0 || lag_order <= 0)
            throw ShapeError("DynamicGraph: dim and lag_order must be positive");
        if (static_cast<int>(lag_matrices.size()) != lag_order)
            throw ShapeError("DynamicGraph: expected " + std::to_string(lag_order) + " lag matrices");
        for (const auto& a : lag_matrices) {
            if (a.rows() != dim || a.cols() != dim)
                throw ShapeError("DynamicGraph: lag matrix has wrong shape");
            if (!a.allFinite()) throw Error("DynamicGraph: non-finite lag weight");
        }
        if (instant_matrix.rows() != dim || instant_matrix.cols() != dim)
            throw ShapeError("DynamicGraph: instant matrix has wrong shape");
        if (!instant_matrix.allFinite()) throw Error("DynamicGraph: non-finite instant weight");
        for (int j = 0; j < dim; ++j)
            if (instant_matrix(j, j) != 0.0) throw Error("DynamicGraph: instant matrix has a self-loop");
        if (!instant_enabled && !instant_matrix.isZero(0.0))
            throw Error("DynamicGraph: instant matrix must be zero when instantaneous edges are disabled");
    }
};

struct EdgeMasks {
    std::vector<BinaryMatrix> lag_masks;
    BinaryMatrix instant_mask;

    static EdgeMasks all_ones(int d, int L, bool instant) {
        EdgeMasks m;
        m.lag_masks.assign(static_cast<std::size_t>(L), BinaryMatrix::Ones(d, d));
        m.instant_mask = instant ? BinaryMatrix::Ones(d, d) : BinaryMatrix::Zero(d, d);
        for (int j = 0; j < d; ++j) m.instant_mask(j, j) = 0;
        return m;
    }

    int dim() const { return static_cast<int>(instant_mask.rows()); }
    int lag_order() const { return static_cast<int>(lag_masks.size()); }

    // Retained fraction of lagged candidates (all d*d*L entries).
    double lag_fraction() const {
        double kept = 0, total = 0;
        for (const auto& m : lag_masks) {
            kept += m.cast<double>().sum();
            total += static_cast<double>(m.size());
        }
        return total > 0 ? kept / total : 0.0;
    }

    // Retained fraction of off-diagonal instantaneous candidates.
    double instant_fraction() const {
        const auto d = static_cast<double>(dim());
        if (d < 2) return 0.0;
        return instant_mask.cast<double>().sum() / (d * (d - 1));
    }
};

enum class SystemTag { svar, lorenz96, tvsem, nc8, external };

inline std::string to_string(SystemTag tag) {
    switch (tag) {
        case SystemTag::svar: return "svar";
        case SystemTag::lorenz96: return "lorenz96";
        case SystemTag::tvsem: return "tvsem";
        case SystemTag::nc8: return "nc8";
        case SystemTag::external: return "external";
    }
    return "external";
}

inline SystemTag system_from_string(const std::string& s) {
    if (s == "svar") return SystemTag::svar;
    if (s == "lorenz96") return SystemTag::lorenz96;
    if (s == "tvsem") return SystemTag::tvsem;
    if (s == "nc8") return SystemTag::nc8;
    if (s == "external") return SystemTag::external;
    throw Error("unknown system '" + s + "'");
}

class TimeSeriesDataset {
public:
    TimeSeriesDataset() = default;
    TimeSeriesDataset(int trajectories, int horizon, int dim)
        : n_(trajectories), t_(horizon), d_(dim),
          values_(static_cast<std::size_t>(trajectories) * horizon * dim, 0.0) {
        if (trajectories <= 0 || horizon <= 0 || dim <= 0)
            throw ShapeError("TimeSeriesDataset: N, T and d must be positive");
    }

    int num_trajectories() const { return n_; }
    int horizon() const { return t_; }
    int dim() const { return d_; }

    double& at(int traj, int t, int var) { return values_[index(traj, t, var)]; }
    double at(int traj, int t, int var) const { return values_[index(traj, t, var)]; }

    Eigen::Map<Vector> row(int traj, int t) {
        return Eigen::Map<Vector>(values_.data() + index(traj, t, 0), d_);
    }
    Eigen::Map<const Vector> row(int traj, int t) const {
        return Eigen::Map<const Vector>(values_.data() + index(traj, t, 0), d_);
    }

    const std::vector<double>& values() const { return values_; }

    SystemTag system_tag = SystemTag::external;
    std::optional<DynamicGraph> truth;
    std::optional<std::vector<int>> regime_boundaries;

    void validate() const {
        if (values_.size() != static_cast<std::size_t>(n_) * t_ * d_)
            throw ShapeError("TimeSeriesDataset: value count does not match N*T*d");
        for (double v : values_)
            if (!std::isfinite(v)) throw Error("TimeSeriesDataset: non-finite value");
        if (truth) {
            if (truth->dim != d_) throw ShapeError("TimeSeriesDataset: truth dim differs from data dim");
            truth->validate();
        }
        if (regime_boundaries) {
            int prev = -1;
            for (int b : *regime_boundaries) {
                if (b <= prev || b >= t_)
                    throw Error("TimeSeriesDataset: regime boundaries must be strictly increasing and < T");
                prev = b;
            }
        }
    }

    // Copy of time steps [start, start + length) of every trajectory.
    TimeSeriesDataset slice(int start, int length) const {
        if (start < 0 || length <= 0 || start + length > t_)
            throw ShapeError("TimeSeriesDataset::slice out of range");
        TimeSeriesDataset out(n_, length, d_);
        for (int n = 0; n < n_; ++n)
            for (int t = 0; t < length; ++t) out.row(n, t) = row(n, start + t);
        out.system_tag = system_tag;
        out.truth = truth;
        return out;
    }

private:
    std::size_t index(int traj, int t, int var) const {
        return (static_cast<std::size_t>(traj) * t_ + t) * d_ + var;
    }

    int n_ = 0, t_ = 0, d_ = 0;
    std::vector<double> values_;
};

}  // namespace sc3d

#endif  // SC3D_CORE_TYPES_HPP
