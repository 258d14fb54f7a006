#ifndef SC3D_DATAGEN_SVAR_HPP
#define SC3D_DATAGEN_SVAR_HPP

#include "sc3d/core/rng.hpp"
#include "sc3d/core/topo.hpp"
#include "sc3d/core/types.hpp"

#include <Eigen/Eigenvalues>

#include <cstdint>
#include <deque>
#include <numeric>
#include <string>

namespace sc3d {

enum class Nonlinearity { linear, tanh };

inline std::string to_string(Nonlinearity n) { return n == Nonlinearity::linear ? "linear" : "tanh"; }

inline Nonlinearity nonlinearity_from_string(const std::string& s) {
    if (s == "linear") return Nonlinearity::linear;
    if (s == "tanh" || s == "nonlinear") return Nonlinearity::tanh;
    throw Error("unknown nonlinearity '" + s + "' (expected linear or tanh)");
}

struct SvarSpec {
    int dim = 10;
    int lag_order = 1;
    double lag_indegree = 1.0;   // expected parents per (node, lag)
    double instant_indegree = 2.0;  // s_inst
    bool instantaneous = true;
    double weight_low = 0.3;
    double weight_high = 0.8;
    double noise_sigma = 1.0;
    Nonlinearity nonlinearity = Nonlinearity::linear;
    int horizon = 200;
    int trajectories = 1;
    std::uint64_t seed = 0;        // structure
    std::uint64_t noise_seed = 0;  // trajectories
    int burn_in = 100;
    double init_sigma = 0.1;
    double max_companion_radius = 0.95;

    void validate() const {
        if (dim < 1 || lag_order < 1) throw Error("SvarSpec: dim and lag_order must be >= 1");
        if (lag_indegree < 0 || instant_indegree < 0) throw Error("SvarSpec: indegrees must be >= 0");
        if (!(0 < weight_low && weight_low <= weight_high)) throw Error("SvarSpec: need 0 < weight_low <= weight_high");
        if (noise_sigma < 0) throw Error("SvarSpec: noise_sigma must be >= 0");
        if (horizon < 1 || trajectories < 1 || burn_in < 0) throw Error("SvarSpec: bad horizon/trajectories/burn_in");
    }
};

// Companion matrix of the lag matrices; with reduced_form the blocks are
// (I - B)^{-1} A_l, otherwise A_l as given.
inline Matrix companion_matrix(const DynamicGraph& g, bool reduced_form = true) {
    const int d = g.dim, L = g.lag_order;
    const Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(d, d) - g.instant_matrix);
    Matrix c = Matrix::Zero(d * L, d * L);
    for (int l = 1; l <= L; ++l) c.block(0, (l - 1) * d, d, d) = reduced_form ? lu.solve(g.lag(l)) : g.lag(l);
    if (L > 1) c.block(d, 0, d * (L - 1), d * (L - 1)).setIdentity();
    return c;
}

inline double spectral_radius_dense(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline double companion_radius(const DynamicGraph& g, bool reduced_form = true) {
    return spectral_radius_dense(companion_matrix(g, reduced_form));
}

/// Random ground-truth SVAR graph. Lagged edges appear independently with
/// probability lag_indegree / d per (node, lag); instantaneous edges follow a
/// random topological order with expected indegree instant_indegree. Weights
/// are uniform on +-[weight_low, weight_high]. All A_l are then shrunk by a
/// common factor until the companion radius is below the bound.
inline DynamicGraph random_svar_graph(const SvarSpec& spec) {
    spec.validate();
    const int d = spec.dim, L = spec.lag_order;
    Rng rng(derive_seed(spec.seed, 0));
    auto weight = [&] {
        const double mag = rng.uniform(spec.weight_low, spec.weight_high);
        return rng.bernoulli(0.5) ? mag : -mag;
    };

    DynamicGraph g(d, L, spec.instantaneous);
    const double p_lag = std::min(1.0, spec.lag_indegree / d);
    for (int l = 1; l <= L; ++l)
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i)
                if (rng.bernoulli(p_lag)) g.lag(l)(j, i) = weight();

    if (spec.instantaneous && d > 1) {
        std::vector<int> order(static_cast<std::size_t>(d));
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        // Each of the d(d-1)/2 order-respecting pairs is an edge with
        // probability 2 s / (d - 1), giving expected indegree s.
        const double p_inst = std::min(1.0, 2.0 * spec.instant_indegree / (d - 1));
        for (int a = 0; a < d; ++a)
            for (int b = a + 1; b < d; ++b)
                if (rng.bernoulli(p_inst))
                    g.instant_matrix(order[static_cast<std::size_t>(b)], order[static_cast<std::size_t>(a)]) = weight();
    }

    // A linear recursion is stable iff the reduced form (I - B)^{-1} A_l is;
    // in tanh mode the lagged inputs are bounded, so the bound is applied to
    // the structural A_l only.
    const bool reduced = spec.nonlinearity == Nonlinearity::linear;
    for (int attempt = 0; companion_radius(g, reduced) >= spec.max_companion_radius; ++attempt) {
        if (attempt >= 200)
            throw Error("random_svar_graph: could not reach companion radius < " +
                        std::to_string(spec.max_companion_radius));
        for (auto& a : g.lag_matrices) a *= 0.95;
    }
    return g;
}

// One step of X_{t+1} = (I - B)^{-1} (sum_l A_l f(X_{t+1-l}) + eps).
// history[0] is X_t, history[l-1] is X_{t+1-l}.
class SvarStepper {
public:
    SvarStepper(const DynamicGraph& g, Nonlinearity f)
        : g_(g), f_(f), lu_(Matrix::Identity(g.dim, g.dim) - g.instant_matrix) {}

    template <class History>
    Vector step(const History& history, const Vector& noise) const {
        Vector rhs = noise;
        for (int l = 1; l <= g_.lag_order; ++l) {
            const Vector& x = history[static_cast<std::size_t>(l - 1)];
            if (f_ == Nonlinearity::linear) rhs += g_.lag(l) * x;
            else rhs += g_.lag(l) * x.array().tanh().matrix();
        }
        return lu_.solve(rhs);
    }

private:
    const DynamicGraph& g_;
    Nonlinearity f_;
    Eigen::PartialPivLU<Matrix> lu_;
};

/// Simulates trajectories of a given SVAR graph. The first L states come from
/// N(0, init_sigma^2), then burn_in steps are discarded before recording T.
inline TimeSeriesDataset simulate_svar(const DynamicGraph& g, Nonlinearity f, int horizon, int trajectories,
                                       double noise_sigma, std::uint64_t noise_seed, int burn_in = 100,
                                       double init_sigma = 0.1) {
    g.validate();
    if (!is_acyclic(g.instant_matrix)) throw Error("simulate_svar: instantaneous graph is cyclic");
    const int d = g.dim, L = g.lag_order;
    TimeSeriesDataset ds(trajectories, horizon, d);
    const SvarStepper stepper(g, f);
    for (int n = 0; n < trajectories; ++n) {
        Rng rng(derive_seed(noise_seed, static_cast<std::uint64_t>(n) + 1));
        std::deque<Vector> hist;  // newest first
        for (int l = 0; l < L; ++l) hist.push_front(gaussian_vector(rng, d, init_sigma));
        for (int step = 0; step < burn_in + horizon; ++step) {
            Vector x = stepper.step(hist, gaussian_vector(rng, d, noise_sigma));
            hist.push_front(std::move(x));
            hist.pop_back();
            if (step >= burn_in) ds.row(n, step - burn_in) = hist.front();
        }
    }
    ds.system_tag = SystemTag::svar;
    ds.truth = g;
    return ds;
}

inline TimeSeriesDataset simulate_svar(const SvarSpec& spec) {
    const DynamicGraph g = random_svar_graph(spec);
    return simulate_svar(g, spec.nonlinearity, spec.horizon, spec.trajectories, spec.noise_sigma, spec.noise_seed,
                         spec.burn_in, spec.init_sigma);
}

}  // namespace sc3d

#endif  // SC3D_DATAGEN_SVAR_HPP
