#ifndef SC3D_DATAGEN_NC8_HPP
#define SC3D_DATAGEN_NC8_HPP

#include "sc3d/core/rng.hpp"
#include "sc3d/core/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>

namespace sc3d {

// Committed NC8 system (d = 8, L = 4). This table fixes the structure; it is
// the ground truth the NC8 benchmark is scored against.
//
// Linear part: A^(l) = W / (l + 1) for l = 1..4 with
//   W[j,j] = 0.3 for j != 4                 (self memory)
//   0 -> 1 -> 2 -> 3 -> 0 ring, weight 0.45
//   5 -> 7 skip, weight 0.45
// Nonlinear part Phi(x_{t-1}, t), all at lag 1:
//   x4 <- 1.0 * sin(2 pi t / 20)           exogenous driver, no parents
//   x5 <- 1.0 * tanh(x4)                   tanh
//   x6 <- 1.0 * sin(x5)                    sinusoidal coupling
//   x7 <- 1.0 * softcubic(2 x6)            z^3 / (1 + |z|)
//   x2 <- 0.8 * max(x7, 0)                 rectified
// x_t = clamp(sum_l A^(l) x_{t-l} + Phi(x_{t-1}, t) + eps_t, -5, 5).
struct Nc8 {
    static constexpr int dim = 8;
    static constexpr int lag_order = 4;
    static constexpr double noise_sigma = 0.1;
    static constexpr double clamp_bound = 5.0;
    static constexpr int driver_period = 20;
    static constexpr int burn_in = 100;

    static double softcubic(double z) { return z * z * z / (1.0 + std::abs(z)); }

    static double driver(int t) { return std::sin(2.0 * std::numbers::pi * t / driver_period); }

    static Matrix base_weights() {
        Matrix w = Matrix::Zero(dim, dim);
        for (int j = 0; j < dim; ++j)
            if (j != 4) w(j, j) = 0.3;
        w(1, 0) = 0.45;
        w(2, 1) = 0.45;
        w(3, 2) = 0.45;
        w(0, 3) = 0.45;
        w(7, 5) = 0.45;
        return w;
    }

    static Matrix lag_matrix(int l) { return base_weights() / static_cast<double>(l + 1); }

    static Vector phi(const Vector& prev, int t) {
        Vector out = Vector::Zero(dim);
        out[4] = driver(t);
        out[5] = std::tanh(prev[4]);
        out[6] = std::sin(prev[5]);
        out[7] = softcubic(2.0 * prev[6]);
        out[2] = 0.8 * std::max(prev[7], 0.0);
        return out;
    }

    // history[0] = x_{t-1}, ..., history[3] = x_{t-4}.
    template <class History>
    static Vector step(const History& history, int t, const Vector& noise) {
        Vector x = phi(history[0], t) + noise;
        for (int l = 1; l <= lag_order; ++l) x += lag_matrix(l) * history[static_cast<std::size_t>(l - 1)];
        return x.cwiseMax(-clamp_bound).cwiseMin(clamp_bound);
    }

    static DynamicGraph truth() {
        DynamicGraph g(dim, lag_order, false);
        for (int l = 1; l <= lag_order; ++l) g.lag(l) = lag_matrix(l);
        g.lag(1)(5, 4) += 1.0;
        g.lag(1)(6, 5) += 1.0;
        g.lag(1)(7, 6) += 1.0;
        g.lag(1)(2, 7) += 0.8;
        return g;
    }
};

inline TimeSeriesDataset simulate_nc8(int horizon, int trajectories, std::uint64_t seed) {
    if (horizon < 1 || trajectories < 1) throw Error("simulate_nc8: T and N must be >= 1");
    constexpr int d = Nc8::dim;
    TimeSeriesDataset ds(trajectories, horizon, d);
    for (int n = 0; n < trajectories; ++n) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(n) + 1));
        std::deque<Vector> hist(Nc8::lag_order, Vector::Zero(d));
        for (int step = 0; step < Nc8::burn_in + horizon; ++step) {
            Vector x = Nc8::step(hist, step, gaussian_vector(rng, d, Nc8::noise_sigma));
            hist.push_front(std::move(x));
            hist.pop_back();
            if (step >= Nc8::burn_in) ds.row(n, step - Nc8::burn_in) = hist.front();
        }
    }
    ds.system_tag = SystemTag::nc8;
    ds.truth = Nc8::truth();
    return ds;
}

}  // namespace sc3d

#endif  // SC3D_DATAGEN_NC8_HPP
