#ifndef SC3D_DATAGEN_TVSEM_HPP
#define SC3D_DATAGEN_TVSEM_HPP

#include "sc3d/core/rng.hpp"
#include "sc3d/core/types.hpp"

#include <cstdint>

namespace sc3d {

// Two-variable regime-switching VAR(1); variable 0 is x, variable 1 is y.
// Regime 0: y -> x 0.8, x -> y 0.1. Regime 1: y -> x 0.2, x -> y 0.7.
// Diagonal entries are zero.
inline Matrix tvsem_regime_matrix(int regime) {
    Matrix a = Matrix::Zero(2, 2);
    if (regime % 2 == 0) {
        a(0, 1) = 0.8;
        a(1, 0) = 0.1;
    } else {
        a(0, 1) = 0.2;
        a(1, 0) = 0.7;
    }
    return a;
}

inline int tvsem_regime_at(int t, int period) { return (t / period) % 2; }

/// x_t = A^(s_t) x_{t-1} + eps_t with s_t switching every `period` steps.
/// x_0 = eps_0. The attached truth carries the regime-0 weights (both regimes
/// share the same skeleton).
inline TimeSeriesDataset simulate_tvsem(int horizon, int trajectories, std::uint64_t seed, double sigma = 0.1,
                                        int period = 200) {
    if (horizon < 2 || trajectories < 1) throw Error("simulate_tvsem: need T >= 2 and N >= 1");
    if (period < 1) throw Error("simulate_tvsem: period must be >= 1");
    if (sigma < 0) throw Error("simulate_tvsem: sigma must be >= 0");
    TimeSeriesDataset ds(trajectories, horizon, 2);
    const Matrix a0 = tvsem_regime_matrix(0), a1 = tvsem_regime_matrix(1);
    for (int n = 0; n < trajectories; ++n) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(n) + 1));
        Vector x = gaussian_vector(rng, 2, sigma);
        ds.row(n, 0) = x;
        for (int t = 1; t < horizon; ++t) {
            const Matrix& a = tvsem_regime_at(t, period) == 0 ? a0 : a1;
            x = a * x + gaussian_vector(rng, 2, sigma);
            ds.row(n, t) = x;
        }
    }
    std::vector<int> bounds;
    for (int b = period; b < horizon; b += period) bounds.push_back(b);
    ds.regime_boundaries = bounds;
    ds.system_tag = SystemTag::tvsem;
    DynamicGraph truth(2, 1, false);
    truth.lag(1) = a0;
    ds.truth = truth;
    return ds;
}

}  // namespace sc3d

#endif  // SC3D_DATAGEN_TVSEM_HPP
