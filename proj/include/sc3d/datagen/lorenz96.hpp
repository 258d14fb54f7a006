#ifndef SC3D_DATAGEN_LORENZ96_HPP
#define SC3D_DATAGEN_LORENZ96_HPP

#include "sc3d/core/rng.hpp"
#include "sc3d/core/types.hpp"

#include <cstdint>

namespace sc3d {

struct Lorenz96Params {
    double forcing = 8.0;
    double dt = 0.01;
    double sigma = 0.1;
    double init_sigma = 0.01;
};

// dx_i/dt = (x_{i+1} - x_{i-2}) x_{i-1} - x_i + F, indices mod d.
inline Vector lorenz96_rhs(const Vector& x, double forcing) {
    const int d = static_cast<int>(x.size());
    Vector out(d);
    for (int i = 0; i < d; ++i) {
        const double xp1 = x[(i + 1) % d];
        const double xm1 = x[(i + d - 1) % d];
        const double xm2 = x[(i + d - 2) % d];
        out[i] = (xp1 - xm2) * xm1 - x[i] + forcing;
    }
    return out;
}

// Lag-1 parents of i are {i-2, i-1, i, i+1} mod d; no instantaneous edges.
inline DynamicGraph lorenz96_truth(int d) {
    DynamicGraph g(d, 1, false);
    for (int i = 0; i < d; ++i)
        for (int off : {-2, -1, 0, 1}) g.lag(1)(i, ((i + off) % d + d) % d) = 1.0;
    return g;
}

/// Euler-discretized Lorenz96 with additive Gaussian noise,
/// x0 ~ N(F 1, init_sigma^2 I). Row 0 of each trajectory is x0.
inline TimeSeriesDataset simulate_lorenz96(int d, int horizon, int trajectories, std::uint64_t seed,
                                           const Lorenz96Params& p = {}) {
    if (d < 4) throw Error("simulate_lorenz96: d must be >= 4 for the cyclic stencil (got " + std::to_string(d) + ")");
    if (horizon < 1 || trajectories < 1) throw Error("simulate_lorenz96: T and N must be >= 1");
    TimeSeriesDataset ds(trajectories, horizon, d);
    for (int n = 0; n < trajectories; ++n) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(n) + 1));
        Vector x = Vector::Constant(d, p.forcing) + gaussian_vector(rng, d, p.init_sigma);
        ds.row(n, 0) = x;
        for (int t = 1; t < horizon; ++t) {
            x = x + p.dt * lorenz96_rhs(x, p.forcing) + gaussian_vector(rng, d, p.sigma);
            ds.row(n, t) = x;
        }
    }
    ds.system_tag = SystemTag::lorenz96;
    ds.truth = lorenz96_truth(d);
    return ds;
}

}  // namespace sc3d

#endif  // SC3D_DATAGEN_LORENZ96_HPP
