#ifndef SC3D_ACYCLIC_SPECTRAL_HPP
#define SC3D_ACYCLIC_SPECTRAL_HPP

#include "sc3d/core/types.hpp"

namespace sc3d {

struct SpectralResult {
    double rho = 0.0;
    Matrix grad_wrt_B;
    Vector left_vec;
    Vector right_vec;
    int iterations_used = 0;
};

/// Spectral radius of the nonnegative surrogate M = B (.) B and its gradient
/// with respect to B.
///
/// Right and left Perron vectors are each obtained with `iterations` steps of
/// normalized power iteration from the all-ones vector. The estimate is
/// rho = u'Mv / u'v and the gradient follows from d rho / dM = u v' / (u'v)
/// chained through the elementwise square, i.e. 2 B (.) (u v' / u'v).
///
/// If an unnormalized iterate collapses below `tol` the matrix is treated as
/// nilpotent (acyclic support): rho = 0 and the gradient is zero.
inline SpectralResult spectral_penalty(const Matrix& B, int iterations = 15, double tol = 1e-12) {
    if (B.rows() != B.cols()) throw ShapeError("spectral_penalty: B must be square");
    if (iterations < 1) throw Error("spectral_penalty: iterations must be >= 1");
    const auto d = B.rows();
    SpectralResult res;
    res.grad_wrt_B = Matrix::Zero(d, d);
    res.left_vec = Vector::Zero(d);
    res.right_vec = Vector::Zero(d);
    if (d == 0) return res;

    const Matrix M = B.cwiseProduct(B);
    Vector v = Vector::Ones(d) / std::sqrt(static_cast<double>(d));
    Vector u = v;
    for (int k = 0; k < iterations; ++k) {
        Vector nv = M * v;
        Vector nu = M.transpose() * u;
        const double nv_norm = nv.norm();
        const double nu_norm = nu.norm();
        res.iterations_used = k + 1;
        if (!(nv_norm >= tol) || !(nu_norm >= tol)) return res;
        v = nv / nv_norm;
        u = nu / nu_norm;
    }
    const double uv = u.dot(v);
    if (!(uv > tol)) return res;
    res.rho = std::max(0.0, u.dot(M * v) / uv);
    res.left_vec = u;
    res.right_vec = v;
    res.grad_wrt_B = 2.0 * B.cwiseProduct(u * v.transpose()) / uv;
    return res;
}

struct TwoCycleResult {
    double value = 0.0;
    Matrix grad;
};

/// ||B (.) B'||_1 summed over ordered off-diagonal pairs. Each product
/// appears twice, so the gradient is 2 sign(B_ij B_ji) B_ji (sign(0) = 0).
inline TwoCycleResult two_cycle_penalty(const Matrix& B) {
    if (B.rows() != B.cols()) throw ShapeError("two_cycle_penalty: B must be square");
    const auto d = B.rows();
    TwoCycleResult res;
    res.grad = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            if (i == j) continue;
            const double p = B(i, j) * B(j, i);
            res.value += std::abs(p);
            if (p > 0) res.grad(i, j) = 2.0 * B(j, i);
            else if (p < 0) res.grad(i, j) = -2.0 * B(j, i);
        }
    }
    return res;
}

}  // namespace sc3d

#endif  // SC3D_ACYCLIC_SPECTRAL_HPP
