#ifndef SC3D_PREDICTOR_ADAM_HPP
#define SC3D_PREDICTOR_ADAM_HPP

#include "sc3d/core/types.hpp"

#include <cmath>

namespace sc3d {

struct AdamState {
    Vector first_moment;
    Vector second_moment;
    long step_count = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    AdamState(Eigen::Index n, double learning_rate)
        : first_moment(Vector::Zero(n)), second_moment(Vector::Zero(n)), lr(learning_rate) {}
};

// Bias-corrected Adam update, in place.
inline void adam_step(Vector& params, const Vector& grads, AdamState& s) {
    if (params.size() != grads.size() || params.size() != s.first_moment.size())
        throw ShapeError("adam_step: parameter, gradient and moment sizes differ");
    ++s.step_count;
    s.first_moment = s.beta1 * s.first_moment + (1.0 - s.beta1) * grads;
    s.second_moment = s.beta2 * s.second_moment + (1.0 - s.beta2) * grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step_count));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step_count));
    params.array() -= s.lr * (s.first_moment.array() / c1) / ((s.second_moment.array() / c2).sqrt() + s.eps);
}

}  // namespace sc3d

#endif  // SC3D_PREDICTOR_ADAM_HPP
