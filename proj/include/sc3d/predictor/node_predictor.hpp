#ifndef SC3D_PREDICTOR_NODE_PREDICTOR_HPP
#define SC3D_PREDICTOR_NODE_PREDICTOR_HPP

#include "sc3d/core/rng.hpp"
#include "sc3d/core/types.hpp"

#include <span>
#include <vector>

namespace sc3d {

// Candidate parent of a target: variable `var` at lag `lag` (lag 0 is the
// instantaneous slice).
struct GroupId {
    int var = 0;
    int lag = 0;

    bool instantaneous() const { return lag == 0; }
    friend bool operator==(const GroupId&, const GroupId&) = default;
};

// Window layout shared by both stages: for each lag l = 1..L the d lagged
// variables, followed (when enabled) by the d - 1 instantaneous variables
// other than the target.
inline std::vector<GroupId> window_groups(int d, int L, bool instantaneous, int target) {
    std::vector<GroupId> g;
    g.reserve(static_cast<std::size_t>(d * L + (instantaneous ? d - 1 : 0)));
    for (int l = 1; l <= L; ++l)
        for (int i = 0; i < d; ++i) g.push_back({i, l});
    if (instantaneous)
        for (int i = 0; i < d; ++i)
            if (i != target) g.push_back({i, 0});
    return g;
}

/// One-hidden-layer predictor for a single target node with a grouped first
/// layer: column g of the first layer holds all weights attached to input
/// group g, and its Euclidean norm is the group (edge) score.
///
///   y = b2 + w2' tanh(W1 x + b1)     (nonlinear)
///   y = b2 + W1 x                    (linear; W1 is 1 x G, b1/w2 empty)
///
/// Parameters live in one flat vector (W1 column-major, b1, w2, b2) so the
/// optimizer can treat them uniformly.
class NodePredictor {
public:
    NodePredictor() = default;

    NodePredictor(int target, std::vector<GroupId> groups, int hidden_width, bool linear)
        : target_(target), groups_(std::move(groups)), hidden_(linear ? 1 : hidden_width), linear_(linear),
          active_(groups_.size(), 1) {
        if (!linear && hidden_width < 1) throw Error("NodePredictor: hidden width must be >= 1");
        theta_ = Vector::Zero(param_count());
    }

    // Uniform(+-1/sqrt(fan_in)) initialization.
    void initialize(Rng& rng) {
        const double a1 = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(1, groups_.size())));
        for (Eigen::Index k = 0; k < w1_size(); ++k) theta_[k] = rng.uniform(-a1, a1);
        if (!linear_) {
            const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
            auto b1 = hidden_bias();
            for (int h = 0; h < hidden_; ++h) b1[h] = rng.uniform(-a1, a1);
            auto w2 = output_weights();
            for (int h = 0; h < hidden_; ++h) w2[h] = rng.uniform(-a2, a2);
            theta_[theta_.size() - 1] = rng.uniform(-a2, a2);
        } else {
            theta_[theta_.size() - 1] = 0.0;
        }
        apply_mask();
    }

    int target() const { return target_; }
    int num_groups() const { return static_cast<int>(groups_.size()); }
    int hidden_width() const { return hidden_; }
    bool linear() const { return linear_; }
    const std::vector<GroupId>& groups() const { return groups_; }

    Vector& params() { return theta_; }
    const Vector& params() const { return theta_; }

    Eigen::Map<Matrix> first_layer() { return {theta_.data(), hidden_, num_groups()}; }
    Eigen::Map<const Matrix> first_layer() const { return {theta_.data(), hidden_, num_groups()}; }
    Eigen::Map<Vector> hidden_bias() { return {theta_.data() + w1_size(), linear_ ? 0 : hidden_}; }
    Eigen::Map<const Vector> hidden_bias() const { return {theta_.data() + w1_size(), linear_ ? 0 : hidden_}; }
    Eigen::Map<Vector> output_weights() {
        return {theta_.data() + w1_size() + (linear_ ? 0 : hidden_), linear_ ? 0 : hidden_};
    }
    Eigen::Map<const Vector> output_weights() const {
        return {theta_.data() + w1_size() + (linear_ ? 0 : hidden_), linear_ ? 0 : hidden_};
    }
    double& output_bias() { return theta_[theta_.size() - 1]; }
    double output_bias() const { return theta_[theta_.size() - 1]; }

    // Masked-out groups keep an exactly-zero column and receive no gradient.
    const std::vector<char>& active() const { return active_; }
    void set_active(std::vector<char> active) {
        if (active.size() != groups_.size()) throw ShapeError("NodePredictor::set_active: wrong length");
        active_ = std::move(active);
        apply_mask();
    }
    void apply_mask() {
        auto w1 = first_layer();
        for (int g = 0; g < num_groups(); ++g)
            if (!active_[static_cast<std::size_t>(g)]) w1.col(g).setZero();
    }
    void mask_gradient(Vector& grad) const {
        Eigen::Map<Matrix> gw1(grad.data(), hidden_, num_groups());
        for (int g = 0; g < num_groups(); ++g)
            if (!active_[static_cast<std::size_t>(g)]) gw1.col(g).setZero();
    }

    Eigen::Index param_count() const { return w1_size() + (linear_ ? 0 : 2 * hidden_) + 1; }

private:
    Eigen::Index w1_size() const { return static_cast<Eigen::Index>(hidden_) * num_groups(); }

    int target_ = 0;
    std::vector<GroupId> groups_;
    int hidden_ = 0;
    bool linear_ = false;
    std::vector<char> active_;
    Vector theta_;
};

// Euclidean norm of each first-layer column, in group order.
inline Vector group_scores(const NodePredictor& p) {
    return p.first_layer().colwise().norm().transpose();
}

// Predictions for a batch; rows of `x` are windows.
inline Vector forward(const NodePredictor& p, const Eigen::Ref<const Matrix>& x) {
    if (x.cols() != p.num_groups())
        throw ShapeError("forward: window has " + std::to_string(x.cols()) + " entries, predictor expects " +
                         std::to_string(p.num_groups()));
    if (p.linear())
        return (x * p.first_layer().row(0).transpose()).array() + p.output_bias();
    Matrix z = x * p.first_layer().transpose();
    z.rowwise() += p.hidden_bias().transpose();
    return (z.array().tanh().matrix() * p.output_weights()).array() + p.output_bias();
}

inline double forward(const NodePredictor& p, const Vector& window) {
    return forward(p, Eigen::Ref<const Matrix>(window.transpose()))[0];
}

struct LossGrad {
    double loss = 0.0;
    Vector grad;
};

/// Mean squared error over the batch (unit-variance Gaussian NLL up to
/// constants) and its exact gradient. Masked groups get zero gradient.
inline LossGrad mse_and_grad(const NodePredictor& p, const Eigen::Ref<const Matrix>& x,
                             const Eigen::Ref<const Vector>& y) {
    if (x.rows() == 0) throw Error("mse_and_grad: empty batch");
    if (x.rows() != y.size()) throw ShapeError("mse_and_grad: batch and target sizes differ");
    if (x.cols() != p.num_groups()) throw ShapeError("mse_and_grad: window width mismatch");
    const double inv_n = 1.0 / static_cast<double>(x.rows());
    LossGrad out;
    out.grad = Vector::Zero(p.param_count());
    const int H = p.hidden_width();
    const int G = p.num_groups();
    Eigen::Map<Matrix> g_w1(out.grad.data(), H, G);

    if (p.linear()) {
        const Vector r = (x * p.first_layer().row(0).transpose()).array() + p.output_bias() - y.array();
        out.loss = r.squaredNorm() * inv_n;
        const Vector dy = 2.0 * inv_n * r;
        g_w1.row(0) = (x.transpose() * dy).transpose();
        out.grad[out.grad.size() - 1] = dy.sum();
    } else {
        Matrix z = x * p.first_layer().transpose();
        z.rowwise() += p.hidden_bias().transpose();
        const Matrix h = z.array().tanh().matrix();
        const Vector r = (h * p.output_weights()).array() + p.output_bias() - y.array();
        out.loss = r.squaredNorm() * inv_n;
        const Vector dy = 2.0 * inv_n * r;
        Eigen::Map<Vector>(out.grad.data() + g_w1.size() + H, H) = h.transpose() * dy;
        out.grad[out.grad.size() - 1] = dy.sum();
        const Matrix dz = ((dy * p.output_weights().transpose()).array() * (1.0 - h.array().square())).matrix();
        g_w1 = dz.transpose() * x;
        Eigen::Map<Vector>(out.grad.data() + g_w1.size(), H) = dz.colwise().sum().transpose();
    }
    p.mask_gradient(out.grad);
    return out;
}

inline constexpr double kGroupNormEps = 1e-12;

/// Adds sum_g coef[g] * ||W1[:,g]|| to `lg`, with the smoothed subgradient
/// coef[g] * col / (||col|| + 1e-12). Returns the penalty value.
inline double add_group_penalty(const NodePredictor& p, const Eigen::Ref<const Vector>& coef, LossGrad& lg) {
    if (coef.size() != p.num_groups()) throw ShapeError("add_group_penalty: one coefficient per group expected");
    const auto w1 = p.first_layer();
    Eigen::Map<Matrix> g_w1(lg.grad.data(), p.hidden_width(), p.num_groups());
    double value = 0.0;
    for (int g = 0; g < p.num_groups(); ++g) {
        if (!p.active()[static_cast<std::size_t>(g)] || coef[g] == 0.0) continue;
        const double n = w1.col(g).norm();
        value += coef[g] * n;
        g_w1.col(g) += coef[g] / (n + kGroupNormEps) * w1.col(g);
    }
    lg.loss += value;
    return value;
}

// MSE plus a uniform group-lasso penalty, the stage-one objective.
inline LossGrad loss_and_grad(const NodePredictor& p, const Eigen::Ref<const Matrix>& x,
                              const Eigen::Ref<const Vector>& y, double l1_group) {
    if (l1_group < 0) throw Error("loss_and_grad: l1_group must be >= 0");
    LossGrad lg = mse_and_grad(p, x, y);
    if (l1_group > 0) add_group_penalty(p, Vector::Constant(p.num_groups(), l1_group), lg);
    return lg;
}

}  // namespace sc3d

#endif  // SC3D_PREDICTOR_NODE_PREDICTOR_HPP
