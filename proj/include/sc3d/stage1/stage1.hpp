#ifndef SC3D_STAGE1_STAGE1_HPP
#define SC3D_STAGE1_STAGE1_HPP

#include "sc3d/core/parallel.hpp"
#include "sc3d/core/rng.hpp"
#include "sc3d/core/types.hpp"
#include "sc3d/predictor/adam.hpp"
#include "sc3d/predictor/node_predictor.hpp"
#include "sc3d/stage1/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>
#include <vector>

namespace sc3d {

struct ThresholdRule {
    enum class Kind { relative, quantile };
    Kind kind = Kind::relative;
    double value = 0.05;  // tau_rel or q

    static ThresholdRule relative(double tau) { return {Kind::relative, tau}; }
    static ThresholdRule quantile(double q) { return {Kind::quantile, q}; }

    void validate() const {
        if (kind == Kind::relative && !(value >= 0.0 && value <= 1.0))
            throw Error("threshold: tau_rel must lie in [0, 1]");
        if (kind == Kind::quantile && !(value > 0.0 && value <= 1.0))
            throw Error("threshold: q must lie in (0, 1]");
    }
};

struct Stage1Config {
    int epochs = 200;
    double lambda = 0.15;
    double lr = 3e-3;
    int batch_size = 64;
    int hidden_width = 32;
    bool instantaneous = true;
    bool linear_predictor = false;
    ThresholdRule threshold = ThresholdRule::relative(0.05);
    std::uint64_t seed = 0;
    int jobs = 0;

    void validate() const {
        if (epochs < 1) throw Error("stage1: epochs must be >= 1");
        if (lambda < 0) throw Error("stage1: lambda must be >= 0");
        if (!(lr > 0)) throw Error("stage1: lr must be positive");
        if (batch_size < 1) throw Error("stage1: batch_size must be >= 1");
        if (hidden_width < 1) throw Error("stage1: hidden_width must be >= 1");
        threshold.validate();
    }
};

// [l][j,i] = score of parent (i, lag l) for target j; instant_scores has a
// zero diagonal.
struct ScoreTable {
    std::vector<Matrix> lag_scores;
    Matrix instant_scores;

    ScoreTable() = default;
    ScoreTable(int d, int L) : lag_scores(static_cast<std::size_t>(L), Matrix::Zero(d, d)), instant_scores(Matrix::Zero(d, d)) {}

    int dim() const { return static_cast<int>(instant_scores.rows()); }
    int lag_order() const { return static_cast<int>(lag_scores.size()); }
};

// Writes one node's per-group scores into row j of the table.
inline void scatter_scores(const std::vector<GroupId>& groups, const Vector& scores, int j, ScoreTable& table) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& id = groups[g];
        if (id.instantaneous()) table.instant_scores(j, id.var) = scores[static_cast<Eigen::Index>(g)];
        else table.lag_scores[static_cast<std::size_t>(id.lag - 1)](j, id.var) = scores[static_cast<Eigen::Index>(g)];
    }
}

class StageDiverged : public Error {
public:
    using Error::Error;
};

struct NodeFit {
    NodePredictor predictor;
    Vector scores;
};

/// Minibatch Adam on MSE + lambda * sum of group norms for one node.
inline NodeFit fit_node(const Matrix& x, const Vector& y, int target, std::vector<GroupId> groups,
                        const Stage1Config& cfg, std::uint64_t seed) {
    cfg.validate();
    if (x.rows() == 0) throw Error("fit_node: no training pairs");
    const int n = static_cast<int>(x.rows());
    Rng rng(seed);
    NodePredictor p(target, std::move(groups), cfg.hidden_width, cfg.linear_predictor);
    p.initialize(rng);
    AdamState adam(p.param_count(), cfg.lr);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const int b = std::min(cfg.batch_size, n);
    Matrix xb(b, x.cols());
    Vector yb(b);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (int start = 0; start < n; start += b) {
            const int m = std::min(b, n - start);
            for (int r = 0; r < m; ++r) {
                xb.row(r) = x.row(order[static_cast<std::size_t>(start + r)]);
                yb[r] = y[order[static_cast<std::size_t>(start + r)]];
            }
            LossGrad lg = loss_and_grad(p, xb.topRows(m), yb.head(m), cfg.lambda);
            if (!std::isfinite(lg.loss))
                throw StageDiverged("stage 1 diverged: node " + std::to_string(target) + ", epoch " +
                                    std::to_string(epoch + 1));
            adam_step(p.params(), lg.grad, adam);
        }
    }
    Vector s = group_scores(p);
    return {std::move(p), std::move(s)};
}

/// Relative rule: within target row j keep every positive score that reaches
/// tau * (row max over lagged and instantaneous groups). Quantile rule: keep
/// the top ceil(q * count) candidates over the whole table (ties broken by
/// position); instantaneous candidates take part only when `instantaneous`.
/// Self-loops are never kept in the instantaneous mask.
inline EdgeMasks threshold_masks(const ScoreTable& s, const ThresholdRule& rule, bool instantaneous = true) {
    rule.validate();
    const int d = s.dim(), L = s.lag_order();
    EdgeMasks m;
    m.lag_masks.assign(static_cast<std::size_t>(L), BinaryMatrix::Zero(d, d));
    m.instant_mask = BinaryMatrix::Zero(d, d);
    if (rule.kind == ThresholdRule::Kind::relative) {
        for (int j = 0; j < d; ++j) {
            double row_max = 0.0;
            for (const auto& a : s.lag_scores) row_max = std::max(row_max, a.row(j).maxCoeff());
            if (instantaneous)
                for (int i = 0; i < d; ++i)
                    if (i != j) row_max = std::max(row_max, s.instant_scores(j, i));
            const double cut = rule.value * row_max;
            for (int l = 0; l < L; ++l)
                for (int i = 0; i < d; ++i) {
                    const double v = s.lag_scores[static_cast<std::size_t>(l)](j, i);
                    if (v > 0 && v >= cut) m.lag_masks[static_cast<std::size_t>(l)](j, i) = 1;
                }
            for (int i = 0; i < d && instantaneous; ++i) {
                const double v = s.instant_scores(j, i);
                if (i != j && v > 0 && v >= cut) m.instant_mask(j, i) = 1;
            }
        }
        return m;
    }
    // (score, lag slot, j, i); lag slot L means instantaneous.
    std::vector<std::tuple<double, int, int, int>> cand;
    for (int l = 0; l < L; ++l)
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i) cand.emplace_back(s.lag_scores[static_cast<std::size_t>(l)](j, i), l, j, i);
    if (instantaneous)
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i)
                if (i != j) cand.emplace_back(s.instant_scores(j, i), L, j, i);
    std::stable_sort(cand.begin(), cand.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
    const auto keep = static_cast<std::size_t>(std::ceil(rule.value * static_cast<double>(cand.size()) - 1e-12));
    for (std::size_t k = 0; k < std::min(keep, cand.size()); ++k) {
        const auto& [v, l, j, i] = cand[k];
        if (!(v > 0)) break;
        if (l == L) m.instant_mask(j, i) = 1;
        else m.lag_masks[static_cast<std::size_t>(l)](j, i) = 1;
    }
    return m;
}

struct Stage1Result {
    EdgeMasks masks;
    ScoreTable scores;
    std::vector<NodePredictor> predictors;
};

/// Fits one grouped predictor per node on an already-built design, then
/// thresholds the score table.
inline Stage1Result run_stage1(const Design& des, const Stage1Config& cfg) {
    cfg.validate();
    if (cfg.instantaneous != des.instantaneous) throw Error("run_stage1: design/config instantaneous flag mismatch");
    const int d = des.dim, L = des.lag_order;
    Stage1Result res;
    res.predictors.resize(static_cast<std::size_t>(d));
    std::vector<Vector> node_scores(static_cast<std::size_t>(d));
    parallel_for(d, resolve_jobs(cfg.jobs), [&](int j) {
        auto groups = window_groups(d, L, cfg.instantaneous, j);
        NodeFit fit = fit_node(des.node_inputs(j), des.targets.col(j), j, std::move(groups), cfg,
                               derive_seed(cfg.seed, static_cast<std::uint64_t>(j)));
        node_scores[static_cast<std::size_t>(j)] = std::move(fit.scores);
        res.predictors[static_cast<std::size_t>(j)] = std::move(fit.predictor);
    });
    res.scores = ScoreTable(d, L);
    for (int j = 0; j < d; ++j)
        scatter_scores(res.predictors[static_cast<std::size_t>(j)].groups(), node_scores[static_cast<std::size_t>(j)], j,
                       res.scores);
    res.masks = threshold_masks(res.scores, cfg.threshold, cfg.instantaneous);
    return res;
}

}  // namespace sc3d

#endif  // SC3D_STAGE1_STAGE1_HPP
