#ifndef SC3D_STAGE2_STAGE2_HPP
#define SC3D_STAGE2_STAGE2_HPP

#include "sc3d/acyclic/extract.hpp"
#include "sc3d/acyclic/spectral.hpp"
#include "sc3d/core/parallel.hpp"
#include "sc3d/core/rng.hpp"
#include "sc3d/core/topo.hpp"
#include "sc3d/core/types.hpp"
#include "sc3d/predictor/adam.hpp"
#include "sc3d/predictor/node_predictor.hpp"
#include "sc3d/stage1/design.hpp"
#include "sc3d/stage1/stage1.hpp"

#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace sc3d {

struct Stage2Config {
    int epochs = 300;
    double lr = 1.25e-3;
    double alpha = 0.02;
    double beta = 0.001;
    double lambda_2c = 0.05;
    double gamma_max = 50.0;
    double s_inst = 2.0;
    int extract_every = 10;
    int power_iterations = 15;
    int batch_size = 64;
    int hidden_width = 32;
    // Instantaneous entries at or above this fraction of the largest entry
    // form the support tested by the freezing rule.
    double freeze_support = 0.1;
    bool freeze_enabled = true;
    bool two_cycle_enabled = true;
    bool use_stage1_masks = true;
    bool linear_predictor = false;
    std::uint64_t seed = 0;
    int jobs = 0;

    void validate() const {
        if (epochs < 1) throw Error("stage2: epochs must be >= 1");
        if (!(lr > 0)) throw Error("stage2: lr must be positive");
        if (alpha < 0 || beta < 0 || lambda_2c < 0 || gamma_max < 0) throw Error("stage2: penalties must be >= 0");
        if (extract_every < 1) throw Error("stage2: extract_every must be >= 1");
        if (power_iterations < 1) throw Error("stage2: power_iterations must be >= 1");
        if (batch_size < 1) throw Error("stage2: batch_size must be >= 1");
        if (!(freeze_support >= 0 && freeze_support <= 1)) throw Error("stage2: freeze_support must lie in [0, 1]");
    }
};

struct FreezeState {
    bool frozen = false;
    std::optional<double> gamma_frozen_at;
    std::optional<int> epoch_frozen;
    int e_min = 0;
};

struct Stage2LogRow {
    int epoch = 0;
    double loss = 0, nll = 0, l1_lag = 0, l1_inst = 0, gamma = 0, rho = 0, two_cycle = 0;
    bool frozen = false;
};

/// floor(eta(d) * s_inst * d) with eta = 0.5 (d <= 6), 0.65 (7..20), 0.8 (> 20).
inline int e_min(int d, double s_inst) {
    if (d < 1) throw Error("e_min: d must be >= 1");
    const double eta = d <= 6 ? 0.5 : (d <= 20 ? 0.65 : 0.8);
    // Small nudge so exact products like 0.65 * 2 * 20 do not floor to 25.
    return static_cast<int>(std::floor(eta * s_inst * d + 1e-9));
}

// Per-group activity vector for node j from the masks, in window order.
inline std::vector<char> group_activity(const std::vector<GroupId>& groups, const EdgeMasks& masks, int j) {
    std::vector<char> active(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& id = groups[g];
        active[g] = id.instantaneous() ? masks.instant_mask(j, id.var)
                                       : masks.lag_masks[static_cast<std::size_t>(id.lag - 1)](j, id.var);
    }
    return active;
}

/// A_l[j,i] / B[j,i] = group score of the corresponding input when masked in,
/// zero otherwise; B keeps a zero diagonal.
inline DynamicGraph graph_from_predictors(const std::vector<NodePredictor>& predictors, const EdgeMasks& masks) {
    const int d = masks.dim(), L = masks.lag_order();
    const bool inst = masks.instant_mask.cast<int>().sum() > 0 ||
                      std::any_of(predictors.begin(), predictors.end(), [](const NodePredictor& p) {
                          return std::any_of(p.groups().begin(), p.groups().end(),
                                             [](const GroupId& g) { return g.instantaneous(); });
                      });
    DynamicGraph g(d, L, inst);
    for (int j = 0; j < d; ++j) {
        const auto& p = predictors.at(static_cast<std::size_t>(j));
        const Vector s = group_scores(p);
        for (std::size_t k = 0; k < p.groups().size(); ++k) {
            const auto& id = p.groups()[k];
            const double v = s[static_cast<Eigen::Index>(k)];
            if (id.instantaneous()) {
                if (id.var != j && masks.instant_mask(j, id.var)) g.instant_matrix(j, id.var) = v;
            } else if (masks.lag_masks[static_cast<std::size_t>(id.lag - 1)](j, id.var)) {
                g.lag(id.lag)(j, id.var) = v;
            }
        }
    }
    return g;
}

// Instantaneous score matrix B from the current predictors.
inline Matrix instant_matrix_of(const std::vector<NodePredictor>& predictors, int d) {
    Matrix b = Matrix::Zero(d, d);
    for (int j = 0; j < d; ++j) {
        const auto& p = predictors[static_cast<std::size_t>(j)];
        const auto w1 = p.first_layer();
        for (int k = 0; k < p.num_groups(); ++k) {
            const auto& id = p.groups()[static_cast<std::size_t>(k)];
            if (id.instantaneous()) b(j, id.var) = w1.col(k).norm();
        }
    }
    return b;
}

struct Stage2Loss {
    double total = 0, nll = 0, l1_lag = 0, l1_inst = 0, rho = 0, two_cycle = 0;
    std::vector<Vector> grads;  // one per node
};

/// Total objective on one batch (rows of the per-node input matrices):
///   sum_j MSE_j + alpha sum ||A_l||_1 + beta ||B||_1 + gamma rho(B) + lambda_2c ||B (.) B'||_1
/// where every matrix entry is a group norm. Penalty gradients are chained
/// into the first-layer columns through d||c||/dc = c / (||c|| + 1e-12).
inline Stage2Loss stage2_loss(const std::vector<NodePredictor>& predictors, const std::vector<Matrix>& node_x,
                              const Matrix& targets, const Stage2Config& cfg, double gamma, int jobs = 1) {
    const int d = static_cast<int>(predictors.size());
    Stage2Loss out;
    out.grads.resize(static_cast<std::size_t>(d));
    std::vector<double> nll(static_cast<std::size_t>(d));
    parallel_for(d, jobs, [&](int j) {
        LossGrad lg = mse_and_grad(predictors[static_cast<std::size_t>(j)], node_x[static_cast<std::size_t>(j)],
                                   targets.col(j));
        nll[static_cast<std::size_t>(j)] = lg.loss;
        out.grads[static_cast<std::size_t>(j)] = std::move(lg.grad);
    });
    for (double v : nll) out.nll += v;

    const Matrix B = instant_matrix_of(predictors, d);
    Matrix dB = Matrix::Constant(d, d, cfg.beta);
    if (gamma > 0) {
        const SpectralResult sr = spectral_penalty(B, cfg.power_iterations);
        out.rho = sr.rho;
        dB += gamma * sr.grad_wrt_B;
    }
    if (cfg.two_cycle_enabled && cfg.lambda_2c > 0) {
        const TwoCycleResult tc = two_cycle_penalty(B);
        out.two_cycle = tc.value;
        dB += cfg.lambda_2c * tc.grad;
    } else {
        out.two_cycle = two_cycle_penalty(B).value;
    }

    for (int j = 0; j < d; ++j) {
        const auto& p = predictors[static_cast<std::size_t>(j)];
        const auto w1 = p.first_layer();
        Eigen::Map<Matrix> g_w1(out.grads[static_cast<std::size_t>(j)].data(), p.hidden_width(), p.num_groups());
        for (int k = 0; k < p.num_groups(); ++k) {
            if (!p.active()[static_cast<std::size_t>(k)]) continue;
            const auto& id = p.groups()[static_cast<std::size_t>(k)];
            const double norm = w1.col(k).norm();
            double coef;
            if (id.instantaneous()) {
                out.l1_inst += norm;
                coef = dB(j, id.var);
            } else {
                out.l1_lag += norm;
                coef = cfg.alpha;
            }
            if (coef != 0.0) g_w1.col(k) += coef / (norm + kGroupNormEps) * w1.col(k);
        }
    }
    out.total = out.nll + cfg.alpha * out.l1_lag + cfg.beta * out.l1_inst + gamma * out.rho +
                (cfg.two_cycle_enabled ? cfg.lambda_2c * out.two_cycle : 0.0);
    return out;
}

// Support used by the freezing rule: entries >= freeze_support * max(B).
inline BinaryMatrix freeze_support_of(const Matrix& B, double fraction) {
    const double mx = B.size() ? B.maxCoeff() : 0.0;
    BinaryMatrix s = BinaryMatrix::Zero(B.rows(), B.cols());
    if (!(mx > 0)) return s;
    for (Eigen::Index j = 0; j < B.rows(); ++j)
        for (Eigen::Index i = 0; i < B.cols(); ++i)
            if (i != j && B(j, i) > 0 && B(j, i) >= fraction * mx) s(j, i) = 1;
    return s;
}

struct Stage2Result {
    DynamicGraph graph;
    FreezeState freeze;
    std::vector<Stage2LogRow> log;
    std::vector<NodePredictor> predictors;
};

/// Constrained refinement. Predictors start from `init` (stage-one fits) or,
/// when none are given, from a fresh seeded initialization. gamma grows
/// linearly from 0 to gamma_max over the epochs; every extract_every epochs the
/// thresholded instantaneous support is checked and, if acyclic with at least
/// e_min edges, gamma is frozen for good. The returned B is hardened with a
/// final greedy DAG extraction.
inline Stage2Result run_stage2(const Design& des, const EdgeMasks& masks, const std::vector<NodePredictor>* init,
                               const Stage2Config& cfg) {
    cfg.validate();
    const int d = des.dim, L = des.lag_order;
    if (masks.dim() != d || masks.lag_order() != L) throw ShapeError("run_stage2: masks do not match the design");
    const int jobs = resolve_jobs(cfg.jobs);

    std::vector<NodePredictor> preds;
    preds.reserve(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        if (init) {
            preds.push_back(init->at(static_cast<std::size_t>(j)));
        } else {
            preds.emplace_back(j, window_groups(d, L, des.instantaneous, j), cfg.hidden_width, cfg.linear_predictor);
            Rng rng(derive_seed(cfg.seed ^ 0x5eed2ULL, static_cast<std::uint64_t>(j)));
            preds.back().initialize(rng);
        }
        preds.back().set_active(group_activity(preds.back().groups(), masks, j));
    }
    std::vector<Matrix> node_x(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) node_x[static_cast<std::size_t>(j)] = des.node_inputs(j);

    std::vector<AdamState> adam;
    for (const auto& p : preds) adam.emplace_back(p.param_count(), cfg.lr);

    Stage2Result res;
    res.freeze.e_min = e_min(d, cfg.s_inst);
    const bool has_inst = des.instantaneous && masks.instant_mask.cast<int>().sum() > 0;
    if (!has_inst) {
        res.freeze.frozen = true;
        res.freeze.gamma_frozen_at = 0.0;
        res.freeze.epoch_frozen = 0;
    }

    const int n = des.rows();
    const int b = std::min(cfg.batch_size, n);
    Rng rng(derive_seed(cfg.seed, 0x2));
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::vector<Matrix> bx(static_cast<std::size_t>(d));
    Matrix by;

    double gamma = 0.0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (!res.freeze.frozen && has_inst)
            gamma = cfg.epochs > 1 ? cfg.gamma_max * (epoch - 1) / (cfg.epochs - 1) : 0.0;
        else if (res.freeze.frozen)
            gamma = res.freeze.gamma_frozen_at.value_or(0.0);

        rng.shuffle(order);
        Stage2LogRow row;
        row.epoch = epoch;
        row.gamma = gamma;
        int batches = 0;
        for (int start = 0; start < n; start += b) {
            const int m = std::min(b, n - start);
            by.resize(m, d);
            for (int j = 0; j < d; ++j) bx[static_cast<std::size_t>(j)].resize(m, node_x[static_cast<std::size_t>(j)].cols());
            for (int r = 0; r < m; ++r) {
                const int src = order[static_cast<std::size_t>(start + r)];
                by.row(r) = des.targets.row(src);
                for (int j = 0; j < d; ++j)
                    bx[static_cast<std::size_t>(j)].row(r) = node_x[static_cast<std::size_t>(j)].row(src);
            }
            Stage2Loss sl = stage2_loss(preds, bx, by, cfg, has_inst ? gamma : 0.0, jobs);
            if (!std::isfinite(sl.total))
                throw StageDiverged("stage 2 diverged at epoch " + std::to_string(epoch));
            for (int j = 0; j < d; ++j) {
                adam_step(preds[static_cast<std::size_t>(j)].params(), sl.grads[static_cast<std::size_t>(j)],
                          adam[static_cast<std::size_t>(j)]);
            }
            row.loss += sl.total;
            row.nll += sl.nll;
            row.l1_lag += sl.l1_lag;
            row.l1_inst += sl.l1_inst;
            row.rho += sl.rho;
            row.two_cycle += sl.two_cycle;
            ++batches;
        }
        row.loss /= batches;
        row.nll /= batches;
        row.l1_lag /= batches;
        row.l1_inst /= batches;
        row.rho /= batches;
        row.two_cycle /= batches;

        if (has_inst && cfg.freeze_enabled && !res.freeze.frozen && epoch % cfg.extract_every == 0) {
            const BinaryMatrix support = freeze_support_of(instant_matrix_of(preds, d), cfg.freeze_support);
            const int edges = support.cast<int>().sum();
            if (edges >= res.freeze.e_min && is_acyclic(support)) {
                res.freeze.frozen = true;
                res.freeze.gamma_frozen_at = gamma;
                res.freeze.epoch_frozen = epoch;
            }
        }
        row.frozen = res.freeze.frozen;
        res.log.push_back(row);
    }

    res.graph = graph_from_predictors(preds, masks);
    res.graph.instant_enabled = des.instantaneous;
    if (des.instantaneous) {
        const BinaryMatrix keep = extract_dag(res.graph.instant_matrix);
        res.graph.instant_matrix = res.graph.instant_matrix.cwiseProduct(keep.cast<double>());
    } else {
        res.graph.instant_matrix.setZero();
    }
    res.predictors = std::move(preds);
    return res;
}

}  // namespace sc3d

#endif  // SC3D_STAGE2_STAGE2_HPP
