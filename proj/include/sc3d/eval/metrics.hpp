#ifndef SC3D_EVAL_METRICS_HPP
#define SC3D_EVAL_METRICS_HPP

#include "sc3d/core/types.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <tuple>
#include <vector>

namespace sc3d {

// Ordered-pair disagreement count; a reversed edge therefore costs 2.
inline int shd(const BinaryMatrix& est, const BinaryMatrix& truth) {
    if (est.rows() != truth.rows() || est.cols() != truth.cols())
        throw ShapeError("shd: shape mismatch (" + std::to_string(est.rows()) + "x" + std::to_string(est.cols()) +
                         " vs " + std::to_string(truth.rows()) + "x" + std::to_string(truth.cols()) + ")");
    return static_cast<int>((est.array() != truth.array()).count());
}

struct Support {
    std::vector<BinaryMatrix> lag;
    BinaryMatrix instant;
};

inline BinaryMatrix support_of(const Matrix& m, double tol) {
    return (m.array().abs() > tol).cast<std::uint8_t>();
}

// Entry is 1 iff |weight| > tol.
inline Support binarize(const DynamicGraph& g, double tol = 1e-8) {
    Support s;
    for (const auto& a : g.lag_matrices) s.lag.push_back(support_of(a, tol));
    s.instant = support_of(g.instant_matrix, tol);
    for (Eigen::Index j = 0; j < s.instant.rows(); ++j) s.instant(j, j) = 0;
    return s;
}

// out[j,i] = max_l |A_l[j,i]|.
inline Matrix aggregate_lag_scores(const DynamicGraph& g) {
    if (g.lag_matrices.empty()) throw Error("aggregate_lag_scores: graph has no lag matrices");
    Matrix out = g.lag_matrices.front().cwiseAbs();
    for (std::size_t l = 1; l < g.lag_matrices.size(); ++l) out = out.cwiseMax(g.lag_matrices[l].cwiseAbs());
    return out;
}

/// Mann-Whitney AUROC: P(score_pos > score_neg) + 0.5 P(tie). Undefined
/// (nullopt) unless both classes are present.
inline std::optional<double> auroc(const std::vector<int>& labels, const std::vector<double>& scores) {
    if (labels.size() != scores.size()) throw ShapeError("auroc: labels and scores differ in length");
    std::vector<double> pos, neg;
    for (std::size_t k = 0; k < labels.size(); ++k) (labels[k] ? pos : neg).push_back(scores[k]);
    if (pos.empty() || neg.empty()) return std::nullopt;
    std::sort(neg.begin(), neg.end());
    double wins = 0.0;
    for (double p : pos) {
        const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
        const auto hi = std::upper_bound(neg.begin(), neg.end(), p);
        wins += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
    }
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

namespace detail {

// Indices sorted by descending score, grouped into blocks of equal score.
inline std::vector<std::pair<std::size_t, std::size_t>> tie_blocks(const std::vector<double>& scores,
                                                                   std::vector<std::size_t>& idx) {
    idx.resize(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<std::pair<std::size_t, std::size_t>> blocks;
    for (std::size_t k = 0; k < idx.size();) {
        std::size_t e = k + 1;
        while (e < idx.size() && scores[idx[e]] == scores[idx[k]]) ++e;
        blocks.emplace_back(k, e);
        k = e;
    }
    return blocks;
}

}  // namespace detail

/// Area under the precision-recall step curve, sum_k (R_k - R_{k-1}) P_k over
/// distinct score thresholds. Undefined without positives.
inline std::optional<double> auprc(const std::vector<int>& labels, const std::vector<double>& scores) {
    if (labels.size() != scores.size()) throw ShapeError("auprc: labels and scores differ in length");
    const auto n_pos = std::count_if(labels.begin(), labels.end(), [](int v) { return v != 0; });
    if (n_pos == 0) return std::nullopt;
    std::vector<std::size_t> idx;
    const auto blocks = detail::tie_blocks(scores, idx);
    double tp = 0, fp = 0, prev_recall = 0, area = 0;
    for (const auto& [b, e] : blocks) {
        for (std::size_t k = b; k < e; ++k) (labels[idx[k]] ? tp : fp) += 1;
        const double recall = tp / static_cast<double>(n_pos);
        const double precision = tp / (tp + fp);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return area;
}

/// AUROC by trapezoidal integration of the ROC curve over distinct
/// thresholds; an independent route to the same number as auroc().
inline std::optional<double> auroc_trapezoid(const std::vector<int>& labels, const std::vector<double>& scores) {
    if (labels.size() != scores.size()) throw ShapeError("auroc_trapezoid: length mismatch");
    const auto n_pos = static_cast<double>(std::count_if(labels.begin(), labels.end(), [](int v) { return v != 0; }));
    const auto n_neg = static_cast<double>(labels.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;
    std::vector<std::size_t> idx;
    const auto blocks = detail::tie_blocks(scores, idx);
    double tp = 0, fp = 0, area = 0;
    for (const auto& [b, e] : blocks) {
        const double tpr0 = tp / n_pos, fpr0 = fp / n_neg;
        for (std::size_t k = b; k < e; ++k) (labels[idx[k]] ? tp : fp) += 1;
        area += (fp / n_neg - fpr0) * (tp / n_pos + tpr0) / 2.0;
    }
    return area;
}

inline double f1_score(const BinaryMatrix& est, const BinaryMatrix& truth) {
    if (est.rows() != truth.rows() || est.cols() != truth.cols()) throw ShapeError("f1_score: shape mismatch");
    int tp = 0, fp = 0, fn = 0;
    for (Eigen::Index j = 0; j < est.rows(); ++j)
        for (Eigen::Index i = 0; i < est.cols(); ++i) {
            if (i == j) continue;
            if (est(j, i) && truth(j, i)) ++tp;
            else if (est(j, i)) ++fp;
            else if (truth(j, i)) ++fn;
        }
    if (tp + fp + fn == 0) return 1.0;  // both empty
    if (tp == 0) return 0.0;
    return 2.0 * tp / (2.0 * tp + fp + fn);
}

/// For each target row keeps the k largest aggregated lag scores (ties by
/// column index; zero scores never kept) and maps each kept pair back to the
/// lag where it attains its maximum (smallest such lag on ties).
inline std::vector<BinaryMatrix> topk_mask(const DynamicGraph& g, int k, bool exclude_self = true) {
    if (k < 1) throw Error("topk_mask: k must be >= 1");
    const int d = g.dim, L = g.lag_order;
    const Matrix agg = aggregate_lag_scores(g);
    std::vector<BinaryMatrix> out(static_cast<std::size_t>(L), BinaryMatrix::Zero(d, d));
    for (int j = 0; j < d; ++j) {
        std::vector<int> cols;
        for (int i = 0; i < d; ++i)
            if (!(exclude_self && i == j) && agg(j, i) > 0) cols.push_back(i);
        std::stable_sort(cols.begin(), cols.end(), [&](int a, int b) { return agg(j, a) > agg(j, b); });
        if (static_cast<int>(cols.size()) > k) cols.resize(static_cast<std::size_t>(k));
        for (int i : cols) {
            int best = 1;
            for (int l = 2; l <= L; ++l)
                if (std::abs(g.lag(l)(j, i)) > std::abs(g.lag(best)(j, i))) best = l;
            out[static_cast<std::size_t>(best - 1)](j, i) = 1;
        }
    }
    return out;
}

struct MetricOptions {
    double tol = 1e-8;
    // Leave self-lag pairs (j, j) out of ranking metrics and top-k.
    bool exclude_self_lags = true;
    std::optional<int> topk;
};

struct MetricsReport {
    std::vector<int> shd_per_lag;
    int shd_A = 0;
    int shd_B = 0;
    int shd_total = 0;
    double f1_B = 1.0;
    std::optional<double> auroc_A, auprc_A, auroc_B, auprc_B;
    std::optional<int> topk_shd_A;
};

// Pads a graph's lag list with zero matrices up to L.
inline DynamicGraph pad_lags(DynamicGraph g, int L) {
    while (g.lag_order < L) {
        g.lag_matrices.push_back(Matrix::Zero(g.dim, g.dim));
        ++g.lag_order;
    }
    return g;
}

/// Full comparison of an estimate against ground truth. Supports come from
/// binarize(tol); an estimate without instantaneous output is scored as B = 0.
inline MetricsReport graph_metrics(const DynamicGraph& est_in, const DynamicGraph& truth_in,
                                   const MetricOptions& opt = {}) {
    if (est_in.dim != truth_in.dim) throw ShapeError("graph_metrics: dimension mismatch");
    const int L = std::max(est_in.lag_order, truth_in.lag_order);
    const DynamicGraph est = pad_lags(est_in, L), truth = pad_lags(truth_in, L);
    const int d = est.dim;
    const Support se = binarize(est, opt.tol), st = binarize(truth, 0.0);

    MetricsReport r;
    for (int l = 0; l < L; ++l) {
        r.shd_per_lag.push_back(shd(se.lag[static_cast<std::size_t>(l)], st.lag[static_cast<std::size_t>(l)]));
        r.shd_A += r.shd_per_lag.back();
    }
    const BinaryMatrix est_b = est.instant_enabled ? se.instant : BinaryMatrix::Zero(d, d);
    r.shd_B = shd(est_b, st.instant);
    r.shd_total = r.shd_A + r.shd_B;
    r.f1_B = f1_score(est_b, st.instant);

    const Matrix agg_est = aggregate_lag_scores(est);
    const Matrix agg_truth = aggregate_lag_scores(truth);
    std::vector<int> labels;
    std::vector<double> scores;
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) {
            if (opt.exclude_self_lags && i == j) continue;
            labels.push_back(agg_truth(j, i) != 0.0);
            scores.push_back(agg_est(j, i));
        }
    r.auroc_A = auroc(labels, scores);
    r.auprc_A = auprc(labels, scores);

    if (est.instant_enabled) {
        labels.clear();
        scores.clear();
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i) {
                if (i == j) continue;
                labels.push_back(truth.instant_matrix(j, i) != 0.0);
                scores.push_back(std::abs(est.instant_matrix(j, i)));
            }
        r.auroc_B = auroc(labels, scores);
        r.auprc_B = auprc(labels, scores);
    }

    if (opt.topk) {
        const auto kept = topk_mask(est, *opt.topk, opt.exclude_self_lags);
        int total = 0;
        for (int l = 0; l < L; ++l) {
            BinaryMatrix t = st.lag[static_cast<std::size_t>(l)];
            BinaryMatrix e = kept[static_cast<std::size_t>(l)];
            if (opt.exclude_self_lags)
                for (int j = 0; j < d; ++j) t(j, j) = e(j, j) = 0;
            total += shd(e, t);
        }
        r.topk_shd_A = total;
    }
    return r;
}

}  // namespace sc3d

#endif  // SC3D_EVAL_METRICS_HPP
