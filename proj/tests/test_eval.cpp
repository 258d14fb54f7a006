#include "sc3d/core/rng.hpp"
#include "sc3d/datagen/tvsem.hpp"
#include "sc3d/eval/metrics.hpp"
#include "sc3d/eval/tracking.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace sc3d;

namespace {

BinaryMatrix random_binary(Rng& rng, int d, double p) {
    BinaryMatrix m(d, d);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.bernoulli(p);
    return m;
}

// Pairwise-count AUROC.
std::optional<double> auroc_pairs(const std::vector<int>& y, const std::vector<double>& s) {
    double good = 0, pairs = 0;
    for (std::size_t a = 0; a < y.size(); ++a)
        for (std::size_t b = 0; b < y.size(); ++b)
            if (y[a] && !y[b]) {
                pairs += 1;
                good += s[a] > s[b] ? 1.0 : (s[a] == s[b] ? 0.5 : 0.0);
            }
    if (pairs == 0) return std::nullopt;
    return good / pairs;
}

// Step-curve AUPRC by scanning every distinct threshold from the top.
std::optional<double> auprc_thresholds(const std::vector<int>& y, const std::vector<double>& s) {
    const double pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
    if (pos == 0) return std::nullopt;
    std::set<double, std::greater<>> cuts(s.begin(), s.end());
    double prev_r = 0, area = 0;
    for (double c : cuts) {
        double tp = 0, fp = 0;
        for (std::size_t k = 0; k < y.size(); ++k)
            if (s[k] >= c) (y[k] ? tp : fp) += 1;
        const double r = tp / pos;
        area += (r - prev_r) * tp / (tp + fp);
        prev_r = r;
    }
    return area;
}

DynamicGraph random_graph(Rng& rng, int d, int L, double p) {
    DynamicGraph g(d, L, true);
    for (auto& a : g.lag_matrices)
        for (Eigen::Index k = 0; k < a.size(); ++k)
            if (rng.bernoulli(p)) a.data()[k] = rng.uniform(-1.0, 1.0);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < j; ++i)
            if (rng.bernoulli(p)) g.instant_matrix(j, i) = rng.uniform(-1.0, 1.0);
    return g;
}

}  // namespace

TEST(Shd, Basics) {
    BinaryMatrix t = BinaryMatrix::Zero(3, 3);
    t(1, 0) = 1;
    EXPECT_EQ(shd(t, t), 0);
    BinaryMatrix e = t;
    e(2, 1) = 1;
    EXPECT_EQ(shd(e, t), 1);
    BinaryMatrix rev = BinaryMatrix::Zero(3, 3);
    rev(0, 1) = 1;
    EXPECT_EQ(shd(rev, t), 2);
    EXPECT_THROW(shd(BinaryMatrix::Zero(2, 2), t), ShapeError);
}

TEST(Shd, XorPopcountOracle) {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const BinaryMatrix a = random_binary(rng, 4, 0.4), b = random_binary(rng, 4, 0.4);
        int x = 0;
        for (int k = 0; k < 16; ++k) x += (a.data()[k] ^ b.data()[k]);
        EXPECT_EQ(shd(a, b), x);
    }
}

TEST(Binarize, Examples) {
    DynamicGraph g(2, 1, true);
    const Support z = binarize(g);
    EXPECT_EQ(z.lag[0].cast<int>().sum(), 0);
    EXPECT_EQ(z.instant.cast<int>().sum(), 0);
    g.lag(1)(0, 1) = 0.9;
    g.lag(1)(1, 0) = 0.4;
    EXPECT_EQ(binarize(g, 1.0).lag[0].cast<int>().sum(), 0);
    const Support half = binarize(g, 0.5);
    EXPECT_EQ(half.lag[0](0, 1), 1);
    EXPECT_EQ(half.lag[0](1, 0), 0);
}

TEST(AggregateLagScores, MaxOverLags) {
    DynamicGraph g(2, 3, false);
    g.lag(1)(1, 0) = 0.2;
    g.lag(2)(1, 0) = -0.7;
    g.lag(3)(1, 0) = 0.1;
    const Matrix a = aggregate_lag_scores(g);
    EXPECT_DOUBLE_EQ(a(1, 0), 0.7);
    EXPECT_EQ(a(0, 1), 0.0);
    DynamicGraph h(2, 1, false);
    h.lag(1) << -0.3, 0.1, 0.0, 2.0;
    EXPECT_EQ(aggregate_lag_scores(h), h.lag(1).cwiseAbs());
}

TEST(Auroc, Examples) {
    EXPECT_DOUBLE_EQ(*auroc({1, 0}, {0.9, 0.1}), 1.0);
    EXPECT_DOUBLE_EQ(*auroc({1, 0, 1, 0}, {0.9, 0.8, 0.7, 0.1}), 0.75);
    EXPECT_FALSE(auroc({1, 1}, {0.3, 0.2}).has_value());
    EXPECT_FALSE(auroc({0, 0}, {0.3, 0.2}).has_value());
    EXPECT_DOUBLE_EQ(*auroc({1, 0}, {0.5, 0.5}), 0.5);
}

TEST(Auroc, AgreesAcrossRoutesAndOracle) {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(30));
        std::vector<int> y(static_cast<std::size_t>(n));
        std::vector<double> s(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            y[static_cast<std::size_t>(k)] = rng.bernoulli(0.4);
            // Coarse scores so ties are common.
            s[static_cast<std::size_t>(k)] = std::floor(rng.uniform() * 5) / 5;
        }
        const auto a = auroc(y, s), b = auroc_trapezoid(y, s), c = auroc_pairs(y, s);
        ASSERT_EQ(a.has_value(), c.has_value());
        ASSERT_EQ(b.has_value(), c.has_value());
        if (!c) continue;
        EXPECT_NEAR(*a, *c, 1e-12);
        EXPECT_NEAR(*b, *c, 1e-12);
    }
}

TEST(Auprc, ExamplesAndOracle) {
    EXPECT_DOUBLE_EQ(*auprc({1, 0}, {0.9, 0.1}), 1.0);
    // Ranking 1,0,1: precision 1 at recall .5, 2/3 at recall 1.
    EXPECT_NEAR(*auprc({1, 0, 1}, {0.9, 0.8, 0.7}), 0.5 + 0.5 * 2.0 / 3.0, 1e-15);
    EXPECT_FALSE(auprc({0, 0}, {0.1, 0.2}).has_value());
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(25));
        std::vector<int> y(static_cast<std::size_t>(n));
        std::vector<double> s(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            y[static_cast<std::size_t>(k)] = rng.bernoulli(0.5);
            s[static_cast<std::size_t>(k)] = std::floor(rng.uniform() * 6);
        }
        const auto a = auprc(y, s), b = auprc_thresholds(y, s);
        ASSERT_EQ(a.has_value(), b.has_value());
        if (a) { EXPECT_NEAR(*a, *b, 1e-12); }
    }
}

TEST(F1, Cases) {
    BinaryMatrix t = BinaryMatrix::Zero(3, 3), e = BinaryMatrix::Zero(3, 3);
    EXPECT_EQ(f1_score(e, t), 1.0);
    t(1, 0) = 1;
    EXPECT_EQ(f1_score(e, t), 0.0);
    e(1, 0) = 1;
    e(2, 0) = 1;
    EXPECT_DOUBLE_EQ(f1_score(e, t), 2.0 / 3.0);
}

TEST(Topk, Examples) {
    DynamicGraph g(3, 1, false);
    g.lag(1).row(0) << 0.9, 0.1, 0.2;
    const auto k1 = topk_mask(g, 1, false);
    EXPECT_EQ(k1[0](0, 0), 1);
    EXPECT_EQ(k1[0].row(0).cast<int>().sum(), 1);
    const auto all = topk_mask(g, 5, false);
    EXPECT_EQ(all[0].cast<int>().sum(), 3);
    EXPECT_THROW(topk_mask(g, 0), Error);
}

TEST(Topk, CountsPerRowAndLagOfMaximum) {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 3 + trial % 6, L = 1 + trial % 3;
        const DynamicGraph g = random_graph(rng, d, L, 0.5);
        const int k = 1 + trial % 3;
        const auto m = topk_mask(g, k);
        const Matrix agg = aggregate_lag_scores(g);
        for (int j = 0; j < d; ++j) {
            int nnz = 0, kept = 0;
            for (int i = 0; i < d; ++i) nnz += i != j && agg(j, i) > 0;
            for (int l = 0; l < L; ++l) kept += m[static_cast<std::size_t>(l)].row(j).cast<int>().sum();
            EXPECT_EQ(kept, std::min(k, nnz));
            for (int l = 0; l < L; ++l)
                for (int i = 0; i < d; ++i)
                    if (m[static_cast<std::size_t>(l)](j, i)) { EXPECT_EQ(std::abs(g.lag(l + 1)(j, i)), agg(j, i)); }
        }
    }
}

TEST(GraphMetrics, IdenticalGraphs) {
    Rng rng(5);
    const DynamicGraph g = random_graph(rng, 5, 2, 0.4);
    const MetricsReport r = graph_metrics(g, g);
    EXPECT_EQ(r.shd_total, 0);
    EXPECT_EQ(r.f1_B, 1.0);
    DynamicGraph empty_b = g;
    empty_b.instant_matrix.setZero();
    EXPECT_EQ(graph_metrics(empty_b, empty_b).f1_B, 1.0);
}

TEST(GraphMetrics, MissingInstantCountsEveryTrueEdge) {
    Rng rng(6);
    const DynamicGraph truth = random_graph(rng, 6, 1, 0.5);
    DynamicGraph est = truth;
    est.instant_matrix.setZero();
    const int k = static_cast<int>((truth.instant_matrix.array() != 0).count());
    EXPECT_EQ(graph_metrics(est, truth).shd_B, k);
    est.instant_enabled = false;
    const MetricsReport r = graph_metrics(est, truth);
    EXPECT_EQ(r.shd_B, k);
    EXPECT_FALSE(r.auroc_B.has_value());
}

TEST(GraphMetrics, MatchesStraightLineRecomputation) {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const int d = 3 + trial % 4, L = 1 + trial % 3;
        const DynamicGraph truth = random_graph(rng, d, L, 0.4), est = random_graph(rng, d, L, 0.5);
        MetricOptions opt;
        opt.topk = 2;
        const MetricsReport r = graph_metrics(est, truth, opt);

        int shd_a = 0, shd_b = 0, tp = 0, fp = 0, fn = 0, topk = 0;
        for (int l = 1; l <= L; ++l)
            for (int j = 0; j < d; ++j)
                for (int i = 0; i < d; ++i) shd_a += (std::abs(est.lag(l)(j, i)) > 1e-8) != (truth.lag(l)(j, i) != 0);
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i) {
                if (i == j) continue;
                const bool e = std::abs(est.instant_matrix(j, i)) > 1e-8, t = truth.instant_matrix(j, i) != 0;
                shd_b += e != t;
                tp += e && t;
                fp += e && !t;
                fn += !e && t;
            }
        std::vector<int> ya, yb;
        std::vector<double> sa, sb;
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i) {
                if (i == j) continue;
                double best_e = 0, best_t = 0;
                for (int l = 1; l <= L; ++l) {
                    best_e = std::max(best_e, std::abs(est.lag(l)(j, i)));
                    best_t = std::max(best_t, std::abs(truth.lag(l)(j, i)));
                }
                ya.push_back(best_t > 0);
                sa.push_back(best_e);
                yb.push_back(truth.instant_matrix(j, i) != 0);
                sb.push_back(std::abs(est.instant_matrix(j, i)));
            }
        const auto kept = topk_mask(est, 2, true);
        for (int l = 1; l <= L; ++l)
            for (int j = 0; j < d; ++j)
                for (int i = 0; i < d; ++i)
                    if (i != j) topk += kept[static_cast<std::size_t>(l - 1)](j, i) != (truth.lag(l)(j, i) != 0);

        EXPECT_EQ(r.shd_A, shd_a);
        EXPECT_EQ(r.shd_B, shd_b);
        EXPECT_EQ(r.shd_total, shd_a + shd_b);
        int per_lag = 0;
        for (int v : r.shd_per_lag) per_lag += v;
        EXPECT_EQ(per_lag, r.shd_A);
        const double f1 = tp + fp + fn == 0 ? 1.0 : (tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn));
        EXPECT_DOUBLE_EQ(r.f1_B, f1);
        const auto oa = auroc_pairs(ya, sa), ob = auroc_pairs(yb, sb);
        ASSERT_EQ(r.auroc_A.has_value(), oa.has_value());
        if (oa) { EXPECT_NEAR(*r.auroc_A, *oa, 1e-12); }
        ASSERT_EQ(r.auroc_B.has_value(), ob.has_value());
        if (ob) { EXPECT_NEAR(*r.auroc_B, *ob, 1e-12); }
        const auto pa = auprc_thresholds(ya, sa);
        ASSERT_EQ(r.auprc_A.has_value(), pa.has_value());
        if (pa) { EXPECT_NEAR(*r.auprc_A, *pa, 1e-12); }
        EXPECT_EQ(*r.topk_shd_A, topk);
    }
}

TEST(GraphMetrics, RankingMetricsInvariantToPositiveRescale) {
    Rng rng(8);
    const DynamicGraph truth = random_graph(rng, 6, 2, 0.4);
    DynamicGraph est = random_graph(rng, 6, 2, 0.6);
    const MetricsReport a = graph_metrics(est, truth);
    for (auto& m : est.lag_matrices) m *= 3.7;
    est.instant_matrix *= 3.7;
    const MetricsReport b = graph_metrics(est, truth);
    EXPECT_EQ(*a.auroc_A, *b.auroc_A);
    EXPECT_EQ(*a.auprc_A, *b.auprc_A);
    EXPECT_EQ(*a.auroc_B, *b.auroc_B);
    EXPECT_EQ(a.shd_total, b.shd_total);
}

TEST(GraphMetrics, DimensionMismatchThrows) {
    EXPECT_THROW(graph_metrics(DynamicGraph(3, 1, true), DynamicGraph(4, 1, true)), ShapeError);
}

namespace {

// x_t = t (value encodes time) so a discover function can recover where its
// window starts.
TimeSeriesDataset clock_dataset(int T, int period) {
    TimeSeriesDataset ds(1, T, 2);
    for (int t = 0; t < T; ++t) ds.at(0, t, 0) = t;
    std::vector<int> b;
    for (int t = period; t < T; t += period) b.push_back(t);
    ds.regime_boundaries = b;
    return ds;
}

DynamicGraph regime_graph(const TimeSeriesDataset& w, int period, bool swapped) {
    DynamicGraph g(2, 1, false);
    const int start = static_cast<int>(w.at(0, 0, 0));
    const Matrix a = tvsem_regime_matrix(tvsem_regime_at(start, period));
    g.lag(1) = swapped ? Matrix(a.transpose()) : a;
    return g;
}

bool xy_dominant(int r) { return r % 2 == 1; }

}  // namespace

TEST(Tracking, OracleScoresArePerfect) {
    const auto ds = clock_dataset(800, 200);
    const auto tr = windowed_tracking(ds, 100, 25, [](const TimeSeriesDataset& w) { return regime_graph(w, 200, false); },
                                      xy_dominant);
    EXPECT_EQ(tr.windows.size(), 29u);
    EXPECT_GT(tr.scored_windows, 0);
    EXPECT_DOUBLE_EQ(tr.accuracy(), 1.0);
    EXPECT_TRUE(flips_at_boundaries(tr, xy_dominant));
}

TEST(Tracking, SwappedScoresScoreZero) {
    const auto ds = clock_dataset(800, 200);
    const auto tr = windowed_tracking(ds, 100, 25, [](const TimeSeriesDataset& w) { return regime_graph(w, 200, true); },
                                      xy_dominant);
    EXPECT_DOUBLE_EQ(tr.accuracy(), 0.0);
    EXPECT_FALSE(flips_at_boundaries(tr, xy_dominant));
}

TEST(Tracking, StraddlingWindowsAreUnscored) {
    const auto ds = clock_dataset(400, 200);
    const auto tr = windowed_tracking(ds, 100, 25, [](const TimeSeriesDataset& w) { return regime_graph(w, 200, false); },
                                      xy_dominant);
    for (const auto& w : tr.windows) {
        const bool straddles = w.window_start < 200 && w.window_start + 99 >= 200;
        EXPECT_EQ(w.regime.has_value(), !straddles) << w.window_start;
    }
}

TEST(Tracking, NoCompleteWindowThrows) {
    const auto ds = clock_dataset(50, 200);
    EXPECT_THROW(windowed_tracking(ds, 100, 25, [](const TimeSeriesDataset& w) { return regime_graph(w, 200, false); },
                                   xy_dominant),
                 Error);
}
