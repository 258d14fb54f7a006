#include "sc3d/experiment.hpp"
#include "sc3d/stage2/stage2.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sc3d;

namespace {

std::vector<NodePredictor> random_predictors(Rng& rng, int d, int L, bool inst, int H) {
    std::vector<NodePredictor> preds;
    for (int j = 0; j < d; ++j) {
        preds.emplace_back(j, window_groups(d, L, inst, j), H, false);
        for (Eigen::Index k = 0; k < preds.back().params().size(); ++k) preds.back().params()[k] = rng.uniform(-1.0, 1.0);
    }
    return preds;
}

struct Batch {
    std::vector<Matrix> node_x;
    Matrix targets;
};

Batch random_batch(Rng& rng, const std::vector<NodePredictor>& preds, int n) {
    Batch b;
    const int d = static_cast<int>(preds.size());
    for (const auto& p : preds) {
        Matrix x(n, p.num_groups());
        for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.normal();
        b.node_x.push_back(x);
    }
    b.targets.resize(n, d);
    for (Eigen::Index k = 0; k < b.targets.size(); ++k) b.targets.data()[k] = rng.normal();
    return b;
}

TimeSeriesDataset noise_dataset(int T, int d, std::uint64_t seed) {
    TimeSeriesDataset ds(1, T, d);
    Rng rng(seed);
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < d; ++i) ds.at(0, t, i) = rng.normal();
    return ds;
}

Stage2Config fast_config() {
    Stage2Config c;
    c.epochs = 20;
    c.hidden_width = 6;
    c.jobs = 1;
    return c;
}

}  // namespace

TEST(EMin, TableValues) {
    EXPECT_EQ(e_min(6, 2), 6);
    EXPECT_EQ(e_min(20, 2), 26);
    EXPECT_EQ(e_min(30, 2), 48);
    EXPECT_EQ(e_min(7, 2), 9);
}

TEST(GraphFromPredictors, MaskedOutGivesZeroGraph) {
    Rng rng(1);
    const auto preds = random_predictors(rng, 3, 2, true, 4);
    EdgeMasks m = EdgeMasks::all_ones(3, 2, true);
    for (auto& a : m.lag_masks) a.setZero();
    m.instant_mask.setZero();
    const DynamicGraph g = graph_from_predictors(preds, m);
    for (int l = 1; l <= 2; ++l) EXPECT_TRUE(g.lag(l).isZero(0.0));
    EXPECT_TRUE(g.instant_matrix.isZero(0.0));
}

TEST(GraphFromPredictors, ZeroWeightsGiveZeroGraph) {
    std::vector<NodePredictor> preds;
    for (int j = 0; j < 3; ++j) preds.emplace_back(j, window_groups(3, 1, true, j), 4, false);
    const DynamicGraph g = graph_from_predictors(preds, EdgeMasks::all_ones(3, 1, true));
    EXPECT_TRUE(g.lag(1).isZero(0.0));
    EXPECT_TRUE(g.instant_matrix.isZero(0.0));
}

TEST(GraphFromPredictors, SingleColumnNorm) {
    std::vector<NodePredictor> preds;
    for (int j = 0; j < 2; ++j) preds.emplace_back(j, window_groups(2, 1, false, j), 2, false);
    // Node 1, group 0 = (x0, lag 1).
    preds[1].first_layer()(0, 0) = 3;
    preds[1].first_layer()(1, 0) = 4;
    const DynamicGraph g = graph_from_predictors(preds, EdgeMasks::all_ones(2, 1, false));
    EXPECT_DOUBLE_EQ(g.lag(1)(1, 0), 5.0);
    EXPECT_EQ(g.lag(1).cwiseAbs().sum(), 5.0);
}

TEST(Stage2Loss, PenaltiesOffEqualsSumOfMse) {
    Rng rng(2);
    const auto preds = random_predictors(rng, 3, 2, true, 4);
    const Batch b = random_batch(rng, preds, 10);
    Stage2Config cfg;
    cfg.alpha = cfg.beta = cfg.lambda_2c = 0;
    const Stage2Loss sl = stage2_loss(preds, b.node_x, b.targets, cfg, 0.0);
    double nll = 0;
    for (int j = 0; j < 3; ++j) nll += loss_and_grad(preds[static_cast<std::size_t>(j)], b.node_x[static_cast<std::size_t>(j)], b.targets.col(j), 0.0).loss;
    EXPECT_DOUBLE_EQ(sl.total, nll);
    EXPECT_DOUBLE_EQ(sl.nll, nll);
}

TEST(Stage2Loss, TriangularBHasNoAcyclicityTerms) {
    Rng rng(3);
    auto preds = random_predictors(rng, 4, 1, true, 3);
    // Keep only instantaneous parents i < j.
    for (int j = 0; j < 4; ++j) {
        auto w1 = preds[static_cast<std::size_t>(j)].first_layer();
        const auto& groups = preds[static_cast<std::size_t>(j)].groups();
        for (std::size_t k = 0; k < groups.size(); ++k)
            if (groups[k].instantaneous() && groups[k].var > j) w1.col(static_cast<Eigen::Index>(k)).setZero();
    }
    const Batch b = random_batch(rng, preds, 8);
    Stage2Config on;
    Stage2Config off = on;
    off.two_cycle_enabled = false;
    const Stage2Loss a = stage2_loss(preds, b.node_x, b.targets, on, 10.0);
    const Stage2Loss c = stage2_loss(preds, b.node_x, b.targets, off, 0.0);
    EXPECT_EQ(a.rho, 0.0);
    EXPECT_EQ(a.two_cycle, 0.0);
    EXPECT_DOUBLE_EQ(a.total, c.total);
}

TEST(Stage2Loss, GradientMatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(40 + seed);
        auto preds = random_predictors(rng, 3, 1, true, 4);
        const Batch b = random_batch(rng, preds, 6);
        Stage2Config cfg;
        cfg.alpha = 0.3;
        cfg.beta = 0.2;
        cfg.lambda_2c = 0.5;
        cfg.power_iterations = 200;
        const double gamma = 2.0;
        const Stage2Loss sl = stage2_loss(preds, b.node_x, b.targets, cfg, gamma);
        const double h = 1e-6;
        double worst = 0;
        for (std::size_t j = 0; j < preds.size(); ++j)
            for (Eigen::Index k = 0; k < preds[j].params().size(); ++k) {
                const double orig = preds[j].params()[k];
                preds[j].params()[k] = orig + h;
                const double up = stage2_loss(preds, b.node_x, b.targets, cfg, gamma).total;
                preds[j].params()[k] = orig - h;
                const double down = stage2_loss(preds, b.node_x, b.targets, cfg, gamma).total;
                preds[j].params()[k] = orig;
                const double fd = (up - down) / (2 * h), an = sl.grads[j][k];
                worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(fd)));
            }
        EXPECT_LT(worst, 1e-4) << "seed " << seed;
    }
}

TEST(FreezeSupport, RelativeCut) {
    Matrix B = Matrix::Zero(3, 3);
    B(1, 0) = 1.0;
    B(2, 0) = 0.05;
    B(2, 1) = 0.2;
    const BinaryMatrix s = freeze_support_of(B, 0.1);
    EXPECT_EQ(s(1, 0), 1);
    EXPECT_EQ(s(2, 0), 0);
    EXPECT_EQ(s(2, 1), 1);
    EXPECT_EQ(freeze_support_of(Matrix::Zero(3, 3), 0.1).cast<int>().sum(), 0);
}

TEST(RunStage2, InstantOffIsFrozenAtEpochZero) {
    const Design des = build_design(noise_dataset(60, 3, 5), 1, false);
    const Stage2Result r = run_stage2(des, EdgeMasks::all_ones(3, 1, false), nullptr, fast_config());
    EXPECT_TRUE(r.graph.instant_matrix.isZero(0.0));
    EXPECT_FALSE(r.graph.instant_enabled);
    EXPECT_TRUE(r.freeze.frozen);
    EXPECT_EQ(r.freeze.epoch_frozen, 0);
    for (const auto& row : r.log) EXPECT_EQ(row.gamma, 0.0);
}

TEST(RunStage2, TerminalExtractionGivesAcyclicB) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Design des = build_design(noise_dataset(60, 4, 10 + seed), 1, true);
        Stage2Config cfg = fast_config();
        cfg.gamma_max = 0;
        cfg.freeze_enabled = false;
        cfg.beta = 0;
        cfg.lambda_2c = 0;
        cfg.seed = seed;
        const Stage2Result r = run_stage2(des, EdgeMasks::all_ones(4, 1, true), nullptr, cfg);
        EXPECT_TRUE(is_acyclic(support_of(r.graph.instant_matrix, 0.0)));
        EXPECT_GT((r.graph.instant_matrix.array() != 0).count(), 0);
    }
}

TEST(RunStage2, MaskedEntriesStayZero) {
    const Design des = build_design(noise_dataset(60, 3, 6), 2, true);
    EdgeMasks m = EdgeMasks::all_ones(3, 2, true);
    m.lag_masks[1](0, 2) = 0;
    m.lag_masks[0](2, 2) = 0;
    m.instant_mask(1, 0) = 0;
    const Stage2Result r = run_stage2(des, m, nullptr, fast_config());
    EXPECT_EQ(r.graph.lag(2)(0, 2), 0.0);
    EXPECT_EQ(r.graph.lag(1)(2, 2), 0.0);
    EXPECT_EQ(r.graph.instant_matrix(1, 0), 0.0);
    for (std::size_t j = 0; j < 3; ++j) {
        const auto act = group_activity(r.predictors[j].groups(), m, static_cast<int>(j));
        const Vector s = group_scores(r.predictors[j]);
        for (std::size_t k = 0; k < act.size(); ++k)
            if (!act[k]) { EXPECT_EQ(s[static_cast<Eigen::Index>(k)], 0.0); }
    }
}

TEST(RunStage2, GammaScheduleMonotoneAndCappedAfterFreeze) {
    const Design des = build_design(noise_dataset(80, 4, 7), 1, true);
    Stage2Config cfg = fast_config();
    cfg.epochs = 30;
    cfg.freeze_enabled = false;
    const Stage2Result r = run_stage2(des, EdgeMasks::all_ones(4, 1, true), nullptr, cfg);
    ASSERT_EQ(r.log.size(), 30u);
    EXPECT_EQ(r.log.front().gamma, 0.0);
    EXPECT_DOUBLE_EQ(r.log.back().gamma, cfg.gamma_max);
    for (std::size_t k = 1; k < r.log.size(); ++k) EXPECT_GE(r.log[k].gamma, r.log[k - 1].gamma);
    EXPECT_FALSE(r.freeze.frozen);
}

TEST(RunStage2, FrozenGammaStaysConstant) {
    const Design des = build_design(noise_dataset(80, 4, 8), 1, true);
    Stage2Config cfg = fast_config();
    cfg.epochs = 40;
    cfg.s_inst = 0.1;  // e_min = 0
    // Only i < j instantaneous edges admissible: the support is always
    // acyclic, so the first check freezes.
    EdgeMasks m = EdgeMasks::all_ones(4, 1, true);
    for (int j = 0; j < 4; ++j)
        for (int i = j; i < 4; ++i) m.instant_mask(j, i) = 0;
    const Stage2Result r = run_stage2(des, m, nullptr, cfg);
    ASSERT_TRUE(r.freeze.frozen);
    const int e = *r.freeze.epoch_frozen;
    EXPECT_EQ(e, cfg.extract_every);
    EXPECT_GT(*r.freeze.gamma_frozen_at, 0.0);
    for (const auto& row : r.log) {
        if (row.epoch > e) { EXPECT_EQ(row.gamma, *r.freeze.gamma_frozen_at); }
        EXPECT_EQ(row.frozen, row.epoch >= e);
    }
}

TEST(RunStage2, MaskShapeMismatchThrows) {
    const Design des = build_design(noise_dataset(30, 3, 9), 1, true);
    EXPECT_THROW(run_stage2(des, EdgeMasks::all_ones(3, 2, true), nullptr, fast_config()), ShapeError);
}

TEST(RunStage2, InstantaneousF1OnLinearSvar) {
    // Full pipeline with defaults on linear SVAR d=10, L=3, T=200.
    ExperimentConfig cfg;
    cfg.generator.dim = 10;
    cfg.generator.lag_order = 3;
    cfg.generator.horizon = 200;
    cfg.generator.nonlinearity = Nonlinearity::linear;
    double f1 = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto run = run_pipeline(generate(cfg.generator, seed), 3, true, discovery_for(cfg, Variant::full, seed, 1),
                                      cfg.metrics);
        f1 += run.metrics->f1_B;
    }
    EXPECT_GE(f1 / 5, 0.5);
}
