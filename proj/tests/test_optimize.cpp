#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include <diagslice/optimize.hpp>

using namespace diagslice;

namespace {

OptimizerConfig config(int d, int n, std::size_t budget, Algorithm a, std::uint64_t seed) {
    OptimizerConfig cfg;
    cfg.d = d;
    cfg.n = n;
    cfg.budget = budget;
    cfg.algorithm = a;
    cfg.master_seed = seed;
    return cfg;
}

void expect_valid_run(const OptimizerRun& run) {
    const auto& cfg = run.config;
    EXPECT_LE(run.eval_count, cfg.budget);
    EXPECT_EQ(run.trajectory.size(), run.eval_count);
    for (std::size_t i = 0; i < run.trajectory.size(); ++i) {
        EXPECT_EQ(run.trajectory[i].evaluation, i + 1);
        if (i > 0) {
            EXPECT_LE(run.trajectory[i].best, run.trajectory[i - 1].best);
        }
    }
    const auto& p = run.best_candidate.values();
    EXPECT_EQ(p.size(), cfg.search_dimension());
    EXPECT_TRUE(std::is_sorted(p.begin(), p.end()));
    for (double v : p) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, cfg.upper_bound());
    }
    EXPECT_EQ(run.best_lowfi, run.trajectory.back().best);
    EXPECT_GE(run.best_hifi.mean_sq, run.best_lowfi - 5 * run.best_lowfi_se);
}

} // namespace

TEST(SortProject, Examples) {
    const std::vector<double> x{0.9, 0.3, 1.5};
    const auto p = sort_project(x, 2);
    ASSERT_EQ(p.size(), 3u);
    EXPECT_EQ(p.values()[0], 0.3);
    EXPECT_EQ(p.values()[1], 0.9);
    EXPECT_NEAR(p.values()[2], 1.41421356, 1e-8);

    const std::vector<double> sorted{0.1, 0.5, 1.2};
    EXPECT_EQ(sort_project(sorted, 2).values(), sorted);

    const std::vector<double> equal(4, 0.7);
    EXPECT_EQ(sort_project(equal, 3).values(), equal);

    const std::vector<double> wild{-3.0, std::nan(""), 9.0};
    EXPECT_EQ(sort_project(wild, 4).values(), (std::vector<double>{0.0, 0.0, 2.0}));
}

TEST(SortProject, IdempotentAndPermutationInvariant) {
    Rng rng(RngSpec{41, 0});
    for (int t = 0; t < 200; ++t) {
        std::vector<double> x(1 + t % 9);
        for (auto& v : x) v = rng.uniform(-1.0, 3.0);
        const auto once = sort_project(x, 3);
        EXPECT_EQ(sort_project(once.values(), 3), once);
        auto shuffled = x;
        std::reverse(shuffled.begin(), shuffled.end());
        std::rotate(shuffled.begin(), shuffled.begin() + static_cast<long>(shuffled.size() / 2), shuffled.end());
        EXPECT_EQ(sort_project(shuffled, 3), once);
    }
}

TEST(Evaluate, CentreCutAndMovedCut) {
    const double centre = evaluate(DiagonalCoords(2, {std::sqrt(2.0) / 2.0}), 10000, RngSpec{42, 0});
    EXPECT_NEAR(centre, 0.05, 0.001);
    // For N=2 the best single cut lies past the centre, near p = 0.8.
    const double moved = evaluate(DiagonalCoords(2, {0.8}), 10000, RngSpec{43, 0});
    EXPECT_NEAR(moved, 0.0490, 0.0008);
    EXPECT_LT(moved, centre);
}

TEST(Evaluate, DegenerateCandidatesScoreWorst) {
    EXPECT_EQ(evaluate(DiagonalCoords(2, {0.5, 0.5}), 100, RngSpec{}), worst_fitness);
    EXPECT_EQ(evaluate(DiagonalCoords(2, {0.0}), 100, RngSpec{}), worst_fitness);
    EXPECT_EQ(evaluate(DiagonalCoords(2, {0.7, 0.7 + 1e-13}), 100, RngSpec{}), worst_fitness);
}

TEST(Config, Validation) {
    auto cfg = config(2, 2, 10, Algorithm::one_plus_one_es, 0);
    EXPECT_NO_THROW(cfg.validate());
    cfg.budget = 0;
    EXPECT_THROW(cfg.validate(), domain_error);
    cfg = config(2, 1, 10, Algorithm::one_plus_one_es, 0);
    EXPECT_THROW(cfg.validate(), domain_error);
    cfg = config(2, 3, 10, Algorithm::one_plus_one_es, 0);
    cfg.lowfi_reps = 1;
    EXPECT_THROW(cfg.validate(), domain_error);
    EXPECT_EQ(config(2, 7, 1, Algorithm::diagonal_cma, 0).search_dimension(), 6u);
    EXPECT_EQ(to_string(Algorithm::one_plus_one_es), "es");
    EXPECT_EQ(to_string(Algorithm::diagonal_cma), "cma");
}

TEST(OnePlusOne, BudgetOneReturnsInitialCandidate) {
    auto cfg = config(2, 4, 1, Algorithm::one_plus_one_es, 44);
    cfg.lowfi_reps = 200;
    cfg.hifi_reps = 200;
    const auto run = run_one_plus_one_es(cfg);
    EXPECT_EQ(run.eval_count, 1u);
    ASSERT_EQ(run.trajectory.size(), 1u);
    expect_valid_run(run);
}

TEST(OnePlusOne, StepSizeRule) {
    auto cfg = config(2, 3, 150, Algorithm::one_plus_one_es, 45);
    cfg.lowfi_reps = 100;
    cfg.hifi_reps = 100;
    const auto run = run_one_plus_one_es(cfg);
    expect_valid_run(run);
    ASSERT_EQ(run.step_sizes.size(), run.eval_count);
    EXPECT_NEAR(run.step_sizes[0], 0.3 * std::sqrt(2.0) / std::sqrt(2.0), 1e-15);
    const double up = std::exp(1.0 / 3.0);
    const double down = std::exp(-1.0 / 12.0);
    int successes = 0;
    std::size_t run_start = 0;
    for (std::size_t i = 1; i < run.step_sizes.size(); ++i) {
        const double ratio = run.step_sizes[i] / run.step_sizes[i - 1];
        const bool grew = std::fabs(ratio - up) < 1e-12;
        ASSERT_TRUE(grew || std::fabs(ratio - down) < 1e-12) << i;
        if (grew) {
            ++successes;
            run_start = i;
        } else {
            const double k = static_cast<double>(i - run_start);
            EXPECT_NEAR(run.step_sizes[i] / run.step_sizes[run_start], std::exp(-k / 12.0), 1e-12);
        }
    }
    EXPECT_GT(successes, 0);
}

TEST(OnePlusOne, Deterministic) {
    auto cfg = config(2, 3, 60, Algorithm::one_plus_one_es, 46);
    cfg.lowfi_reps = 100;
    cfg.hifi_reps = 300;
    const auto a = run_one_plus_one_es(cfg);
    cfg.threads = 3;
    const auto b = run_one_plus_one_es(cfg);
    EXPECT_EQ(a.best_candidate, b.best_candidate);
    EXPECT_EQ(a.best_hifi.mean_sq, b.best_hifi.mean_sq);
    ASSERT_EQ(a.trajectory.size(), b.trajectory.size());
    for (std::size_t i = 0; i < a.trajectory.size(); ++i) EXPECT_EQ(a.trajectory[i].best, b.trajectory[i].best);
    EXPECT_EQ(a.step_sizes, b.step_sizes);
}

TEST(OnePlusOne, TwoStrataBudget200) {
    int within = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto run = run_one_plus_one_es(config(2, 2, 200, Algorithm::one_plus_one_es, 100 + s));
        expect_valid_run(run);
        within += run.best_hifi.mean_sq >= 0.0485 && run.best_hifi.mean_sq <= 0.0500;
    }
    EXPECT_GE(within, 9);
}

TEST(OnePlusOne, FiveStrataBeatsEquivolume) {
    int wins = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto run = run_one_plus_one_es(config(2, 5, 1000, Algorithm::one_plus_one_es, 200 + s));
        expect_valid_run(run);
        wins += run.best_hifi.mean_sq <= 0.01560;
    }
    EXPECT_GE(wins, 8);
}

TEST(Cma, PopulationFloor) {
    EXPECT_EQ(cma_population(1), 4u);
    EXPECT_EQ(cma_population(2), 6u);
    EXPECT_EQ(cma_population(3), 7u);
    EXPECT_EQ(cma_population(9), 10u);
    EXPECT_EQ(cma_population(19), 12u);
}

TEST(Cma, PartialGenerationStaysWithinBudget) {
    auto cfg = config(2, 4, 10, Algorithm::diagonal_cma, 47);
    cfg.lowfi_reps = 100;
    cfg.hifi_reps = 100;
    const auto run = run_diagonal_cma(cfg);
    EXPECT_EQ(run.eval_count, 10u);
    expect_valid_run(run);
}

TEST(Cma, FourStrataTwoDimensions) {
    const auto run = run_diagonal_cma(config(2, 4, 1000, Algorithm::diagonal_cma, 48));
    expect_valid_run(run);
    EXPECT_GE(run.best_hifi.mean_sq, 0.0185);
    EXPECT_LE(run.best_hifi.mean_sq, 0.0204);
}

TEST(Cma, FiveStrataThreeDimensions) {
    const auto run = run_diagonal_cma(config(3, 5, 1000, Algorithm::diagonal_cma, 49));
    expect_valid_run(run);
    EXPECT_LE(run.best_hifi.mean_sq, 0.0121);
}

TEST(Cma, Deterministic) {
    auto cfg = config(3, 4, 80, Algorithm::diagonal_cma, 50);
    cfg.lowfi_reps = 100;
    cfg.hifi_reps = 100;
    const auto a = run_optimizer(cfg);
    const auto b = run_optimizer(cfg);
    EXPECT_EQ(a.best_candidate, b.best_candidate);
    EXPECT_EQ(a.step_sizes, b.step_sizes);
}

TEST(BestOf, KeepsLowestHifi) {
    auto cfg = config(2, 3, 40, Algorithm::one_plus_one_es, 51);
    cfg.lowfi_reps = 100;
    cfg.hifi_reps = 500;
    const auto best = run_best_of(cfg, 4);
    for (std::uint64_t r = 0; r < 4; ++r) {
        auto one = cfg;
        one.master_seed = derive_seed(cfg.master_seed, r);
        EXPECT_LE(best.best_hifi.mean_sq, run_optimizer(one).best_hifi.mean_sq);
    }
    EXPECT_THROW(run_best_of(cfg, 0), domain_error);
}
