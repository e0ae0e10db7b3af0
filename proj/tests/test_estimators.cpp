#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "nsal/estimators.hpp"

using namespace nsal;

namespace {

SamplePool fully_annotated(std::vector<int> labels) {
    SamplePool pool(std::move(labels), 2);
    pool.annotate(pool.unlabeled_ids(), 0);
    return pool;
}

// Every k-subset of {0..n-1}, in lexicographic order.
std::vector<std::vector<std::size_t>> subsets(std::size_t n, std::size_t k) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> cur;
    auto rec = [&](auto&& self, std::size_t start) -> void {
        if (cur.size() == k) {
            out.push_back(cur);
            return;
        }
        for (std::size_t i = start; i < n; ++i) {
            cur.push_back(i);
            self(self, i + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

}  // namespace

TEST(RoundEstimate, CensusIsExactWithZeroVariance) {
    auto pool = fully_annotated({1, 0, 0, 1, 1, 0, 0, 0});
    Eigen::VectorXd s(8);
    s << 0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9;
    const std::vector<double> cut{0.5};
    const auto tree = tree_from_thresholds(s, cut);
    SampleDraw draw;
    draw.selected_ids = {tree.strata[0].member_ids, tree.strata[1].member_ids};
    const auto est = round_estimate(pool, draw, tree, {1});
    EXPECT_DOUBLE_EQ(est.estimate[0], 3.0 / 8.0);
    EXPECT_EQ(est.variance_est[0], 0.0);
}

TEST(RoundEstimate, SingleStratumMatchesSrsVarianceAnchor) {
    // p_hat = 0.1 over n = 10000 draws from a very large stratum.
    std::vector<int> labels(20000, 0);
    for (std::size_t i = 0; i < 1000; ++i) labels[i] = 1;
    auto pool = fully_annotated(labels);
    const auto tree = single_stratum_tree(Eigen::VectorXd::Constant(20000, 0.5));
    SampleDraw draw;
    draw.selected_ids.emplace_back();
    for (UnitId id = 0; id < 10000; ++id) draw.selected_ids[0].push_back(id);
    const auto est = round_estimate(pool, draw, tree, {1});
    EXPECT_DOUBLE_EQ(est.estimate[0], 0.1);
    // n/(n-1) p(1-p)/n with fpc 1/2 for n = N/2.
    const double expected = 0.5 * (10000.0 / 9999.0) * 0.09 / 10000.0;
    EXPECT_NEAR(est.variance_est[0], expected, 1e-9 * expected);
}

TEST(RoundEstimate, SingleDrawStratumIsFlagged) {
    auto pool = fully_annotated({1, 0, 0, 1});
    Eigen::VectorXd s(4);
    s << 0.1, 0.2, 0.8, 0.9;
    const std::vector<double> cut{0.5};
    const auto tree = tree_from_thresholds(s, cut);
    SampleDraw draw;
    draw.selected_ids = {{0}, {2, 3}};
    const auto est = round_estimate(pool, draw, tree, {1});
    EXPECT_TRUE(est.single_draw_stratum);
    EXPECT_EQ(est.per_stratum[0].sample_variance[0], 0.0);
}

TEST(RoundEstimate, MissingDrawInNonemptyStratumIsAnError) {
    auto pool = fully_annotated({1, 0, 0, 1});
    Eigen::VectorXd s(4);
    s << 0.1, 0.2, 0.8, 0.9;
    const std::vector<double> cut{0.5};
    const auto tree = tree_from_thresholds(s, cut);
    SampleDraw draw;
    draw.selected_ids = {{}, {2, 3}};
    EXPECT_THROW(round_estimate(pool, draw, tree, {1}), std::invalid_argument);
}

// All C(6,2)^2 = 225 draws of a two-stratum design on N = 12. The estimate
// and its design variance are recomputed here from the labels alone.
TEST(RoundEstimate, EnumerationOracleTwoStrata) {
    const std::vector<int> labels{1, 0, 0, 0, 0, 0, 1, 1, 1, 0, 0, 1};
    auto pool = fully_annotated(labels);
    Eigen::VectorXd s(12);
    for (Eigen::Index i = 0; i < 12; ++i) s(i) = i < 6 ? 0.2 : 0.8;
    const std::vector<double> cut{0.5};
    const auto tree = tree_from_thresholds(s, cut);
    ASSERT_EQ(tree.strata[0].member_ids, (IdList{0, 1, 2, 3, 4, 5}));

    const double truth = 5.0 / 12.0;
    double sum_est = 0, sum_sq = 0, sum_var = 0;
    std::size_t draws = 0;
    for (const auto& a : subsets(6, 2)) {
        for (const auto& b : subsets(6, 2)) {
            SampleDraw draw;
            draw.selected_ids = {{a[0], a[1]}, {6 + b[0], 6 + b[1]}};
            const auto est = round_estimate(pool, draw, tree, {1});
            const double ya = (labels[a[0]] + labels[a[1]]) / 2.0;
            const double yb = (labels[6 + b[0]] + labels[6 + b[1]]) / 2.0;
            const double oracle = 0.5 * ya + 0.5 * yb;
            ASSERT_NEAR(est.estimate[0], oracle, 1e-15);
            sum_est += est.estimate[0];
            sum_sq += (est.estimate[0] - truth) * (est.estimate[0] - truth);
            sum_var += est.variance_est[0];
            ++draws;
        }
    }
    ASSERT_EQ(draws, 225u);
    EXPECT_NEAR(sum_est / draws, truth, 1e-12);

    // Textbook design variance: sum_h W_h^2 (1 - n_h/N_h) S_h^2 / n_h with S_h^2 on N_h - 1.
    const double S2a = 6.0 / 5.0 * (1.0 / 6) * (5.0 / 6);
    const double S2b = 6.0 / 5.0 * (4.0 / 6) * (2.0 / 6);
    const double design = 0.25 * (1 - 2.0 / 6) * (S2a + S2b) / 2.0;
    EXPECT_NEAR(sum_sq / draws, design, 1e-15);
    EXPECT_NEAR(sum_var / draws, design, 1e-12 * design);

    AllocationPlan plan;
    plan.n_h = {2, 2};
    EXPECT_NEAR(stratified_design_variance(pool, tree, plan, 1), design, 1e-15);
}

TEST(CombineRounds, SingleRoundIsIdentity) {
    RoundEstimate r;
    r.classes = {1};
    r.estimate = {0.123};
    r.variance_est = {4e-5};
    const auto f = combine_rounds({r});
    EXPECT_EQ(f.estimate, r.estimate);
    EXPECT_EQ(f.variance_est, r.variance_est);
    EXPECT_TRUE(f.variance_approximate);
}

TEST(CombineRounds, ArithmeticMean) {
    RoundEstimate a, b;
    a.classes = b.classes = {1};
    a.estimate = {0.08};
    b.estimate = {0.12};
    a.variance_est = {4e-6};
    b.variance_est = {8e-6};
    const auto f = combine_rounds({a, b});
    EXPECT_NEAR(f.estimate[0], 0.10, 1e-15);
    EXPECT_NEAR(f.variance_est[0], 3e-6, 1e-20);
    EXPECT_EQ(f.per_round.size(), 2u);
}

TEST(CombineRounds, EmptyListIsInvalid) { EXPECT_THROW(combine_rounds({}), std::invalid_argument); }

TEST(SrsReferenceVariance, Examples) {
    EXPECT_NEAR(srs_reference_variance(0.1, 10000), 9.0e-6, 1e-9 * 9.0e-6);
    EXPECT_EQ(srs_reference_variance(0.0, 50), 0.0);
    EXPECT_EQ(srs_reference_variance(1.0, 50), 0.0);
    EXPECT_DOUBLE_EQ(srs_reference_variance(0.5, 4), 0.0625);
}

TEST(SrsDesignVariance, ReducesToReferenceForLargePopulations) {
    EXPECT_NEAR(srs_design_variance(0.1, 100, 100000000) / srs_reference_variance(0.1, 100), 1.0, 1e-5);
    EXPECT_EQ(srs_design_variance(0.3, 10, 10), 0.0);
}

TEST(LabeledMeanEstimate, CountsRevealedLabelsOnly) {
    SamplePool pool({1, 1, 0, 0, 0, 0}, 2);
    const IdList ids{0, 1, 2};
    pool.annotate(ids, 0);
    EXPECT_NEAR(labeled_mean_estimate(pool, {1})[0], 2.0 / 3.0, 1e-15);
}

// Four rounds of the same stratified design on a fixed population: the
// combined estimate is unbiased and the averaged variance estimate tracks the
// Monte Carlo variance of single-round estimates.
TEST(CombineRounds, MonteCarloUnbiasedOverFourRounds) {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t N = 2000;
    std::vector<int> labels(N);
    Eigen::VectorXd scores(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i) {
        const double q = u(gen) * u(gen);
        scores(static_cast<Eigen::Index>(i)) = q;
        labels[i] = u(gen) < q ? 1 : 0;
    }
    auto pool = fully_annotated(labels);
    const double truth = pool.true_rate(1);
    const auto tree = build_stratified_tree(scores, {4, 100, 2, 256});
    const auto plan = neyman_allocate(tree, 100, 2);

    constexpr int R = 2000;
    Rng rng(22);
    double sum = 0, sum_sq = 0, round_sq = 0, var_sum = 0;
    for (int r = 0; r < R; ++r) {
        std::vector<RoundEstimate> rounds;
        for (int t = 1; t <= 4; ++t) {
            rounds.push_back(round_estimate(pool, draw_stratified_sample(pool, tree, plan, t, rng), tree, {1}));
            round_sq += (rounds.back().estimate[0] - truth) * (rounds.back().estimate[0] - truth);
            var_sum += rounds.back().variance_est[0];
        }
        const double f = combine_rounds(rounds).estimate[0];
        sum += f;
        sum_sq += f * f;
    }
    const double mean = sum / R;
    const double sd = std::sqrt((sum_sq - R * mean * mean) / (R - 1));
    EXPECT_LE(std::abs(mean - truth), 3.0 * sd / std::sqrt(double(R)));
    const double design = stratified_design_variance(pool, tree, plan, 1);
    EXPECT_NEAR(round_sq / (4 * R) / design, 1.0, 0.1);
    EXPECT_NEAR(var_sum / (4 * R) / design, 1.0, 0.05);
}
