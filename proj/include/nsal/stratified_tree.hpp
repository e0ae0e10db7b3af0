#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nsal/allocation.hpp"
#include "nsal/pool.hpp"

namespace nsal {

/// Score interval [lower, upper) of a stratification (the last one is closed at 1).
struct Stratum {
    double lower = 0.0;
    double upper = 1.0;
    IdList member_ids;  ///< ascending
    std::size_t N_h = 0;
    double W_h = 0.0;
    double mean_score = 0.0;
    /// p(1-p) of the mean collapsed score; bounded by 1/4.
    double s2_proxy = 0.0;
    /// p_m(1-p_m) of the mean score of each guarded class, in guard-column order.
    std::vector<double> s2m_proxy;
};

struct StratifiedTree {
    std::vector<double> thresholds;  ///< 0 = x_0 < x_1 < ... < x_L = 1
    std::vector<Stratum> strata;
    int depth_limit = 1;
    double objective_value = 0.0;
    std::size_t population = 0;

    std::size_t num_strata() const { return strata.size(); }
    std::vector<std::size_t> sizes() const;
    std::vector<double> s2_proxies() const;
    /// Index of the stratum whose interval contains `score`.
    std::size_t stratum_of(double score) const;
};

struct TreeOptions {
    int depth_limit = 5;
    std::size_t n_budget = 100;
    std::size_t n_threshold = 2;
    /// Largest number of candidate thresholds examined per node.
    std::size_t max_candidates = 256;
};

/// Per-class scores for the multiclass guardrail: one column per guarded class.
/// An empty matrix disables the guardrail.
struct GuardrailInput {
    Eigen::MatrixXd class_scores;

    bool enabled() const { return class_scores.cols() > 0; }
};

/// Greedy top-down stratification over collapsed scores. A node splits at the
/// candidate threshold that minimises the objective of the whole stratification
/// (Neyman allocation recomputed over all current leaves), provided it strictly
/// improves that objective and passes the guardrail.
StratifiedTree build_stratified_tree(const Eigen::VectorXd& collapsed_scores, const TreeOptions& options,
                                     const GuardrailInput& guardrail = {});

/// The trivial tree: one stratum [0, 1] holding every unit.
StratifiedTree single_stratum_tree(const Eigen::VectorXd& collapsed_scores, const GuardrailInput& guardrail = {});

/// Partitions units by explicit interior thresholds and fills the per-stratum statistics.
/// Strata may be empty; objective_value is NaN.
StratifiedTree tree_from_thresholds(const Eigen::VectorXd& collapsed_scores, std::span<const double> interior,
                                    const GuardrailInput& guardrail = {});

/// Objective of a candidate stratification given its stratum sizes and proxies,
/// with the integer Neyman allocation recomputed for it. Empty strata yield +inf.
double candidate_split_objective(std::span<const std::size_t> sizes, std::span<const double> s2_proxy,
                                 std::size_t n_budget, std::size_t n_threshold);

/// Multiclass guardrail. `s2m_by_stratum[h][m]` is the class-m proxy of stratum h,
/// `s2m_population[m]` the whole-population proxy. Returns false (reject) if any
/// class has sum_h W_h^2 s2_hm / n_h >= s2_m / n.
bool guardrail_accepts(std::span<const std::size_t> sizes, const std::vector<std::vector<double>>& s2m_by_stratum,
                       std::span<const double> s2m_population, std::span<const std::size_t> allocation,
                       std::size_t n_budget);

/// Neyman allocation for the strata of `tree`.
AllocationPlan neyman_allocate(const StratifiedTree& tree, std::size_t n, std::size_t n_threshold);

/// Bernoulli proxy p(1-p) of a mean score, clamped to [0, 1/4].
double bernoulli_proxy(double mean);

}  // namespace nsal
