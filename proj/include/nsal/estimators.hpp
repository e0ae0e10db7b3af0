#pragma once

#include <cstddef>
#include <vector>

#include "nsal/allocation.hpp"
#include "nsal/pool.hpp"
#include "nsal/sampling.hpp"
#include "nsal/stratified_tree.hpp"

namespace nsal {

struct StratumEstimate {
    double W_h = 0.0;
    std::size_t N_h = 0;
    std::size_t n_h = 0;
    std::vector<double> mean;             ///< per estimated class
    std::vector<double> sample_variance;  ///< n/(n-1) p(1-p), 0 when n_h == 1
};

/// Stratified class-rate estimate of one round, one entry per estimated class.
struct RoundEstimate {
    int round = 0;
    ClassSet classes;
    std::vector<double> estimate;
    std::vector<double> variance_est;
    std::size_t n_labeled_fresh = 0;
    std::vector<StratumEstimate> per_stratum;
    /// Some stratum had a single draw, so its within-stratum variance was taken as 0.
    bool single_draw_stratum = false;
};

struct FinalEstimate {
    std::vector<double> estimate;
    std::size_t rounds = 0;
    /// (1/T^2) sum_t variance_est_t; treats rounds as independent, hence approximate.
    std::vector<double> variance_est;
    bool variance_approximate = true;
    std::vector<RoundEstimate> per_round;
};

/// Y_t = sum_h W_h ybar_h over every selected unit (fresh and reused), with the
/// usual stratified variance estimate including the finite-population correction.
/// Every selected unit must already be annotated in `pool`.
RoundEstimate round_estimate(const SamplePool& pool, const SampleDraw& draw, const StratifiedTree& tree,
                             const ClassSet& classes);

/// Unweighted mean over rounds. Throws std::invalid_argument on an empty list.
FinalEstimate combine_rounds(const std::vector<RoundEstimate>& rounds);

/// p(1-p)/n.
double srs_reference_variance(double p, std::size_t n);

/// Exact variance of the sample mean under simple random sampling without
/// replacement of n out of N: (1 - n/N) N/(N-1) p(1-p)/n.
double srs_design_variance(double p, std::size_t n, std::size_t N);

/// Exact design variance of the stratified estimator for class `cls` given the
/// true labels: sum_h W_h^2 (1 - n_h/N_h) S_h^2 / n_h.
double stratified_design_variance(const SamplePool& pool, const StratifiedTree& tree, const AllocationPlan& plan,
                                  int cls);

/// Plain mean of the revealed labels, one entry per class. Not design-unbiased.
std::vector<double> labeled_mean_estimate(const SamplePool& pool, const ClassSet& classes);

}  // namespace nsal
