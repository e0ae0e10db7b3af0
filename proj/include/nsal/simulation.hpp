#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "nsal/models.hpp"
#include "nsal/pool.hpp"
#include "nsal/random.hpp"
#include "nsal/strategies.hpp"

namespace nsal {

/// Synthetic population: exact class counts, isotropic Gaussian features per class.
struct PopulationSpec {
    std::size_t N = 1000;
    std::size_t K = 2;
    std::vector<double> class_rates{0.9, 0.1};
    Eigen::MatrixXd class_means;  ///< K x d
    double feature_sigma = 1.0;

    std::size_t feature_dim() const { return static_cast<std::size_t>(class_means.cols()); }
    void validate() const;
};

/// Labels with counts apportioned by largest remainder, shuffled; features drawn
/// per class; the Bayes posterior is stored as the pool's true posterior.
SamplePool generate_population(const PopulationSpec& spec, Rng& rng);

struct ModelConfig {
    enum class Kind { Oracle, Logistic };
    Kind kind = Kind::Oracle;
    OracleScoreModel oracle;
    LogisticHyper logistic;
};

struct ExperimentConfig {
    PopulationSpec population;
    std::vector<QueryStrategy> strategies;
    ModelConfig model;
    /// Initial SRS sizes. The first drives the main results; more than one value
    /// adds a cold-start comparison.
    std::vector<std::size_t> n_init{100};
    std::vector<std::size_t> batch_sizes;  ///< one entry per round
    ClassSet positive_set{1};
    std::size_t replications = 2000;
    std::uint64_t seed = 0;
    std::size_t histogram_bins = 10;

    std::size_t rounds() const { return batch_sizes.size(); }
    void validate() const;
};

struct RoundRecord {
    int round = 0;
    std::size_t batch_size = 0;
    std::vector<double> estimate;  ///< per positive class
    /// Empty for UES, whose running label mean has no design-based variance.
    std::vector<double> variance_est;
    std::vector<double> design_variance;
    std::size_t fresh = 0;
    std::size_t reused = 0;
    std::size_t cumulative_labeled = 0;
    std::size_t strata = 0;
    std::vector<std::size_t> histogram;
};

struct StrategyRun {
    StrategyKind kind = StrategyKind::SRS;
    std::vector<RoundRecord> rounds;
    std::vector<double> final_estimate;
    std::vector<double> final_variance_est;  ///< empty for UES
    bool complete = true;
};

struct ReplicationRecord {
    std::size_t index = 0;
    std::size_t n_init = 0;
    std::uint64_t seed = 0;
    std::vector<double> true_rates;  ///< per positive class
    std::vector<StrategyRun> runs;   ///< in config strategy order
};

/// Seed of replication `index` (order-independent).
std::uint64_t replication_seed(std::uint64_t experiment_seed, std::size_t n_init_index, std::size_t index);

/// One pass of the active-learning loop on a fresh copy of `population`:
/// initial SRS, then per round score, select, annotate, estimate, retrain.
StrategyRun run_active_learning(const ExperimentConfig& config, const QueryStrategy& strategy,
                                const SamplePool& population, std::size_t n_init, std::uint64_t replication_seed);

/// Every configured strategy on one shared population.
ReplicationRecord run_replication(const ExperimentConfig& config, std::size_t n_init_index, std::size_t index);

struct RoundAggregate {
    StrategyKind kind = StrategyKind::SRS;
    int round = 0;
    int cls = 1;
    std::size_t batch_size = 0;
    std::size_t count = 0;
    double true_rate = 0.0;
    double mean_estimate = 0.0;
    double bias = 0.0;
    double empirical_variance = 0.0;
    /// NaN where no design-based variance exists (UES).
    double mean_variance_est = 0.0;
    double mean_design_variance = 0.0;
    double srs_reference = 0.0;
    /// Empirical variance relative to SRS's for the same round; NaN without an SRS run.
    double variance_ratio_vs_srs = 0.0;
    /// Budget at which this strategy would match SRS's variance at batch_size, assuming 1/n scaling.
    double matched_variance_budget = 0.0;
    double mean_fresh = 0.0;
    double mean_cumulative_labeled = 0.0;
};

struct FinalAggregate {
    StrategyKind kind = StrategyKind::SRS;
    int cls = 1;
    std::size_t count = 0;
    double true_rate = 0.0;
    double mean_estimate = 0.0;
    double bias = 0.0;
    double empirical_variance = 0.0;
    double standard_error = 0.0;  ///< empirical SD / sqrt(count)
    double mean_variance_est = 0.0;
};

struct HistogramAggregate {
    StrategyKind kind = StrategyKind::SRS;
    int round = 0;
    std::vector<std::size_t> counts;
};

struct Aggregates {
    std::size_t n_init = 0;
    std::vector<RoundAggregate> rounds;
    std::vector<FinalAggregate> finals;
    std::vector<HistogramAggregate> histograms;
};

struct RunReport {
    ExperimentConfig config;
    std::vector<ReplicationRecord> records;
    /// Main results (first n_init value).
    Aggregates main;
    /// One entry per n_init value when several are configured.
    std::vector<Aggregates> cold_start;
};

/// Reduces the records that used `n_init` into aggregates, in strategy/round/class order.
Aggregates aggregate(const ExperimentConfig& config, const std::vector<ReplicationRecord>& records,
                     std::size_t n_init);

/// Runs all replications (in parallel across `threads` workers; 0 = hardware
/// concurrency) and aggregates them. Results do not depend on `threads`.
RunReport monte_carlo(const ExperimentConfig& config, std::size_t threads = 0);

/// Recomputes every aggregate of `report` from its records.
void reaggregate(RunReport& report);

}  // namespace nsal
