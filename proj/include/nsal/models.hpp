#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nsal/pool.hpp"

namespace nsal {

struct LogisticHyper {
    double learning_rate = 0.5;
    int epochs = 300;
    double l2 = 1e-4;
    /// 0 means full-batch gradient descent.
    std::size_t batch_size = 0;
    /// Step decay: the rate is multiplied by `decay` every `decay_every` epochs.
    double decay = 0.5;
    int decay_every = 100;
    std::uint64_t seed = 0;
};

struct TrainingMeta {
    int iterations = 0;
    double final_loss = 0.0;
    std::vector<double> loss_history;  ///< full-data loss after each epoch
    /// Fewer than two classes were present; the model emits uniform scores.
    bool degenerate = false;
};

/// Logistic scorer. Binary problems keep one weight column for class 1; K > 2
/// uses one-vs-rest columns renormalised onto the simplex. Row 0 of `weights`
/// is the intercept.
struct LinearModel {
    Eigen::MatrixXd weights;
    std::size_t num_classes = 2;
    std::size_t num_features = 0;
    TrainingMeta meta;
};

/// Regularised mean binary cross-entropy summed over weight columns. `targets`
/// holds one 0/1 column per weight column; the intercept row is not penalised.
double logistic_objective(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& features,
                          const Eigen::MatrixXd& targets, double l2);
Eigen::MatrixXd logistic_gradient(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& features,
                                  const Eigen::MatrixXd& targets, double l2);

/// 0/1 target matrix matching the weight layout of LinearModel.
Eigen::MatrixXd logistic_targets(std::span<const int> labels, std::size_t num_classes);

/// Gradient descent on the log-loss with step min(rate, 1/L), L a Lipschitz
/// bound of the full-batch gradient.
LinearModel train_logistic(const Eigen::MatrixXd& features, std::span<const int> labels, std::size_t num_classes,
                           const LogisticHyper& hyper = {});

/// Scores for every row of `features`; throws on a dimension mismatch.
Eigen::MatrixXd predict_scores(const LinearModel& model, const Eigen::MatrixXd& features);

/// Distorted view of the generating posterior: scores are softmax(gamma * log q
/// + sigma * eps) with eps_0 = 0 and eps_k ~ N(0, 1) for k >= 1, so the binary
/// logit becomes gamma * logit(q) + sigma * eps.
struct OracleScoreModel {
    double noise_sigma = 0.0;
    double miscalibration_gamma = 1.0;
    std::uint64_t noise_seed = 0;

    void validate() const;
};

/// Applies the oracle to the pool's true posterior. Noise is drawn in unit
/// order from `noise_seed`, so repeated calls agree.
Eigen::MatrixXd predict_scores(const OracleScoreModel& model, const SamplePool& pool);
Eigen::MatrixXd oracle_scores(const OracleScoreModel& model, const Eigen::MatrixXd& posterior);

}  // namespace nsal
