#include "nsal/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "nsal/random.hpp"

namespace nsal {

namespace {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& features) {
    Eigen::MatrixXd x(features.rows(), features.cols() + 1);
    x.col(0).setOnes();
    x.rightCols(features.cols()) = features;
    return x;
}

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
    return z.unaryExpr([](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
    });
}

// log(1 + exp(v)) without overflow.
double softplus(double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

double objective_augmented(const Eigen::MatrixXd& w, const Eigen::MatrixXd& x, const Eigen::MatrixXd& t, double l2) {
    const Eigen::MatrixXd z = x * w;
    double loss = 0.0;
    for (Eigen::Index c = 0; c < z.cols(); ++c)
        for (Eigen::Index i = 0; i < z.rows(); ++i) loss += softplus(z(i, c)) - t(i, c) * z(i, c);
    loss /= static_cast<double>(x.rows());
    loss += 0.5 * l2 * w.bottomRows(w.rows() - 1).squaredNorm();
    return loss;
}

Eigen::MatrixXd gradient_augmented(const Eigen::MatrixXd& w, const Eigen::MatrixXd& x, const Eigen::MatrixXd& t,
                                   double l2) {
    Eigen::MatrixXd g = x.transpose() * (sigmoid(x * w) - t) / static_cast<double>(x.rows());
    g.bottomRows(w.rows() - 1) += l2 * w.bottomRows(w.rows() - 1);
    return g;
}

}  // namespace

double logistic_objective(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& features,
                          const Eigen::MatrixXd& targets, double l2) {
    return objective_augmented(weights, with_intercept(features), targets, l2);
}

Eigen::MatrixXd logistic_gradient(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& features,
                                  const Eigen::MatrixXd& targets, double l2) {
    return gradient_augmented(weights, with_intercept(features), targets, l2);
}

Eigen::MatrixXd logistic_targets(std::span<const int> labels, std::size_t num_classes) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    if (num_classes == 2) {
        Eigen::MatrixXd t(n, 1);
        for (Eigen::Index i = 0; i < n; ++i) t(i, 0) = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0;
        return t;
    }
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(num_classes));
    for (Eigen::Index i = 0; i < n; ++i) t(i, labels[static_cast<std::size_t>(i)]) = 1.0;
    return t;
}

LinearModel train_logistic(const Eigen::MatrixXd& features, std::span<const int> labels, std::size_t num_classes,
                           const LogisticHyper& hyper) {
    if (num_classes < 2) throw std::invalid_argument("train_logistic: need at least two classes");
    if (static_cast<std::size_t>(features.rows()) != labels.size())
        throw std::invalid_argument("train_logistic: feature rows do not match label count");
    if (!features.allFinite()) throw std::invalid_argument("train_logistic: non-finite features");
    if (hyper.learning_rate <= 0 || hyper.epochs < 0 || hyper.l2 < 0)
        throw std::invalid_argument("train_logistic: invalid hyper-parameters");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
            throw std::invalid_argument("train_logistic: label out of range");

    LinearModel model;
    model.num_classes = num_classes;
    model.num_features = static_cast<std::size_t>(features.cols());
    const Eigen::Index columns = num_classes == 2 ? 1 : static_cast<Eigen::Index>(num_classes);
    model.weights = Eigen::MatrixXd::Zero(features.cols() + 1, columns);

    const std::set<int> present(labels.begin(), labels.end());
    if (present.size() < 2) {
        model.meta.degenerate = true;
        return model;
    }

    const Eigen::MatrixXd x = with_intercept(features);
    const Eigen::MatrixXd t = logistic_targets(labels, num_classes);
    const auto n = x.rows();

    // Hessian of the mean log-loss is bounded by X'X / (4n) + l2 I.
    const Eigen::MatrixXd gram = x.transpose() * x / static_cast<double>(n);
    const double lambda_max = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly)
                                  .eigenvalues()
                                  .maxCoeff();
    const double lipschitz = 0.25 * lambda_max + hyper.l2;

    Rng shuffle_rng(hyper.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const std::size_t batch = hyper.batch_size == 0 ? static_cast<std::size_t>(n)
                                                    : std::min(hyper.batch_size, static_cast<std::size_t>(n));

    Eigen::MatrixXd& w = model.weights;
    double rate = hyper.learning_rate;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        if (epoch > 0 && hyper.decay_every > 0 && epoch % hyper.decay_every == 0) rate *= hyper.decay;
        const double step = std::min(rate, 1.0 / lipschitz);
        if (batch == static_cast<std::size_t>(n)) {
            const Eigen::MatrixXd g = gradient_augmented(w, x, t, hyper.l2);
            w -= step * g;
            ++model.meta.iterations;
            model.meta.loss_history.push_back(objective_augmented(w, x, t, hyper.l2));
            if (g.norm() < 1e-10) break;
            continue;
        }
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            const auto m = static_cast<Eigen::Index>(stop - start);
            Eigen::MatrixXd xb(m, x.cols()), tb(m, t.cols());
            for (Eigen::Index r = 0; r < m; ++r) {
                xb.row(r) = x.row(order[start + static_cast<std::size_t>(r)]);
                tb.row(r) = t.row(order[start + static_cast<std::size_t>(r)]);
            }
            w -= step * gradient_augmented(w, xb, tb, hyper.l2);
            ++model.meta.iterations;
        }
        model.meta.loss_history.push_back(objective_augmented(w, x, t, hyper.l2));
    }
    model.meta.final_loss =
        model.meta.loss_history.empty() ? objective_augmented(w, x, t, hyper.l2) : model.meta.loss_history.back();
    return model;
}

Eigen::MatrixXd predict_scores(const LinearModel& model, const Eigen::MatrixXd& features) {
    if (static_cast<std::size_t>(features.cols()) != model.num_features ||
        model.weights.rows() != features.cols() + 1)
        throw std::invalid_argument("predict_scores: feature dimension does not match the model");
    const auto n = features.rows();
    const auto K = static_cast<Eigen::Index>(model.num_classes);
    if (model.meta.degenerate) return Eigen::MatrixXd::Constant(n, K, 1.0 / static_cast<double>(K));

    const Eigen::MatrixXd p = sigmoid(with_intercept(features) * model.weights);
    Eigen::MatrixXd scores(n, K);
    if (model.num_classes == 2) {
        scores.col(1) = p.col(0);
        scores.col(0) = (1.0 - p.col(0).array()).matrix();
        return scores;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const double total = p.row(i).sum();
        if (total > 0.0)
            scores.row(i) = p.row(i) / total;
        else
            scores.row(i).setConstant(1.0 / static_cast<double>(K));
    }
    return scores;
}

void OracleScoreModel::validate() const {
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
        throw std::invalid_argument("oracle noise sigma must be finite and >= 0");
    if (!(miscalibration_gamma > 0.0) || !std::isfinite(miscalibration_gamma))
        throw std::invalid_argument("oracle gamma must be finite and > 0");
}

Eigen::MatrixXd oracle_scores(const OracleScoreModel& model, const Eigen::MatrixXd& posterior) {
    model.validate();
    if (posterior.cols() < 2) throw std::invalid_argument("oracle_scores: need at least two classes");
    const double tiny = std::numeric_limits<double>::min();
    const bool identity = model.noise_sigma == 0.0 && model.miscalibration_gamma == 1.0;
    if (identity) return posterior;

    Rng rng(model.noise_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd out(posterior.rows(), posterior.cols());
    Eigen::VectorXd logit(posterior.cols());
    for (Eigen::Index i = 0; i < posterior.rows(); ++i) {
        for (Eigen::Index k = 0; k < posterior.cols(); ++k) {
            logit[k] = model.miscalibration_gamma * std::log(std::max(posterior(i, k), tiny));
            if (k > 0 && model.noise_sigma > 0.0) logit[k] += model.noise_sigma * normal(rng);
        }
        const double top = logit.maxCoeff();
        const Eigen::VectorXd e = (logit.array() - top).exp();
        out.row(i) = (e / e.sum()).transpose();
    }
    return out;
}

Eigen::MatrixXd predict_scores(const OracleScoreModel& model, const SamplePool& pool) {
    if (pool.true_posterior().size() == 0)
        throw std::invalid_argument("oracle model needs a pool with a known generating posterior");
    return oracle_scores(model, pool.true_posterior());
}

}  // namespace nsal
