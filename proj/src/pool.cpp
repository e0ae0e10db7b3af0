#include "nsal/pool.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace nsal {

SamplePool::SamplePool(std::vector<int> labels, std::size_t num_classes, Eigen::MatrixXd features,
                       Eigen::MatrixXd true_posterior)
    : labels_(std::move(labels)),
      num_classes_(num_classes),
      features_(std::move(features)),
      true_posterior_(std::move(true_posterior)),
      label_round_(labels_.size()) {
    if (labels_.empty()) throw std::invalid_argument("SamplePool: empty population");
    if (num_classes_ < 2) throw std::invalid_argument("SamplePool: need at least two classes");
    for (int y : labels_) {
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes_)
            throw std::invalid_argument("SamplePool: label out of range");
    }
    const auto n = static_cast<Eigen::Index>(labels_.size());
    if (features_.size() != 0 && features_.rows() != n)
        throw std::invalid_argument("SamplePool: feature rows do not match population size");
    if (true_posterior_.size() != 0 &&
        (true_posterior_.rows() != n || true_posterior_.cols() != static_cast<Eigen::Index>(num_classes_)))
        throw std::invalid_argument("SamplePool: posterior shape mismatch");
    // Until a model is consulted every unit carries the uninformative score.
    scores_ = Eigen::MatrixXd::Constant(n, static_cast<Eigen::Index>(num_classes_),
                                        1.0 / static_cast<double>(num_classes_));
}

void SamplePool::set_scores(Eigen::MatrixXd scores) {
    if (scores.rows() != static_cast<Eigen::Index>(size()) ||
        scores.cols() != static_cast<Eigen::Index>(num_classes_))
        throw std::invalid_argument("SamplePool::set_scores: shape mismatch");
    if (!is_simplex(scores)) throw std::invalid_argument("SamplePool::set_scores: rows must lie on the simplex");
    scores_ = std::move(scores);
}

int SamplePool::revealed_label(UnitId id) const {
    if (!is_labeled(id)) throw std::logic_error("unit " + std::to_string(id) + " has not been annotated");
    return labels_[id];
}

void SamplePool::annotate(std::span<const UnitId> ids, int round) {
    for (UnitId id : ids) {
        auto& slot = label_round_.at(id);
        if (!slot) slot = round;
    }
}

IdList SamplePool::labeled_ids() const {
    IdList out;
    for (UnitId i = 0; i < size(); ++i)
        if (label_round_[i]) out.push_back(i);
    return out;
}

IdList SamplePool::unlabeled_ids() const {
    IdList out;
    for (UnitId i = 0; i < size(); ++i)
        if (!label_round_[i]) out.push_back(i);
    return out;
}

std::size_t SamplePool::labeled_count() const {
    return static_cast<std::size_t>(
        std::count_if(label_round_.begin(), label_round_.end(), [](const auto& r) { return r.has_value(); }));
}

Unit SamplePool::unit(UnitId id) const {
    Unit u;
    u.id = id;
    u.true_label = labels_.at(id);
    u.score = scores_.row(static_cast<Eigen::Index>(id)).transpose();
    u.label_round = label_round_[id];
    u.labeled = u.label_round.has_value();
    return u;
}

double SamplePool::true_rate(int cls) const {
    const auto hits = std::count(labels_.begin(), labels_.end(), cls);
    return static_cast<double>(hits) / static_cast<double>(labels_.size());
}

ClassSet validate_positive_set(ClassSet positive, std::size_t num_classes) {
    std::sort(positive.begin(), positive.end());
    positive.erase(std::unique(positive.begin(), positive.end()), positive.end());
    if (positive.empty()) throw std::invalid_argument("positive class set is empty");
    if (positive.size() >= num_classes)
        throw std::invalid_argument("positive class set must be a proper subset of the classes");
    for (int c : positive) {
        if (c < 0 || static_cast<std::size_t>(c) >= num_classes)
            throw std::invalid_argument("positive class index out of range");
    }
    return positive;
}

Eigen::VectorXd collapse_scores(const Eigen::MatrixXd& scores, const ClassSet& positive) {
    const auto set = validate_positive_set(positive, static_cast<std::size_t>(scores.cols()));
    Eigen::VectorXd out = Eigen::VectorXd::Zero(scores.rows());
    for (int c : set) out += scores.col(c);
    // Rounding can push a sum of simplex components a hair past the unit interval.
    return out.cwiseMax(0.0).cwiseMin(1.0);
}

Eigen::VectorXd collapse_scores(const SamplePool& pool, const ClassSet& positive) {
    return collapse_scores(pool.scores(), positive);
}

bool is_simplex(const Eigen::MatrixXd& scores, double tol) {
    if (!scores.allFinite()) return false;
    if ((scores.array() < -tol).any() || (scores.array() > 1.0 + tol).any()) return false;
    return ((scores.rowwise().sum().array() - 1.0).abs() <= tol).all();
}

}  // namespace nsal
