#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace nsal {

/// Units are addressed by their row index in the pool.
using UnitId = std::size_t;
using IdList = std::vector<UnitId>;

/// Tolerance for score vectors lying on the probability simplex.
inline constexpr double kSimplexTolerance = 1e-9;

/// Value view of one pool member.
struct Unit {
    UnitId id = 0;
    int true_label = 0;
    Eigen::VectorXd score;
    bool labeled = false;
    std::optional<int> label_round;
};

/// Population of units with hidden labels, current model scores and
/// annotation state. Rows of `features()` and `scores()` are indexed by UnitId.
class SamplePool {
public:
    SamplePool(std::vector<int> labels, std::size_t num_classes, Eigen::MatrixXd features = {},
               Eigen::MatrixXd true_posterior = {});

    std::size_t size() const { return labels_.size(); }
    std::size_t num_classes() const { return num_classes_; }

    const Eigen::MatrixXd& features() const { return features_; }
    const Eigen::MatrixXd& scores() const { return scores_; }
    /// Bayes posterior P(y | x) under the generating model; empty when unknown.
    const Eigen::MatrixXd& true_posterior() const { return true_posterior_; }

    /// Replaces the model scores. Every row must lie on the simplex.
    void set_scores(Eigen::MatrixXd scores);

    bool is_labeled(UnitId id) const { return label_round_.at(id).has_value(); }
    std::optional<int> label_round(UnitId id) const { return label_round_.at(id); }
    /// Label of an annotated unit; throws std::logic_error if `id` is unlabeled.
    int revealed_label(UnitId id) const;
    /// Ground truth, for harness bookkeeping only. Strategies must not call this.
    int true_label(UnitId id) const { return labels_.at(id); }
    const std::vector<int>& true_labels() const { return labels_; }

    /// Marks `ids` as annotated in `round`. Already labeled units keep their round.
    void annotate(std::span<const UnitId> ids, int round);

    IdList labeled_ids() const;
    IdList unlabeled_ids() const;
    std::size_t labeled_count() const;

    Unit unit(UnitId id) const;

    /// Fraction of units whose true label is `cls`.
    double true_rate(int cls) const;

private:
    std::vector<int> labels_;
    std::size_t num_classes_;
    Eigen::MatrixXd features_;
    Eigen::MatrixXd scores_;
    Eigen::MatrixXd true_posterior_;
    std::vector<std::optional<int>> label_round_;
};

/// Sorted, duplicate-free set of class indices treated as "positive".
using ClassSet = std::vector<int>;

/// Checks that `positive` is a nonempty proper subset of {0..K-1}; returns it sorted.
ClassSet validate_positive_set(ClassSet positive, std::size_t num_classes);

/// Sum of score components over the positive classes, one value per row.
Eigen::VectorXd collapse_scores(const Eigen::MatrixXd& scores, const ClassSet& positive);
Eigen::VectorXd collapse_scores(const SamplePool& pool, const ClassSet& positive);

/// True when every row of `scores` is a probability vector within `tol`.
bool is_simplex(const Eigen::MatrixXd& scores, double tol = kSimplexTolerance);

}  // namespace nsal
