#include "nsal/stratified_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace nsal {

double bernoulli_proxy(double mean) {
    const double p = std::clamp(mean, 0.0, 1.0);
    return std::clamp(p * (1.0 - p), 0.0, 0.25);
}

std::vector<std::size_t> StratifiedTree::sizes() const {
    std::vector<std::size_t> out;
    out.reserve(strata.size());
    for (const auto& s : strata) out.push_back(s.N_h);
    return out;
}

std::vector<double> StratifiedTree::s2_proxies() const {
    std::vector<double> out;
    out.reserve(strata.size());
    for (const auto& s : strata) out.push_back(s.s2_proxy);
    return out;
}

std::size_t StratifiedTree::stratum_of(double score) const {
    // thresholds = {0, x_1, ..., 1}; stratum h covers [x_h, x_{h+1}).
    const auto it = std::upper_bound(thresholds.begin() + 1, thresholds.end() - 1, score);
    return static_cast<std::size_t>(it - (thresholds.begin() + 1));
}

double candidate_split_objective(std::span<const std::size_t> sizes, std::span<const double> s2_proxy,
                                 std::size_t n_budget, std::size_t n_threshold) {
    for (auto n : sizes)
        if (n == 0) return std::numeric_limits<double>::infinity();
    const auto plan = neyman_allocate(sizes, s2_proxy, n_budget, n_threshold);
    return stratified_objective(sizes, s2_proxy, std::span<const std::size_t>(plan.n_h));
}

bool guardrail_accepts(std::span<const std::size_t> sizes, const std::vector<std::vector<double>>& s2m_by_stratum,
                       std::span<const double> s2m_population, std::span<const std::size_t> allocation,
                       std::size_t n_budget) {
    if (sizes.size() != s2m_by_stratum.size() || sizes.size() != allocation.size())
        throw std::invalid_argument("guardrail: length mismatch");
    const double population = static_cast<double>(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}));
    const double n = static_cast<double>(std::min<std::size_t>(n_budget, static_cast<std::size_t>(population)));
    for (std::size_t m = 0; m < s2m_population.size(); ++m) {
        double lhs = 0.0;
        for (std::size_t h = 0; h < sizes.size(); ++h) {
            const double s2 = s2m_by_stratum[h].at(m);
            if (s2 == 0.0) continue;
            if (allocation[h] == 0) return false;
            const double w = static_cast<double>(sizes[h]) / population;
            lhs += w * w * s2 / static_cast<double>(allocation[h]);
        }
        if (lhs >= s2m_population[m] / n) return false;
    }
    return true;
}

AllocationPlan neyman_allocate(const StratifiedTree& tree, std::size_t n, std::size_t n_threshold) {
    const auto sizes = tree.sizes();
    const auto s2 = tree.s2_proxies();
    return neyman_allocate(sizes, s2, n, n_threshold);
}

namespace {

/// Units sorted by (collapsed score, id) with prefix sums for O(1) range means.
struct SortedScores {
    std::vector<UnitId> order;
    std::vector<double> score;
    std::vector<double> prefix;
    Eigen::MatrixXd class_prefix;  // (N+1) x M

    SortedScores(const Eigen::VectorXd& collapsed, const GuardrailInput& guard) {
        const auto n = static_cast<std::size_t>(collapsed.size());
        if (n == 0) throw std::invalid_argument("stratified tree: empty pool");
        if (guard.enabled() && guard.class_scores.rows() != collapsed.size())
            throw std::invalid_argument("stratified tree: guardrail scores do not match the pool");
        order.resize(n);
        std::iota(order.begin(), order.end(), UnitId{0});
        std::stable_sort(order.begin(), order.end(), [&](UnitId a, UnitId b) {
            return collapsed[static_cast<Eigen::Index>(a)] < collapsed[static_cast<Eigen::Index>(b)];
        });
        score.resize(n);
        prefix.assign(n + 1, 0.0);
        const Eigen::Index m = guard.class_scores.cols();
        class_prefix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) + 1, m);
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = static_cast<Eigen::Index>(order[i]);
            score[i] = collapsed[row];
            prefix[i + 1] = prefix[i] + score[i];
            if (m > 0)
                class_prefix.row(static_cast<Eigen::Index>(i) + 1) =
                    class_prefix.row(static_cast<Eigen::Index>(i)) + guard.class_scores.row(row);
        }
    }

    std::size_t size() const { return order.size(); }

    double mean(std::size_t begin, std::size_t end) const {
        if (score[begin] == score[end - 1]) return score[begin];
        return (prefix[end] - prefix[begin]) / static_cast<double>(end - begin);
    }

    std::vector<double> class_proxies(std::size_t begin, std::size_t end) const {
        std::vector<double> out(static_cast<std::size_t>(class_prefix.cols()));
        const double count = static_cast<double>(end - begin);
        for (Eigen::Index m = 0; m < class_prefix.cols(); ++m) {
            const double s = class_prefix(static_cast<Eigen::Index>(end), m) -
                             class_prefix(static_cast<Eigen::Index>(begin), m);
            out[static_cast<std::size_t>(m)] = count > 0 ? bernoulli_proxy(s / count) : 0.0;
        }
        return out;
    }
};

struct Leaf {
    std::size_t begin = 0;
    std::size_t end = 0;
    double lower = 0.0;
    double upper = 1.0;
    double s2 = 0.0;
    std::vector<double> s2m;

    std::size_t count() const { return end - begin; }
};

class TreeGrower {
public:
    TreeGrower(const SortedScores& sorted, const TreeOptions& options, bool guarded)
        : sorted_(sorted), options_(options), guarded_(guarded) {
        if (guarded_) s2m_population_ = sorted_.class_proxies(0, sorted_.size());
    }

    Leaf make_leaf(std::size_t begin, std::size_t end, double lower, double upper) const {
        Leaf leaf{begin, end, lower, upper, 0.0, {}};
        if (end > begin) {
            leaf.s2 = bernoulli_proxy(sorted_.mean(begin, end));
            if (guarded_) leaf.s2m = sorted_.class_proxies(begin, end);
        }
        return leaf;
    }

    /// Grows the subtree rooted at leaves[idx]; returns how many leaves it now spans.
    std::size_t grow(std::vector<Leaf>& leaves, std::size_t idx, int depth) const {
        const Leaf node = leaves[idx];
        if (depth >= options_.depth_limit || node.count() < 2 || node.s2 == 0.0) return 1;

        std::vector<std::size_t> cuts;
        for (std::size_t j = node.begin + 1; j < node.end; ++j)
            if (sorted_.score[j - 1] < sorted_.score[j]) cuts.push_back(j);
        if (cuts.empty()) return 1;
        cuts = subsample(cuts);

        const double median = node_median(node);
        const double current = objective(leaves);

        double best_obj = std::numeric_limits<double>::infinity();
        double best_dist = std::numeric_limits<double>::infinity();
        double best_t = 0.0;
        std::size_t best_cut = 0;
        std::vector<std::size_t> sizes(leaves.size() + 1);
        std::vector<double> s2(leaves.size() + 1);
        for (std::size_t cut : cuts) {
            const double t = threshold_at(cut);
            if (!(t > node.lower) || !(t < node.upper)) continue;
            fill_candidate(leaves, idx, cut, sizes, s2);
            const double obj = candidate_split_objective(sizes, s2, options_.n_budget, options_.n_threshold);
            const double dist = std::abs(t - median);
            const double tol = 1e-12 * std::max(std::abs(obj), std::abs(best_obj));
            const bool better = obj < best_obj - tol;
            const bool tie = !better && std::abs(obj - best_obj) <= tol &&
                             (dist < best_dist || (dist == best_dist && t < best_t));
            if (better || tie) {
                best_obj = obj;
                best_dist = dist;
                best_t = t;
                best_cut = cut;
            }
        }
        if (best_cut == 0 || !(best_obj < current)) return 1;

        const Leaf left = make_leaf(node.begin, best_cut, node.lower, best_t);
        const Leaf right = make_leaf(best_cut, node.end, best_t, node.upper);
        std::vector<Leaf> candidate = leaves;
        candidate[idx] = left;
        candidate.insert(candidate.begin() + static_cast<std::ptrdiff_t>(idx) + 1, right);
        if (guarded_ && !guardrail_ok(candidate)) return 1;

        leaves = std::move(candidate);
        const std::size_t left_span = grow(leaves, idx, depth + 1);
        const std::size_t right_span = grow(leaves, idx + left_span, depth + 1);
        return left_span + right_span;
    }

    double objective(const std::vector<Leaf>& leaves) const {
        std::vector<std::size_t> sizes;
        std::vector<double> s2;
        for (const auto& l : leaves) {
            sizes.push_back(l.count());
            s2.push_back(l.s2);
        }
        return candidate_split_objective(sizes, s2, options_.n_budget, options_.n_threshold);
    }

private:
    std::vector<std::size_t> subsample(const std::vector<std::size_t>& cuts) const {
        const std::size_t cap = std::max<std::size_t>(options_.max_candidates, 1);
        if (cuts.size() <= cap) return cuts;
        std::vector<std::size_t> out;
        out.reserve(cap);
        if (cap == 1) {
            out.push_back(cuts[cuts.size() / 2]);
            return out;
        }
        const double step = static_cast<double>(cuts.size() - 1) / static_cast<double>(cap - 1);
        for (std::size_t i = 0; i < cap; ++i) {
            const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(i) * step));
            if (out.empty() || out.back() != cuts[k]) out.push_back(cuts[k]);
        }
        return out;
    }

    double node_median(const Leaf& node) const {
        const std::size_t n = node.count();
        const std::size_t mid = node.begin + (n - 1) / 2;
        return n % 2 == 1 ? sorted_.score[mid] : 0.5 * (sorted_.score[mid] + sorted_.score[mid + 1]);
    }

    /// Threshold separating sorted positions cut-1 and cut; units below it go left.
    double threshold_at(std::size_t cut) const {
        const double a = sorted_.score[cut - 1];
        const double b = sorted_.score[cut];
        const double mid = a + 0.5 * (b - a);
        return mid > a ? mid : b;
    }

    void fill_candidate(const std::vector<Leaf>& leaves, std::size_t idx, std::size_t cut,
                        std::vector<std::size_t>& sizes, std::vector<double>& s2) const {
        std::size_t k = 0;
        for (std::size_t h = 0; h < leaves.size(); ++h) {
            if (h == idx) {
                const Leaf& node = leaves[h];
                sizes[k] = cut - node.begin;
                s2[k++] = bernoulli_proxy(sorted_.mean(node.begin, cut));
                sizes[k] = node.end - cut;
                s2[k++] = bernoulli_proxy(sorted_.mean(cut, node.end));
            } else {
                sizes[k] = leaves[h].count();
                s2[k++] = leaves[h].s2;
            }
        }
    }

    bool guardrail_ok(const std::vector<Leaf>& leaves) const {
        std::vector<std::size_t> sizes;
        std::vector<double> s2;
        std::vector<std::vector<double>> s2m;
        for (const auto& l : leaves) {
            sizes.push_back(l.count());
            s2.push_back(l.s2);
            s2m.push_back(l.s2m);
        }
        const auto plan = neyman_allocate(sizes, s2, options_.n_budget, options_.n_threshold);
        return guardrail_accepts(sizes, s2m, s2m_population_, plan.n_h, options_.n_budget);
    }

    const SortedScores& sorted_;
    const TreeOptions& options_;
    bool guarded_;
    std::vector<double> s2m_population_;
};

StratifiedTree assemble(const SortedScores& sorted, const std::vector<Leaf>& leaves, int depth_limit) {
    StratifiedTree tree;
    tree.depth_limit = depth_limit;
    tree.population = sorted.size();
    tree.thresholds.push_back(0.0);
    const double population = static_cast<double>(sorted.size());
    for (const auto& leaf : leaves) {
        Stratum s;
        s.lower = leaf.lower;
        s.upper = leaf.upper;
        s.member_ids.assign(sorted.order.begin() + static_cast<std::ptrdiff_t>(leaf.begin),
                            sorted.order.begin() + static_cast<std::ptrdiff_t>(leaf.end));
        std::sort(s.member_ids.begin(), s.member_ids.end());
        s.N_h = leaf.count();
        s.W_h = static_cast<double>(s.N_h) / population;
        s.mean_score = s.N_h > 0 ? sorted.mean(leaf.begin, leaf.end) : 0.0;
        s.s2_proxy = leaf.s2;
        s.s2m_proxy = leaf.s2m;
        tree.thresholds.push_back(leaf.upper);
        tree.strata.push_back(std::move(s));
    }
    tree.thresholds.back() = 1.0;
    return tree;
}

}  // namespace

StratifiedTree build_stratified_tree(const Eigen::VectorXd& collapsed_scores, const TreeOptions& options,
                                     const GuardrailInput& guardrail) {
    if (options.depth_limit < 1) throw std::invalid_argument("build_stratified_tree: depth limit must be >= 1");
    if (options.n_budget < 1 || options.n_threshold < 1)
        throw std::invalid_argument("build_stratified_tree: budget and threshold must be >= 1");
    const SortedScores sorted(collapsed_scores, guardrail);
    const TreeGrower grower(sorted, options, guardrail.enabled());
    std::vector<Leaf> leaves{grower.make_leaf(0, sorted.size(), 0.0, 1.0)};
    grower.grow(leaves, 0, 1);
    auto tree = assemble(sorted, leaves, options.depth_limit);
    tree.objective_value = grower.objective(leaves);
    return tree;
}

StratifiedTree single_stratum_tree(const Eigen::VectorXd& collapsed_scores, const GuardrailInput& guardrail) {
    return tree_from_thresholds(collapsed_scores, {}, guardrail);
}

StratifiedTree tree_from_thresholds(const Eigen::VectorXd& collapsed_scores, std::span<const double> interior,
                                    const GuardrailInput& guardrail) {
    if (!std::is_sorted(interior.begin(), interior.end()) ||
        std::adjacent_find(interior.begin(), interior.end()) != interior.end())
        throw std::invalid_argument("tree_from_thresholds: thresholds must be strictly increasing");
    for (double t : interior)
        if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("tree_from_thresholds: thresholds must lie in (0,1)");
    const SortedScores sorted(collapsed_scores, guardrail);
    const TreeOptions options{static_cast<int>(interior.size()) + 1, 1, 1, 0};
    const TreeGrower grower(sorted, options, guardrail.enabled());
    std::vector<Leaf> leaves;
    double lower = 0.0;
    std::size_t begin = 0;
    for (std::size_t h = 0; h <= interior.size(); ++h) {
        const double upper = h < interior.size() ? interior[h] : 1.0;
        const std::size_t end =
            h < interior.size()
                ? static_cast<std::size_t>(std::lower_bound(sorted.score.begin(), sorted.score.end(), upper) -
                                           sorted.score.begin())
                : sorted.size();
        leaves.push_back(grower.make_leaf(begin, end, lower, upper));
        begin = end;
        lower = upper;
    }
    auto tree = assemble(sorted, leaves, options.depth_limit);
    tree.objective_value = std::numeric_limits<double>::quiet_NaN();
    return tree;
}

}  // namespace nsal
