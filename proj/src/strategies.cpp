#include "nsal/strategies.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nsal {

std::string_view to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::NSRS: return "NSRS";
        case StrategyKind::SRS: return "SRS";
        case StrategyKind::UES: return "UES";
    }
    return "?";
}

StrategyKind parse_strategy_kind(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    if (upper == "NSRS") return StrategyKind::NSRS;
    if (upper == "SRS") return StrategyKind::SRS;
    if (upper == "UES") return StrategyKind::UES;
    throw std::invalid_argument("unknown strategy '" + std::string(name) + "' (expected NSRS, SRS or UES)");
}

void QueryStrategy::validate() const {
    if ((kind == StrategyKind::NSRS) != nsrs.has_value())
        throw std::invalid_argument("strategy parameters are required for NSRS and only for NSRS");
    if (nsrs) {
        if (nsrs->depth_limit < 1) throw std::invalid_argument("NSRS depth must be >= 1");
        if (nsrs->n_threshold < 1) throw std::invalid_argument("NSRS n_threshold must be >= 1");
        if (nsrs->max_candidates < 1) throw std::invalid_argument("NSRS max_candidates must be >= 1");
    }
}

double entropy(const Eigen::Ref<const Eigen::VectorXd>& probabilities) {
    double h = 0.0;
    for (Eigen::Index k = 0; k < probabilities.size(); ++k) {
        const double p = probabilities[k];
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

namespace {

SelectionResult select_neyman(const NsrsParams& params, const SamplePool& pool, const ClassSet& positive,
                              std::size_t n, int round, Rng& rng) {
    const Eigen::VectorXd collapsed = collapse_scores(pool, positive);
    GuardrailInput guard;
    if (params.guardrail) {
        guard.class_scores.resize(pool.scores().rows(), static_cast<Eigen::Index>(positive.size()));
        for (std::size_t m = 0; m < positive.size(); ++m)
            guard.class_scores.col(static_cast<Eigen::Index>(m)) = pool.scores().col(positive[m]);
    }
    TreeOptions options;
    options.depth_limit = params.depth_limit;
    options.n_budget = n;
    options.n_threshold = params.n_threshold;
    options.max_candidates = params.max_candidates;

    StratifiedDesign design{build_stratified_tree(collapsed, options, guard), {}};
    design.plan = neyman_allocate(design.tree, n, params.n_threshold);
    SampleDraw draw = draw_stratified_sample(pool, design.tree, design.plan, round, rng);

    SelectionResult out;
    out.selected_ids = draw.all_selected();
    out.fresh_ids = draw.fresh_ids;
    out.design = std::move(design);
    out.draw = std::move(draw);
    out.supports_unbiased_estimation = true;
    return out;
}

SelectionResult select_simple_random(const SamplePool& pool, std::size_t n, int round, Rng& rng) {
    IdList all(pool.size());
    std::iota(all.begin(), all.end(), UnitId{0});
    SampleDraw draw;
    draw.round = round;
    draw.selected_ids.push_back(sample_without_replacement(all, std::min(n, pool.size()), rng));
    for (UnitId id : draw.selected_ids.front()) (pool.is_labeled(id) ? draw.reused_ids : draw.fresh_ids).push_back(id);

    SelectionResult out;
    out.selected_ids = draw.selected_ids.front();
    out.fresh_ids = draw.fresh_ids;
    out.draw = std::move(draw);
    out.supports_unbiased_estimation = true;
    return out;
}

SelectionResult select_uncertainty(const SamplePool& pool, std::size_t n) {
    IdList candidates = pool.unlabeled_ids();
    std::vector<double> h(pool.size(), 0.0);
    for (UnitId id : candidates) h[id] = entropy(pool.scores().row(static_cast<Eigen::Index>(id)).transpose());
    const std::size_t take = std::min(n, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                      [&](UnitId a, UnitId b) { return h[a] > h[b] || (h[a] == h[b] && a < b); });
    candidates.resize(take);

    SelectionResult out;
    out.selected_ids = candidates;
    out.fresh_ids = candidates;
    out.supports_unbiased_estimation = false;
    return out;
}

}  // namespace

SelectionResult select_batch(const QueryStrategy& strategy, const SamplePool& pool, const ClassSet& positive,
                             std::size_t n, int round, Rng& rng) {
    strategy.validate();
    if (n < 1) throw std::invalid_argument("select_batch: n must be >= 1");
    switch (strategy.kind) {
        case StrategyKind::NSRS: return select_neyman(*strategy.nsrs, pool, positive, n, round, rng);
        case StrategyKind::SRS: return select_simple_random(pool, n, round, rng);
        case StrategyKind::UES: return select_uncertainty(pool, n);
    }
    throw std::logic_error("select_batch: unhandled strategy");
}

std::vector<std::size_t> selection_histogram(const IdList& selected, const Eigen::VectorXd& collapsed_scores,
                                             std::size_t bins) {
    if (bins < 2) throw std::invalid_argument("selection_histogram: need at least two bins");
    std::vector<std::size_t> counts(bins, 0);
    for (UnitId id : selected) {
        const double s = std::clamp(collapsed_scores[static_cast<Eigen::Index>(id)], 0.0, 1.0);
        const auto b = std::min(static_cast<std::size_t>(s * static_cast<double>(bins)), bins - 1);
        ++counts[b];
    }
    return counts;
}

}  // namespace nsal
