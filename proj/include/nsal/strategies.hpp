#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nsal/pool.hpp"
#include "nsal/sampling.hpp"
#include "nsal/stratified_tree.hpp"

namespace nsal {

enum class StrategyKind { NSRS, SRS, UES };

std::string_view to_string(StrategyKind kind);
/// Parses "NSRS", "SRS" or "UES" (case-insensitive); throws std::invalid_argument otherwise.
StrategyKind parse_strategy_kind(std::string_view name);

struct NsrsParams {
    int depth_limit = 5;
    std::size_t n_threshold = 2;
    bool guardrail = false;
    std::size_t max_candidates = 256;
};

struct QueryStrategy {
    StrategyKind kind = StrategyKind::SRS;
    std::optional<NsrsParams> nsrs;  ///< present iff kind == NSRS

    static QueryStrategy neyman(NsrsParams params = {}) { return {StrategyKind::NSRS, params}; }
    static QueryStrategy simple_random() { return {StrategyKind::SRS, std::nullopt}; }
    static QueryStrategy uncertainty_entropy() { return {StrategyKind::UES, std::nullopt}; }

    void validate() const;
};

struct StratifiedDesign {
    StratifiedTree tree;
    AllocationPlan plan;
};

struct SelectionResult {
    IdList selected_ids;
    IdList fresh_ids;
    /// Tree and allocation behind an NSRS draw.
    std::optional<StratifiedDesign> design;
    /// Per-stratum draw for the probability designs (NSRS, and SRS as one stratum).
    std::optional<SampleDraw> draw;
    bool supports_unbiased_estimation = false;
};

/// Shannon entropy in nats with 0 ln 0 = 0.
double entropy(const Eigen::Ref<const Eigen::VectorXd>& probabilities);

/// Selects the round-`round` batch of size n from the current pool scores.
/// NSRS and SRS draw from the whole pool; UES ranks the unlabeled units by
/// entropy (ties by id) and returns at most the unlabeled count.
SelectionResult select_batch(const QueryStrategy& strategy, const SamplePool& pool, const ClassSet& positive,
                             std::size_t n, int round, Rng& rng);

/// Counts of the selected units' scores over `bins` equal-width bins of [0, 1].
std::vector<std::size_t> selection_histogram(const IdList& selected, const Eigen::VectorXd& collapsed_scores,
                                             std::size_t bins);

}  // namespace nsal
