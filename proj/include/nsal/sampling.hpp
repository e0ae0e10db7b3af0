#pragma once

#include <vector>

#include "nsal/allocation.hpp"
#include "nsal/pool.hpp"
#include "nsal/random.hpp"
#include "nsal/stratified_tree.hpp"

namespace nsal {

struct SampleDraw {
    int round = 0;
    std::vector<IdList> selected_ids;  ///< one list per stratum
    IdList fresh_ids;                  ///< not yet annotated before this draw
    IdList reused_ids;                 ///< annotated in an earlier round

    std::size_t total_selected() const;
    IdList all_selected() const;
};

/// Uniform sample of `k` distinct elements of `from`, in draw order.
IdList sample_without_replacement(const IdList& from, std::size_t k, Rng& rng);

/// Draws n_h units uniformly without replacement from every stratum's full
/// membership (labeled and unlabeled alike) and splits them by annotation state.
/// Throws std::logic_error if the plan asks for more than a stratum holds.
SampleDraw draw_stratified_sample(const SamplePool& pool, const StratifiedTree& tree, const AllocationPlan& plan,
                                  int round, Rng& rng);

}  // namespace nsal
