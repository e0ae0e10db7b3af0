#include "nsal/sampling.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace nsal {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::size_t SampleDraw::total_selected() const {
    return std::accumulate(selected_ids.begin(), selected_ids.end(), std::size_t{0},
                           [](std::size_t acc, const IdList& ids) { return acc + ids.size(); });
}

IdList SampleDraw::all_selected() const {
    IdList out;
    for (const auto& ids : selected_ids) out.insert(out.end(), ids.begin(), ids.end());
    return out;
}

IdList sample_without_replacement(const IdList& from, std::size_t k, Rng& rng) {
    if (k > from.size()) throw std::logic_error("sample_without_replacement: k exceeds population");
    IdList work = from;
    // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, work.size() - 1);
        std::swap(work[i], work[pick(rng)]);
    }
    work.resize(k);
    return work;
}

SampleDraw draw_stratified_sample(const SamplePool& pool, const StratifiedTree& tree, const AllocationPlan& plan,
                                  int round, Rng& rng) {
    if (plan.n_h.size() != tree.strata.size())
        throw std::logic_error("draw_stratified_sample: plan does not match the tree");
    SampleDraw draw;
    draw.round = round;
    draw.selected_ids.reserve(tree.strata.size());
    for (std::size_t h = 0; h < tree.strata.size(); ++h) {
        const auto& members = tree.strata[h].member_ids;
        if (plan.n_h[h] > members.size())
            throw std::logic_error("draw_stratified_sample: stratum " + std::to_string(h) + " asks for " +
                                   std::to_string(plan.n_h[h]) + " of " + std::to_string(members.size()) + " units");
        draw.selected_ids.push_back(sample_without_replacement(members, plan.n_h[h], rng));
        for (UnitId id : draw.selected_ids.back()) (pool.is_labeled(id) ? draw.reused_ids : draw.fresh_ids).push_back(id);
    }
    return draw;
}

}  // namespace nsal
