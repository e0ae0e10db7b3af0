#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nsal {

/// Per-stratum sample counts for one draw.
struct AllocationPlan {
    std::vector<std::size_t> n_h;
    std::size_t n_requested = 0;
    std::size_t n_threshold = 0;
    /// Set when the request exceeded the population and was cut down to N.
    bool budget_clamped = false;

    std::size_t total() const;
};

/// Apportions `total` integer units across real-valued `shares` by the
/// largest-remainder rule. Equal remainders go to the lower index first.
std::vector<std::size_t> largest_remainder(std::span<const double> shares, std::size_t total);

/// Real-valued Neyman shares clamp(c W_h S_h, min(n_threshold, N_h), N_h) with c
/// set so that they sum to min(n, N); every stratum sits at its floor when the
/// floors alone exceed that. Zero-variance strata stay at their floors unless all
/// other strata are taken whole, and then split the remainder by N_h.
std::vector<double> neyman_shares(std::span<const std::size_t> sizes, std::span<const double> s2_proxy,
                                  std::size_t n, std::size_t n_threshold);

/// Unconstrained proportional shares n N_h / N.
std::vector<double> proportional_shares(std::span<const std::size_t> sizes, std::size_t n);

/// Integer Neyman allocation: water-filled shares, then largest-remainder rounding
/// of the strata that are not pinned to a bound.
AllocationPlan neyman_allocate(std::span<const std::size_t> sizes, std::span<const double> s2_proxy, std::size_t n,
                               std::size_t n_threshold);

/// sum_h W_h^2 s2_h / n_h with W_h = N_h / N. Returns +inf for an empty stratum
/// or for a stratum with positive variance and no allocated draws.
double stratified_objective(std::span<const std::size_t> sizes, std::span<const double> s2_proxy,
                            std::span<const double> n_h);
double stratified_objective(std::span<const std::size_t> sizes, std::span<const double> s2_proxy,
                            std::span<const std::size_t> n_h);

}  // namespace nsal
