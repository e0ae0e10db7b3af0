#include "nsal/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace nsal {

std::size_t AllocationPlan::total() const { return std::accumulate(n_h.begin(), n_h.end(), std::size_t{0}); }

std::vector<std::size_t> largest_remainder(std::span<const double> shares, std::size_t total) {
    std::vector<std::size_t> out(shares.size(), 0);
    if (shares.empty()) return out;
    std::vector<double> rem(shares.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < shares.size(); ++i) {
        const double s = std::max(0.0, shares[i]);
        const double fl = std::floor(s);
        out[i] = static_cast<std::size_t>(fl);
        rem[i] = s - fl;
        assigned += out[i];
    }
    std::vector<std::size_t> order(shares.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    std::size_t k = 0;
    while (assigned < total) {
        ++out[order[k % order.size()]];
        ++assigned;
        ++k;
    }
    for (auto it = order.rbegin(); assigned > total;) {
        if (out[*it] > 0) {
            --out[*it];
            --assigned;
        }
        if (++it == order.rend()) it = order.rbegin();
    }
    return out;
}

namespace {

struct WaterFill {
    std::vector<double> shares;
    std::vector<bool> pinned;
};

/// Sets shares clamp(c * weight_h, lo_h, hi_h) for the strata in `active`, with c
/// chosen so that they sum to `target`; requires the target to be reachable.
void solve_box(std::vector<std::size_t> active, const std::vector<double>& weight, const std::vector<double>& lo,
               const std::vector<double>& hi, double target, WaterFill& out) {
    std::erase_if(active, [&](std::size_t h) {
        if (weight[h] > 0.0) return false;
        out.shares[h] = lo[h];
        target -= lo[h];
        return true;
    });
    if (active.empty()) return;
    // g(c) = sum_h clamp(c w_h, lo_h, hi_h) is piecewise linear and nondecreasing in c.
    std::vector<double> breaks{0.0};
    for (auto h : active) {
        breaks.push_back(lo[h] / weight[h]);
        breaks.push_back(hi[h] / weight[h]);
    }
    std::sort(breaks.begin(), breaks.end());
    const auto g = [&](double c) {
        double total = 0.0;
        for (auto h : active) total += std::clamp(c * weight[h], lo[h], hi[h]);
        return total;
    };
    std::size_t k = 1;
    while (k + 1 < breaks.size() && g(breaks[k]) < target) ++k;
    const double c0 = breaks[k - 1];
    double base = 0.0, slope = 0.0;
    for (auto h : active) {
        const double mid = 0.5 * (c0 + breaks[k]) * weight[h];
        if (mid <= lo[h]) base += lo[h];
        else if (mid >= hi[h]) base += hi[h];
        else slope += weight[h];
    }
    const double c = slope > 0.0 ? (target - base) / slope : c0;
    for (auto h : active) {
        const double x = c * weight[h];
        out.pinned[h] = x <= lo[h] || x >= hi[h];
        out.shares[h] = std::clamp(x, lo[h], hi[h]);
    }
}

WaterFill water_fill(std::span<const std::size_t> sizes, std::span<const double> s2_proxy, std::size_t n,
                     std::size_t n_threshold) {
    if (sizes.size() != s2_proxy.size()) throw std::invalid_argument("neyman allocation: size/proxy length mismatch");
    if (sizes.empty()) throw std::invalid_argument("neyman allocation: no strata");
    const std::size_t L = sizes.size();
    const std::size_t population = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    const double budget = static_cast<double>(std::min(n, population));

    std::vector<double> weight(L), lo(L), hi(L);
    for (std::size_t h = 0; h < L; ++h) {
        if (s2_proxy[h] < 0.0 || !std::isfinite(s2_proxy[h]))
            throw std::invalid_argument("neyman allocation: variance proxy must be finite and non-negative");
        weight[h] = static_cast<double>(sizes[h]) * std::sqrt(s2_proxy[h]);
        lo[h] = static_cast<double>(std::min(n_threshold, sizes[h]));
        hi[h] = static_cast<double>(sizes[h]);
    }

    WaterFill out{lo, std::vector<bool>(L, true)};
    const double floors = std::accumulate(lo.begin(), lo.end(), 0.0);
    if (floors >= budget) return out;

    std::vector<std::size_t> weighted, flat;
    double weighted_cap = 0.0;
    for (std::size_t h = 0; h < L; ++h) {
        if (weight[h] > 0.0) {
            weighted.push_back(h);
            weighted_cap += hi[h] - lo[h];
        } else {
            flat.push_back(h);
        }
    }
    if (budget - floors <= weighted_cap) {
        double flat_floor = 0.0;
        for (auto h : flat) flat_floor += lo[h];
        solve_box(weighted, weight, lo, hi, budget - flat_floor, out);
        return out;
    }
    // Every stratum with positive variance is taken whole; the zero-variance
    // strata share what is left in proportion to their sizes.
    double left = budget;
    for (auto h : weighted) {
        out.shares[h] = hi[h];
        left -= hi[h];
    }
    solve_box(flat, hi, lo, hi, left, out);
    return out;
}

}  // namespace

std::vector<double> neyman_shares(std::span<const std::size_t> sizes, std::span<const double> s2_proxy, std::size_t n,
                                  std::size_t n_threshold) {
    return water_fill(sizes, s2_proxy, n, n_threshold).shares;
}

std::vector<double> proportional_shares(std::span<const std::size_t> sizes, std::size_t n) {
    const double population = static_cast<double>(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}));
    std::vector<double> out(sizes.size());
    for (std::size_t h = 0; h < sizes.size(); ++h)
        out[h] = static_cast<double>(n) * static_cast<double>(sizes[h]) / population;
    return out;
}

AllocationPlan neyman_allocate(std::span<const std::size_t> sizes, std::span<const double> s2_proxy, std::size_t n,
                               std::size_t n_threshold) {
    if (n < 1) throw std::invalid_argument("neyman_allocate: n must be at least 1");
    if (n_threshold < 1) throw std::invalid_argument("neyman_allocate: n_threshold must be at least 1");
    const auto fill = water_fill(sizes, s2_proxy, n, n_threshold);
    const std::size_t population = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});

    AllocationPlan plan;
    plan.n_requested = n;
    plan.n_threshold = n_threshold;
    plan.budget_clamped = n > population;
    plan.n_h.assign(sizes.size(), 0);

    std::size_t pinned_total = 0;
    std::vector<double> free_shares;
    std::vector<std::size_t> free_index;
    for (std::size_t h = 0; h < sizes.size(); ++h) {
        if (fill.pinned[h]) {
            plan.n_h[h] = static_cast<std::size_t>(std::llround(fill.shares[h]));
            pinned_total += plan.n_h[h];
        } else {
            free_shares.push_back(fill.shares[h]);
            free_index.push_back(h);
        }
    }
    const std::size_t budget = std::min(n, population);
    if (!free_index.empty()) {
        const std::size_t free_total = budget > pinned_total ? budget - pinned_total : 0;
        const auto rounded = largest_remainder(free_shares, free_total);
        for (std::size_t i = 0; i < free_index.size(); ++i) plan.n_h[free_index[i]] = rounded[i];
    }
    return plan;
}

namespace {

template <typename Count>
double objective_impl(std::span<const std::size_t> sizes, std::span<const double> s2, std::span<const Count> n_h) {
    if (sizes.size() != s2.size() || sizes.size() != n_h.size())
        throw std::invalid_argument("stratified_objective: length mismatch");
    const double population = static_cast<double>(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}));
    constexpr double inf = std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (std::size_t h = 0; h < sizes.size(); ++h) {
        if (sizes[h] == 0) return inf;
        if (s2[h] == 0.0) continue;
        const double n = static_cast<double>(n_h[h]);
        if (!(n > 0.0)) return inf;
        const double w = static_cast<double>(sizes[h]) / population;
        total += w * w * s2[h] / n;
    }
    return total;
}

}  // namespace

double stratified_objective(std::span<const std::size_t> sizes, std::span<const double> s2_proxy,
                            std::span<const double> n_h) {
    return objective_impl(sizes, s2_proxy, n_h);
}

double stratified_objective(std::span<const std::size_t> sizes, std::span<const double> s2_proxy,
                            std::span<const std::size_t> n_h) {
    return objective_impl(sizes, s2_proxy, n_h);
}

}  // namespace nsal
