#include "nsal/oracle_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "nsal/estimators.hpp"
#include "nsal/stratified_tree.hpp"

namespace nsal {

namespace {

/// All k-subsets of `items`, lexicographic.
std::vector<IdList> combinations(const IdList& items, std::size_t k) {
    std::vector<IdList> out;
    if (k > items.size()) return out;
    std::vector<bool> mask(items.size(), false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(k), true);
    do {
        IdList pick;
        for (std::size_t i = 0; i < items.size(); ++i)
            if (mask[i]) pick.push_back(items[i]);
        out.push_back(std::move(pick));
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return out;
}

}  // namespace

EnumerationResult enumerate_design(const EnumerableDesign& design) {
    if (design.labels.size() != design.scores.size()) throw std::invalid_argument("enumerate_design: size mismatch");
    const std::size_t N = design.labels.size();
    const int K = *std::max_element(design.labels.begin(), design.labels.end()) + 1;
    SamplePool pool(design.labels, static_cast<std::size_t>(std::max(K, design.positive_class + 1)));
    IdList everyone(N);
    std::iota(everyone.begin(), everyone.end(), UnitId{0});
    pool.annotate(everyone, 0);

    const Eigen::VectorXd scores = Eigen::Map<const Eigen::VectorXd>(design.scores.data(), static_cast<Eigen::Index>(N));
    const StratifiedTree tree = tree_from_thresholds(scores, design.interior_cuts);
    if (tree.num_strata() != design.allocation.size())
        throw std::invalid_argument("enumerate_design: allocation does not match the strata");

    std::vector<std::vector<IdList>> per_stratum;
    for (std::size_t h = 0; h < tree.num_strata(); ++h)
        per_stratum.push_back(combinations(tree.strata[h].member_ids, design.allocation[h]));

    EnumerationResult res;
    res.name = design.name;
    res.population = N;
    res.true_rate = pool.true_rate(design.positive_class);
    res.census = true;
    for (std::size_t h = 0; h < tree.num_strata(); ++h) res.census = res.census && design.allocation[h] == tree.strata[h].N_h;

    const ClassSet classes{design.positive_class};
    double sum_est = 0.0, sum_sq = 0.0, sum_var = 0.0;
    std::vector<std::size_t> cursor(per_stratum.size(), 0);
    // Odometer over the cartesian product of per-stratum subsets.
    for (;;) {
        SampleDraw draw;
        for (std::size_t h = 0; h < per_stratum.size(); ++h) draw.selected_ids.push_back(per_stratum[h][cursor[h]]);
        draw.reused_ids = draw.all_selected();
        const RoundEstimate est = round_estimate(pool, draw, tree, classes);
        const double dev = est.estimate[0] - res.true_rate;
        sum_est += est.estimate[0];
        sum_sq += dev * dev;
        sum_var += est.variance_est[0];
        ++res.draws;

        std::size_t h = 0;
        while (h < cursor.size() && ++cursor[h] == per_stratum[h].size()) cursor[h++] = 0;
        if (h == cursor.size()) break;
    }
    const double draws = static_cast<double>(res.draws);
    res.mean_estimate = sum_est / draws;
    res.abs_bias = std::abs(res.mean_estimate - res.true_rate);
    res.design_variance = sum_sq / draws;
    res.mean_variance_est = sum_var / draws;
    res.variance_rel_error = res.design_variance > 0.0
                                 ? std::abs(res.mean_variance_est - res.design_variance) / res.design_variance
                                 : std::abs(res.mean_variance_est);
    if (tree.num_strata() == 1) {
        res.closed_form_variance = srs_design_variance(res.true_rate, design.allocation[0], N);
        res.closed_form_rel_error =
            *res.closed_form_variance > 0.0
                ? std::abs(res.design_variance - *res.closed_form_variance) / *res.closed_form_variance
                : std::abs(res.design_variance);
    }
    return res;
}

std::vector<EnumerableDesign> builtin_designs() {
    std::vector<EnumerableDesign> out;
    out.push_back({"two-strata-N12-plan-2-2",
                   {0, 1, 0, 0, 0, 1, 1, 1, 0, 1, 1, 0},
                   {0.1, 0.2, 0.15, 0.3, 0.05, 0.25, 0.9, 0.7, 0.6, 0.8, 0.95, 0.65},
                   {0.5},
                   {2, 2}});
    out.push_back({"census-N8", {1, 0, 0, 1, 1, 1, 0, 1}, {0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9}, {0.5}, {4, 4}});
    out.push_back({"single-stratum-N10-n3",
                   {1, 0, 0, 1, 0, 0, 0, 1, 0, 0},
                   {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95},
                   {},
                   {3}});
    out.push_back({"three-strata-N12-plan-2-3-2",
                   {0, 0, 1, 0, 1, 1, 0, 1, 0, 1, 1, 1},
                   {0.05, 0.1, 0.2, 0.3, 0.35, 0.4, 0.5, 0.55, 0.6, 0.8, 0.85, 0.9},
                   {0.25, 0.7},
                   {2, 3, 2}});
    return out;
}

OracleCheckReport run_oracle_check() {
    OracleCheckReport rep;
    rep.passed = true;
    for (const auto& design : builtin_designs()) {
        auto res = enumerate_design(design);
        rep.max_abs_bias = std::max(rep.max_abs_bias, res.abs_bias);
        if (res.design_variance > 0.0) rep.max_variance_rel_error = std::max(rep.max_variance_rel_error, res.variance_rel_error);
        if (res.census) rep.census_variance = std::max(rep.census_variance, res.mean_variance_est);
        if (res.closed_form_rel_error) rep.closed_form_rel_error = std::max(rep.closed_form_rel_error, *res.closed_form_rel_error);
        rep.cases.push_back(std::move(res));
    }
    rep.passed = rep.max_abs_bias < kOracleBiasTolerance && rep.max_variance_rel_error <= kOracleVarianceTolerance &&
                 rep.census_variance == 0.0 && rep.closed_form_rel_error < kOracleClosedFormTolerance;
    return rep;
}

}  // namespace nsal
