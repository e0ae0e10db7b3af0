#pragma once

#include <optional>
#include <string>
#include <vector>

namespace nsal {

/// A tiny stratified design whose every possible draw can be enumerated.
struct EnumerableDesign {
    std::string name;
    std::vector<int> labels;              ///< class of each unit
    std::vector<double> scores;           ///< collapsed score of each unit
    std::vector<double> interior_cuts;    ///< stratum boundaries inside (0, 1)
    std::vector<std::size_t> allocation;  ///< n_h per stratum
    int positive_class = 1;
};

struct EnumerationResult {
    std::string name;
    std::size_t population = 0;
    std::size_t draws = 0;
    bool census = false;
    double true_rate = 0.0;
    double mean_estimate = 0.0;
    double abs_bias = 0.0;
    /// E[(Y_hat - Y)^2] over all draws.
    double design_variance = 0.0;
    double mean_variance_est = 0.0;
    /// |E[v] - V| / V, or |E[v]| when V = 0.
    double variance_rel_error = 0.0;
    /// (1 - n/N) N/(N-1) p(1-p)/n for single-stratum designs.
    std::optional<double> closed_form_variance;
    std::optional<double> closed_form_rel_error;
};

/// Enumerates every stratified draw of `design` and averages round_estimate over them.
EnumerationResult enumerate_design(const EnumerableDesign& design);

/// Built-in designs with N <= 12: two-stratum (2,2), census, single-stratum, and three-stratum.
std::vector<EnumerableDesign> builtin_designs();

struct OracleCheckReport {
    std::vector<EnumerationResult> cases;
    double max_abs_bias = 0.0;
    double max_variance_rel_error = 0.0;
    double census_variance = 0.0;
    double closed_form_rel_error = 0.0;
    bool passed = false;
};

inline constexpr double kOracleBiasTolerance = 1e-12;
inline constexpr double kOracleVarianceTolerance = 0.05;
inline constexpr double kOracleClosedFormTolerance = 1e-12;

OracleCheckReport run_oracle_check();

}  // namespace nsal
