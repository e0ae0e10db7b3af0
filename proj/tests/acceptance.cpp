// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nsal/allocation.hpp"
#include "nsal/cli.hpp"
#include "nsal/estimators.hpp"
#include "nsal/io.hpp"
#include "nsal/oracle_check.hpp"
#include "nsal/simulation.hpp"
#include "nsal/stratified_tree.hpp"

using namespace nsal;
namespace fs = std::filesystem;

namespace {

constexpr double kBandLow = 0.2;
constexpr double kBandHigh = 0.8;
constexpr double kAnchorRelTol = 1e-9;
constexpr double kOracleSeconds = 5.0;
constexpr double kCalibratedSeconds = 300.0;
constexpr double kUesRoundOneFloor = 0.13;
constexpr double kGuardrailFraction = 0.95;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  C" << id << "  " << name << "  " << o.detail << std::endl;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

const RoundAggregate& find_round(const Aggregates& a, StrategyKind kind, int round, int cls) {
    const auto it = std::find_if(a.rounds.begin(), a.rounds.end(), [&](const RoundAggregate& r) {
        return r.kind == kind && r.round == round && r.cls == cls;
    });
    if (it == a.rounds.end()) throw std::runtime_error("missing aggregate row");
    return *it;
}

const FinalAggregate& find_final(const Aggregates& a, StrategyKind kind, int cls) {
    const auto it = std::find_if(a.finals.begin(), a.finals.end(),
                                 [&](const FinalAggregate& f) { return f.kind == kind && f.cls == cls; });
    if (it == a.finals.end()) throw std::runtime_error("missing final aggregate");
    return *it;
}

std::size_t strategy_index(const ExperimentConfig& c, StrategyKind kind) {
    for (std::size_t s = 0; s < c.strategies.size(); ++s)
        if (c.strategies[s].kind == kind) return s;
    throw std::runtime_error("strategy not configured");
}

ExperimentConfig load(const std::string& name) {
    return load_config(fs::path(NSAL_CONFIG_DIR) / name).experiment;
}

Outcome oracle_check() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = run_oracle_check();
    const double secs = seconds_since(t0);
    const bool ok = rep.passed && rep.max_abs_bias < kOracleBiasTolerance &&
                    rep.max_variance_rel_error <= kOracleVarianceTolerance && secs < kOracleSeconds;
    return {ok, "cases=" + std::to_string(rep.cases.size()) + " max_bias=" + fmt(rep.max_abs_bias) +
                    " max_var_rel_err=" + fmt(rep.max_variance_rel_error) + " census_var=" + fmt(rep.census_variance) +
                    " runtime=" + fmt(secs) + "s"};
}

Outcome srs_anchor() {
    const std::vector<std::size_t> sizes{1000000};
    const std::vector<double> s2{0.1 * 0.9};
    const double objective = candidate_split_objective(sizes, s2, 10000, 2);
    const double reference = srs_reference_variance(0.1, 10000);
    const double e1 = std::abs(objective - 9.0e-6) / 9.0e-6;
    const double e2 = std::abs(reference - 9.0e-6) / 9.0e-6;
    return {e1 <= kAnchorRelTol && e2 <= kAnchorRelTol,
            "objective=" + fmt(objective) + " srs_reference=" + fmt(reference) + " rel_err=" + fmt(std::max(e1, e2))};
}

Outcome variance_band(const RunReport& r, double secs) {
    bool ok = secs < kCalibratedSeconds;
    std::string ratios;
    for (std::size_t t = 1; t <= r.config.rounds(); ++t) {
        const double ratio = find_round(r.main, StrategyKind::NSRS, static_cast<int>(t), 1).variance_ratio_vs_srs;
        ok = ok && ratio >= kBandLow && ratio <= kBandHigh;
        ratios += (t > 1 ? "," : "") + fmt(ratio);
    }
    return {ok, "R=" + std::to_string(r.config.replications) + " ratios=[" + ratios + "] band=[" + fmt(kBandLow) + "," +
                    fmt(kBandHigh) + "] runtime=" + fmt(secs) + "s"};
}

Outcome unbiasedness(const RunReport& r) {
    bool ok = true;
    std::string detail;
    for (auto kind : {StrategyKind::NSRS, StrategyKind::SRS}) {
        const auto& f = find_final(r.main, kind, 1);
        const double gap = std::abs(f.mean_estimate - 0.1);
        const double bound = 3.0 * f.standard_error;
        ok = ok && gap <= bound;
        detail += std::string(to_string(kind)) + ": |mean-0.1|=" + fmt(gap) + " <= " + fmt(bound) + "  ";
    }
    return {ok, detail};
}

Outcome ues_bias(const RunReport& r) {
    std::vector<double> m;
    for (std::size_t t = 1; t <= r.config.rounds(); ++t)
        m.push_back(find_round(r.main, StrategyKind::UES, static_cast<int>(t), 1).mean_estimate);
    bool ok = m.front() > kUesRoundOneFloor;
    std::string s;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i > 0) ok = ok && m[i] < m[i - 1];
        s += (i ? "," : "") + fmt(m[i]);
    }
    return {ok, "mean UES estimate by round=[" + s + "] round1 floor=" + fmt(kUesRoundOneFloor)};
}

Outcome guardrail(const RunReport& r) {
    const auto& c = r.config;
    const std::size_t s = strategy_index(c, StrategyKind::NSRS);
    std::size_t good = 0, total = 0;
    for (const auto& rec : r.records) {
        for (const auto& rr : rec.runs[s].rounds) {
            bool both = true;
            for (std::size_t m = 0; m < c.positive_set.size(); ++m)
                both = both && rr.variance_est[m] <= srs_reference_variance(rec.true_rates[m], rr.batch_size);
            good += both;
            ++total;
        }
    }
    const double fraction = static_cast<double>(good) / static_cast<double>(total);
    bool rounds_ok = true;
    std::string emp;
    for (const auto& a : r.main.rounds) {
        if (a.kind != StrategyKind::NSRS) continue;
        rounds_ok = rounds_ok && a.empirical_variance <= a.srs_reference;
        emp += " t" + std::to_string(a.round) + "c" + std::to_string(a.cls) + "=" +
               fmt(a.empirical_variance / a.srs_reference);
    }
    return {fraction >= kGuardrailFraction && rounds_ok,
            "R=" + std::to_string(c.replications) + " rounds with both classes under SRS reference=" + fmt(fraction) +
                " (need " + fmt(kGuardrailFraction) + ");  empirical/SRS:" + emp};
}

Outcome allocation_properties() {
    std::string detail;
    bool ok = true;
    {
        const std::vector<std::size_t> sizes{5000, 5000};
        const std::vector<double> s2{0.09, 0.01};
        const auto plan = neyman_allocate(sizes, s2, 100, 2);
        const bool hand = plan.n_h == std::vector<std::size_t>{75, 25};
        ok = ok && hand;
        detail += std::string("(75,25) ") + (hand ? "ok" : "wrong");
    }
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.001, 0.25);
    std::size_t clamp_violations = 0, total_violations = 0, dominance_violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t L = 1 + rng() % 12;
        std::vector<std::size_t> sizes(L);
        std::vector<double> s2(L);
        for (std::size_t h = 0; h < L; ++h) {
            sizes[h] = 1 + rng() % 3000;
            s2[h] = u(rng);
        }
        const std::size_t N = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
        const std::size_t n = 1 + rng() % N;
        const auto plan = neyman_allocate(sizes, s2, n, 2);
        std::size_t floors = 0;
        for (std::size_t h = 0; h < L; ++h) {
            floors += std::min<std::size_t>(2, sizes[h]);
            if (plan.n_h[h] < std::min<std::size_t>(2, sizes[h]) || plan.n_h[h] > sizes[h]) ++clamp_violations;
        }
        if (plan.total() != std::max(floors, n)) ++total_violations;
        const auto ney = neyman_shares(sizes, s2, n, 0);
        const auto prop = proportional_shares(sizes, n);
        if (stratified_objective(sizes, s2, std::span<const double>(ney)) >
            stratified_objective(sizes, s2, std::span<const double>(prop)) * (1 + 1e-12))
            ++dominance_violations;
    }
    ok = ok && clamp_violations == 0 && total_violations == 0 && dominance_violations == 0;
    detail += " clamp_violations=" + std::to_string(clamp_violations) +
              " total_violations=" + std::to_string(total_violations) +
              " dominance_violations=" + std::to_string(dominance_violations) + " over 1000 stratifications";
    return {ok, detail};
}

Outcome sampling_distribution(const RunReport& r) {
    // Middle two deciles of a ten-bin histogram over [0, 1].
    auto middle_mass = [&](StrategyKind kind) {
        for (const auto& h : r.main.histograms) {
            if (h.kind != kind || h.round != 1) continue;
            const double total = std::accumulate(h.counts.begin(), h.counts.end(), 0.0);
            return (h.counts[4] + h.counts[5]) / total;
        }
        throw std::runtime_error("missing histogram");
    };
    const double srs = middle_mass(StrategyKind::SRS);
    const double nsrs = middle_mass(StrategyKind::NSRS);
    const double ues = middle_mass(StrategyKind::UES);
    return {nsrs > srs && ues > nsrs,
            "round-1 mass in [0.4,0.6): SRS=" + fmt(srs) + " NSRS=" + fmt(nsrs) + " UES=" + fmt(ues)};
}

Outcome cold_start(const RunReport& r) {
    if (r.cold_start.size() != 2) return {false, "expected two n_init values"};
    auto rel_gap = [](double a, double b) { return std::abs(a - b) / std::max(a, b); };
    const auto& a = r.cold_start[0];
    const auto& b = r.cold_start[1];
    const auto& na = find_round(a, StrategyKind::NSRS, 1, 1);
    const auto& nb = find_round(b, StrategyKind::NSRS, 1, 1);
    const auto& ua = find_round(a, StrategyKind::UES, 1, 1);
    const auto& ub = find_round(b, StrategyKind::UES, 1, 1);
    const double nsrs_gap = rel_gap(na.mean_design_variance, nb.mean_design_variance);
    const double nsrs_emp_gap = rel_gap(na.empirical_variance, nb.empirical_variance);
    const double rmse_a = std::sqrt(ua.bias * ua.bias + ua.empirical_variance);
    const double rmse_b = std::sqrt(ub.bias * ub.bias + ub.empirical_variance);
    const double ues_gap = rel_gap(rmse_a, rmse_b);
    return {nsrs_gap < ues_gap,
            "n_init=" + std::to_string(a.n_init) + "/" + std::to_string(b.n_init) +
                " NSRS variance " + fmt(na.mean_design_variance) + "/" + fmt(nb.mean_design_variance) +
                " rel_gap=" + fmt(nsrs_gap) + " (empirical " + fmt(nsrs_emp_gap) + ");  UES rmse " + fmt(rmse_a) +
                "/" + fmt(rmse_b) + " rel_gap=" + fmt(ues_gap)};
}

Outcome determinism() {
    const fs::path dir = fs::temp_directory_path() / "nsal_acceptance_determinism";
    fs::remove_all(dir);
    const std::string cfg = std::string(NSAL_CONFIG_DIR) + "/rare_class_calibrated.json";
    std::ostringstream out, err;
    const int a = run_cli({"run", "--config", cfg, "--out", (dir / "a").string(), "--replications", "40", "--seed",
                           "99", "--threads", "1"},
                          out, err);
    const int b = run_cli({"run", "--config", cfg, "--out", (dir / "b").string(), "--replications", "40", "--seed",
                           "99", "--threads", "4"},
                          out, err);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    };
    const std::string sa = slurp(dir / "a" / "summary.csv");
    const std::string sb = slurp(dir / "b" / "summary.csv");
    fs::remove_all(dir);
    return {a == kExitOk && b == kExitOk && !sa.empty() && sa == sb,
            "exit codes " + std::to_string(a) + "/" + std::to_string(b) + ", summary.csv " +
                std::to_string(sa.size()) + " bytes, identical=" + (sa == sb ? "yes" : "no")};
}

void guarded(int id, const std::string& name, const std::function<Outcome()>& fn) {
    try {
        report(id, name, fn());
    } catch (const std::exception& e) {
        report(id, name, {false, std::string("exception: ") + e.what()});
    }
}

}  // namespace

int main() {
    guarded(1, "exact unbiasedness oracle", oracle_check);
    guarded(2, "SRS variance anchor", srs_anchor);

    RunReport calibrated;
    double calibrated_secs = 0.0;
    bool have_calibrated = false;
    try {
        const auto t0 = std::chrono::steady_clock::now();
        calibrated = monte_carlo(load("rare_class_calibrated.json"));
        calibrated_secs = seconds_since(t0);
        have_calibrated = true;
    } catch (const std::exception& e) {
        std::cout << "calibrated run failed: " << e.what() << std::endl;
    }
    auto need = [&](auto fn) {
        return [&, fn]() -> Outcome {
            if (!have_calibrated) return {false, "calibrated run unavailable"};
            return fn();
        };
    };
    guarded(3, "variance-reduction band", need([&] { return variance_band(calibrated, calibrated_secs); }));
    guarded(4, "Monte Carlo unbiasedness", need([&] { return unbiasedness(calibrated); }));
    guarded(5, "UES bias pattern", need([&] { return ues_bias(calibrated); }));
    guarded(6, "multiclass guardrail", [] { return guardrail(monte_carlo(load("multiclass_guardrail.json"))); });
    guarded(7, "allocation correctness", allocation_properties);
    guarded(8, "sampling-distribution ordering", need([&] { return sampling_distribution(calibrated); }));
    guarded(9, "cold-start robustness", [] { return cold_start(monte_carlo(load("cold_start.json"))); });
    guarded(10, "determinism", determinism);

    std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAIL") << std::endl;
    return failures == 0 ? 0 : 1;
}
