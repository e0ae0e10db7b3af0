#include "nsal/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "nsal/allocation.hpp"
#include "nsal/estimators.hpp"
#include "nsal/sampling.hpp"

namespace nsal {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream identifiers for derive_seed within one replication.
enum Stream : std::uint64_t {
    kPopulationStream = 1,
    kInitialSampleStream = 2,
    kOracleNoiseStream = 3,
    kTrainingStream = 4,
    kStrategyStream = 16,
};

double sample_variance(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(xs.size() - 1);
}

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return kNaN;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

void PopulationSpec::validate() const {
    if (K < 2) throw std::invalid_argument("population: K must be >= 2");
    if (N < K) throw std::invalid_argument("population: N must be >= K");
    if (class_rates.size() != K) throw std::invalid_argument("population: class_rates must have K entries");
    double total = 0.0;
    for (double r : class_rates) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("population: class rates must be >= 0");
        total += r;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("population: class rates must sum to 1");
    if (class_means.rows() != static_cast<Eigen::Index>(K))
        throw std::invalid_argument("population: class_means must have K rows");
    if (class_means.cols() < 1) throw std::invalid_argument("population: feature dimension must be >= 1");
    if (!class_means.allFinite()) throw std::invalid_argument("population: class means must be finite");
    if (!(feature_sigma > 0.0) || !std::isfinite(feature_sigma))
        throw std::invalid_argument("population: feature_sigma must be > 0");
}

SamplePool generate_population(const PopulationSpec& spec, Rng& rng) {
    spec.validate();
    std::vector<double> shares(spec.K);
    for (std::size_t k = 0; k < spec.K; ++k) shares[k] = spec.class_rates[k] * static_cast<double>(spec.N);
    const auto counts = largest_remainder(shares, spec.N);

    std::vector<int> labels;
    labels.reserve(spec.N);
    for (std::size_t k = 0; k < spec.K; ++k) labels.insert(labels.end(), counts[k], static_cast<int>(k));
    std::shuffle(labels.begin(), labels.end(), rng);

    const auto n = static_cast<Eigen::Index>(spec.N);
    const auto d = spec.class_means.cols();
    const auto K = static_cast<Eigen::Index>(spec.K);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd features(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto y = labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < d; ++j) features(i, j) = spec.class_means(y, j) + spec.feature_sigma * normal(rng);
    }

    // Bayes posterior with the class rates as priors.
    Eigen::VectorXd log_prior(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double r = spec.class_rates[static_cast<std::size_t>(k)];
        log_prior[k] = r > 0.0 ? std::log(r) : -std::numeric_limits<double>::infinity();
    }
    const double inv_two_var = 0.5 / (spec.feature_sigma * spec.feature_sigma);
    Eigen::MatrixXd posterior(n, K);
    Eigen::VectorXd logp(K);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < K; ++k)
            logp[k] = log_prior[k] - inv_two_var * (features.row(i) - spec.class_means.row(k)).squaredNorm();
        const double top = logp.maxCoeff();
        const Eigen::VectorXd e = (logp.array() - top).exp();
        posterior.row(i) = (e / e.sum()).transpose();
    }
    return SamplePool(std::move(labels), spec.K, std::move(features), std::move(posterior));
}

void ExperimentConfig::validate() const {
    population.validate();
    if (strategies.empty()) throw std::invalid_argument("config: at least one strategy is required");
    for (const auto& s : strategies) s.validate();
    if (model.kind == ModelConfig::Kind::Oracle) model.oracle.validate();
    if (n_init.empty()) throw std::invalid_argument("config: n_init must list at least one value");
    if (batch_sizes.empty()) throw std::invalid_argument("config: at least one round is required");
    for (auto b : batch_sizes)
        if (b < 1) throw std::invalid_argument("config: batch sizes must be >= 1");
    const std::size_t spent = std::accumulate(batch_sizes.begin(), batch_sizes.end(), std::size_t{0});
    for (auto n0 : n_init)
        if (n0 + spent > population.N) throw std::invalid_argument("config: n_init + sum(batch_sizes) exceeds N");
    validate_positive_set(positive_set, population.K);
    if (replications < 1) throw std::invalid_argument("config: replications must be >= 1");
    if (histogram_bins < 2) throw std::invalid_argument("config: histogram_bins must be >= 2");
}

std::uint64_t replication_seed(std::uint64_t experiment_seed, std::size_t n_init_index, std::size_t index) {
    return derive_seed(derive_seed(experiment_seed, n_init_index), index);
}

StrategyRun run_active_learning(const ExperimentConfig& config, const QueryStrategy& strategy,
                                const SamplePool& population, std::size_t n_init, std::uint64_t rep_seed) {
    SamplePool pool = population;
    const ClassSet positive = validate_positive_set(config.positive_set, pool.num_classes());
    StrategyRun run;
    run.kind = strategy.kind;

    IdList everyone(pool.size());
    std::iota(everyone.begin(), everyone.end(), UnitId{0});
    Rng init_rng(derive_seed(rep_seed, kInitialSampleStream));
    const IdList initial = sample_without_replacement(everyone, std::min(n_init, pool.size()), init_rng);
    pool.annotate(initial, 0);

    const bool oracle = config.model.kind == ModelConfig::Kind::Oracle;
    Eigen::MatrixXd oracle_view;
    LinearModel linear;
    auto retrain = [&](int round) {
        const IdList ids = pool.labeled_ids();
        Eigen::MatrixXd x(static_cast<Eigen::Index>(ids.size()), pool.features().cols());
        std::vector<int> y(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            x.row(static_cast<Eigen::Index>(i)) = pool.features().row(static_cast<Eigen::Index>(ids[i]));
            y[i] = pool.revealed_label(ids[i]);
        }
        LogisticHyper hyper = config.model.logistic;
        hyper.seed = derive_seed(rep_seed, kTrainingStream + static_cast<std::uint64_t>(round));
        linear = train_logistic(x, y, pool.num_classes(), hyper);
    };
    if (oracle) {
        OracleScoreModel model = config.model.oracle;
        model.noise_seed = derive_seed(rep_seed, kOracleNoiseStream);
        oracle_view = predict_scores(model, pool);
    } else {
        retrain(0);
    }

    Rng draw_rng(derive_seed(rep_seed, kStrategyStream + static_cast<std::uint64_t>(strategy.kind)));
    std::vector<RoundEstimate> design_rounds;
    const auto N = pool.size();

    for (std::size_t t = 1; t <= config.rounds(); ++t) {
        const int round = static_cast<int>(t);
        if (pool.labeled_count() == N) {
            run.complete = false;
            break;
        }
        pool.set_scores(oracle ? oracle_view : predict_scores(linear, pool.features()));
        const std::size_t n_t = config.batch_sizes[t - 1];
        const SelectionResult sel = select_batch(strategy, pool, positive, n_t, round, draw_rng);
        pool.annotate(sel.fresh_ids, round);

        const Eigen::VectorXd collapsed = collapse_scores(pool, positive);
        RoundRecord rec;
        rec.round = round;
        rec.batch_size = n_t;
        rec.fresh = sel.fresh_ids.size();
        rec.reused = sel.selected_ids.size() - sel.fresh_ids.size();
        rec.cumulative_labeled = pool.labeled_count();
        rec.histogram = selection_histogram(sel.selected_ids, collapsed, config.histogram_bins);

        if (sel.supports_unbiased_estimation && sel.draw) {
            const StratifiedTree tree = sel.design ? sel.design->tree : single_stratum_tree(collapsed);
            RoundEstimate est = round_estimate(pool, *sel.draw, tree, positive);
            rec.estimate = est.estimate;
            rec.variance_est = est.variance_est;
            rec.strata = tree.num_strata();
            for (int cls : positive) {
                rec.design_variance.push_back(sel.design ? stratified_design_variance(pool, tree, sel.design->plan, cls)
                                                         : srs_design_variance(pool.true_rate(cls),
                                                                               sel.selected_ids.size(), N));
            }
            design_rounds.push_back(std::move(est));
        } else {
            rec.estimate = labeled_mean_estimate(pool, positive);
            if (sel.selected_ids.size() < n_t) run.complete = false;
        }
        run.rounds.push_back(std::move(rec));
        if (!oracle) retrain(round);
        if (!run.complete) break;
    }

    if (!design_rounds.empty()) {
        const FinalEstimate fin = combine_rounds(design_rounds);
        run.final_estimate = fin.estimate;
        run.final_variance_est = fin.variance_est;
    } else if (!run.rounds.empty()) {
        run.final_estimate = run.rounds.back().estimate;
    }
    return run;
}

ReplicationRecord run_replication(const ExperimentConfig& config, std::size_t n_init_index, std::size_t index) {
    ReplicationRecord rec;
    rec.index = index;
    rec.n_init = config.n_init.at(n_init_index);
    rec.seed = replication_seed(config.seed, n_init_index, index);
    Rng pop_rng(derive_seed(rec.seed, kPopulationStream));
    const SamplePool population = generate_population(config.population, pop_rng);
    for (int cls : config.positive_set) rec.true_rates.push_back(population.true_rate(cls));
    for (const auto& strategy : config.strategies)
        rec.runs.push_back(run_active_learning(config, strategy, population, rec.n_init, rec.seed));
    return rec;
}

Aggregates aggregate(const ExperimentConfig& config, const std::vector<ReplicationRecord>& records,
                     std::size_t n_init) {
    Aggregates out;
    out.n_init = n_init;
    std::vector<const ReplicationRecord*> chosen;
    for (const auto& r : records)
        if (r.n_init == n_init) chosen.push_back(&r);
    const std::size_t M = config.positive_set.size();
    const std::size_t S = config.strategies.size();

    std::vector<double> true_rate(M, kNaN);
    for (std::size_t m = 0; m < M; ++m) {
        std::vector<double> v;
        for (const auto* r : chosen) v.push_back(r->true_rates.at(m));
        true_rate[m] = mean_of(v);
    }

    for (std::size_t s = 0; s < S; ++s) {
        const StrategyKind kind = config.strategies[s].kind;
        for (std::size_t t = 0; t < config.rounds(); ++t) {
            HistogramAggregate hist{kind, static_cast<int>(t + 1), std::vector<std::size_t>(config.histogram_bins, 0)};
            for (std::size_t m = 0; m < M; ++m) {
                std::vector<double> est, var, dvar, fresh, cum;
                for (const auto* r : chosen) {
                    const auto& run = r->runs.at(s);
                    if (t >= run.rounds.size()) continue;
                    const auto& rr = run.rounds[t];
                    est.push_back(rr.estimate.at(m));
                    if (!rr.variance_est.empty()) var.push_back(rr.variance_est.at(m));
                    if (!rr.design_variance.empty()) dvar.push_back(rr.design_variance.at(m));
                    fresh.push_back(static_cast<double>(rr.fresh));
                    cum.push_back(static_cast<double>(rr.cumulative_labeled));
                    if (m == 0)
                        for (std::size_t b = 0; b < hist.counts.size() && b < rr.histogram.size(); ++b)
                            hist.counts[b] += rr.histogram[b];
                }
                RoundAggregate a;
                a.kind = kind;
                a.round = static_cast<int>(t + 1);
                a.cls = config.positive_set[m];
                a.batch_size = config.batch_sizes[t];
                a.count = est.size();
                a.true_rate = true_rate[m];
                a.mean_estimate = mean_of(est);
                a.bias = a.mean_estimate - a.true_rate;
                a.empirical_variance = est.empty() ? kNaN : sample_variance(est, a.mean_estimate);
                a.mean_variance_est = mean_of(var);
                a.mean_design_variance = mean_of(dvar);
                a.srs_reference = srs_reference_variance(a.true_rate, a.batch_size);
                a.variance_ratio_vs_srs = kNaN;
                a.matched_variance_budget = kNaN;
                a.mean_fresh = mean_of(fresh);
                a.mean_cumulative_labeled = mean_of(cum);
                out.rounds.push_back(a);
            }
            out.histograms.push_back(std::move(hist));
        }
        for (std::size_t m = 0; m < M; ++m) {
            std::vector<double> est, var;
            for (const auto* r : chosen) {
                const auto& run = r->runs.at(s);
                if (run.final_estimate.empty()) continue;
                est.push_back(run.final_estimate.at(m));
                if (!run.final_variance_est.empty()) var.push_back(run.final_variance_est.at(m));
            }
            FinalAggregate f;
            f.kind = kind;
            f.cls = config.positive_set[m];
            f.count = est.size();
            f.true_rate = true_rate[m];
            f.mean_estimate = mean_of(est);
            f.bias = f.mean_estimate - f.true_rate;
            f.empirical_variance = est.empty() ? kNaN : sample_variance(est, f.mean_estimate);
            f.standard_error = est.empty() ? kNaN : std::sqrt(f.empirical_variance / static_cast<double>(est.size()));
            f.mean_variance_est = mean_of(var);
            out.finals.push_back(f);
        }
    }

    // Ratios against the SRS run of the same round and class.
    for (auto& a : out.rounds) {
        const auto srs = std::find_if(out.rounds.begin(), out.rounds.end(), [&](const RoundAggregate& b) {
            return b.kind == StrategyKind::SRS && b.round == a.round && b.cls == a.cls;
        });
        if (srs == out.rounds.end() || !(srs->empirical_variance > 0.0)) continue;
        a.variance_ratio_vs_srs = a.empirical_variance / srs->empirical_variance;
        a.matched_variance_budget = a.variance_ratio_vs_srs * static_cast<double>(a.batch_size);
    }
    return out;
}

void reaggregate(RunReport& report) {
    report.main = aggregate(report.config, report.records, report.config.n_init.front());
    report.cold_start.clear();
    if (report.config.n_init.size() > 1)
        for (auto n0 : report.config.n_init) report.cold_start.push_back(aggregate(report.config, report.records, n0));
}

RunReport monte_carlo(const ExperimentConfig& config, std::size_t threads) {
    config.validate();
    const std::size_t R = config.replications;
    const std::size_t jobs = R * config.n_init.size();
    RunReport report;
    report.config = config;
    report.records.resize(jobs);

    std::size_t workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    workers = std::min(workers, jobs);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t job = next.fetch_add(1);
            if (job >= jobs) return;
            try {
                report.records[job] = run_replication(config, job / R, job % R);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = jobs;
                return;
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    reaggregate(report);
    return report;
}

}  // namespace nsal
