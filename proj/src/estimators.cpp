#include "nsal/estimators.hpp"

#include <stdexcept>

namespace nsal {

RoundEstimate round_estimate(const SamplePool& pool, const SampleDraw& draw, const StratifiedTree& tree,
                             const ClassSet& classes) {
    if (draw.selected_ids.size() != tree.strata.size())
        throw std::invalid_argument("round_estimate: draw does not match the tree");
    if (classes.empty()) throw std::invalid_argument("round_estimate: no classes to estimate");
    const std::size_t M = classes.size();

    RoundEstimate out;
    out.round = draw.round;
    out.classes = classes;
    out.estimate.assign(M, 0.0);
    out.variance_est.assign(M, 0.0);
    out.n_labeled_fresh = draw.fresh_ids.size();

    for (std::size_t h = 0; h < tree.strata.size(); ++h) {
        const Stratum& stratum = tree.strata[h];
        const IdList& picked = draw.selected_ids[h];
        StratumEstimate se;
        se.W_h = stratum.W_h;
        se.N_h = stratum.N_h;
        se.n_h = picked.size();
        se.mean.assign(M, 0.0);
        se.sample_variance.assign(M, 0.0);
        if (se.N_h == 0) {
            out.per_stratum.push_back(std::move(se));
            continue;
        }
        if (se.n_h == 0) throw std::invalid_argument("round_estimate: nonempty stratum without draws");

        for (UnitId id : picked) {
            const int y = pool.revealed_label(id);
            for (std::size_t m = 0; m < M; ++m)
                if (y == classes[m]) se.mean[m] += 1.0;
        }
        const double n = static_cast<double>(se.n_h);
        const double fpc = 1.0 - n / static_cast<double>(se.N_h);
        if (se.n_h == 1) out.single_draw_stratum = true;
        for (std::size_t m = 0; m < M; ++m) {
            se.mean[m] /= n;
            if (se.n_h > 1) se.sample_variance[m] = n / (n - 1.0) * se.mean[m] * (1.0 - se.mean[m]);
            out.estimate[m] += se.W_h * se.mean[m];
            out.variance_est[m] += se.W_h * se.W_h * fpc * se.sample_variance[m] / n;
        }
        out.per_stratum.push_back(std::move(se));
    }
    return out;
}

FinalEstimate combine_rounds(const std::vector<RoundEstimate>& rounds) {
    if (rounds.empty()) throw std::invalid_argument("combine_rounds: no rounds");
    const std::size_t M = rounds.front().estimate.size();
    FinalEstimate out;
    out.rounds = rounds.size();
    out.estimate.assign(M, 0.0);
    out.variance_est.assign(M, 0.0);
    for (const auto& r : rounds) {
        if (r.classes != rounds.front().classes)
            throw std::invalid_argument("combine_rounds: rounds estimate different classes");
        for (std::size_t m = 0; m < M; ++m) {
            out.estimate[m] += r.estimate[m];
            out.variance_est[m] += r.variance_est[m];
        }
    }
    const double T = static_cast<double>(rounds.size());
    for (std::size_t m = 0; m < M; ++m) {
        out.estimate[m] /= T;
        out.variance_est[m] /= T * T;
    }
    out.per_round = rounds;
    return out;
}

double srs_reference_variance(double p, std::size_t n) {
    if (n == 0) throw std::invalid_argument("srs_reference_variance: n must be >= 1");
    return p * (1.0 - p) / static_cast<double>(n);
}

double srs_design_variance(double p, std::size_t n, std::size_t N) {
    if (n == 0 || n > N) throw std::invalid_argument("srs_design_variance: need 1 <= n <= N");
    if (N == 1) return 0.0;
    const double nn = static_cast<double>(n), NN = static_cast<double>(N);
    return (1.0 - nn / NN) * NN / (NN - 1.0) * p * (1.0 - p) / nn;
}

double stratified_design_variance(const SamplePool& pool, const StratifiedTree& tree, const AllocationPlan& plan,
                                  int cls) {
    double v = 0.0;
    for (std::size_t h = 0; h < tree.strata.size(); ++h) {
        const auto& s = tree.strata[h];
        if (s.N_h < 2 || plan.n_h[h] == 0) continue;
        double hits = 0.0;
        for (UnitId id : s.member_ids)
            if (pool.true_label(id) == cls) hits += 1.0;
        const double Nh = static_cast<double>(s.N_h);
        const double P = hits / Nh;
        const double S2 = Nh / (Nh - 1.0) * P * (1.0 - P);
        const double n = static_cast<double>(plan.n_h[h]);
        v += s.W_h * s.W_h * (1.0 - n / Nh) * S2 / n;
    }
    return v;
}

std::vector<double> labeled_mean_estimate(const SamplePool& pool, const ClassSet& classes) {
    std::vector<double> out(classes.size(), 0.0);
    std::size_t count = 0;
    for (UnitId id = 0; id < pool.size(); ++id) {
        if (!pool.is_labeled(id)) continue;
        ++count;
        const int y = pool.revealed_label(id);
        for (std::size_t m = 0; m < classes.size(); ++m)
            if (y == classes[m]) out[m] += 1.0;
    }
    if (count > 0)
        for (auto& v : out) v /= static_cast<double>(count);
    return out;
}

}  // namespace nsal
