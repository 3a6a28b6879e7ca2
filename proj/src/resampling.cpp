#include "phaseinfo/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "phaseinfo/rng.hpp"

namespace phaseinfo {

void JackknifePlan::validate(int n_items) const {
    if (delete_fraction <= 0.0 || delete_fraction >= 1.0)
        throw ValidationError("delete_fraction must be in (0, 1)");
    if (repetitions < 2) throw ValidationError("jackknife needs at least 2 repetitions");
    if (deleted(n_items) < 1) throw InsufficientSamples("delete-d jackknife requires d >= 1");
}

int JackknifePlan::deleted(int n_items) const {
    return static_cast<int>(std::lround(delete_fraction * n_items));
}

std::vector<int> sample_without_replacement(int n, int k, std::uint64_t seed) {
    Rng rng(seed);
    // partial Fisher-Yates on an index pool
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < k; ++i) {
        const int j = i + rng.uniform_int(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

EstimateWithCI jackknife(int n_items, const std::function<double(std::span<const int>)>& theta,
                         const JackknifePlan& plan) {
    plan.validate(n_items);
    const int d = plan.deleted(n_items);
    const int r = plan.repetitions;

    std::vector<int> all(n_items);
    std::iota(all.begin(), all.end(), 0);
    const double full = theta(all);

    std::vector<double> reps(r);
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < r; ++t) {
        const auto drop = sample_without_replacement(n_items, d, derive_seed(plan.seed, t));
        std::vector<int> keep;
        keep.reserve(n_items - d);
        std::size_t di = 0;
        for (int i = 0; i < n_items; ++i) {
            if (di < drop.size() && drop[di] == i) {
                ++di;
                continue;
            }
            keep.push_back(i);
        }
        reps[t] = theta(keep);
    }

    double mean = 0.0;
    for (double v : reps) mean += v;
    mean /= r;
    double var = 0.0;
    for (double v : reps) var += (v - mean) * (v - mean);
    var /= r;
    const double se = std::sqrt(static_cast<double>(n_items - d) / d * var);

    EstimateWithCI est = make_estimate(full, se, "jackknife", 0, n_items);
    return est;
}

EstimateWithCI jackknife(const PhaseEnsemble& ens, const std::function<double(const PhaseEnsemble&)>& theta,
                         const JackknifePlan& plan) {
    return jackknife(
        ens.n_shots, [&](std::span<const int> keep) { return theta(ens.select_shots(keep)); }, plan);
}

EstimateWithCI coherence_factor(const PhaseEnsemble& ens, const JackknifePlan& plan) {
    // per-shot mean of cos, so jackknife replicates reduce to subset means
    std::vector<double> shot_cos(ens.n_shots);
    for (int i = 0; i < ens.n_shots; ++i) {
        double acc = 0.0;
        for (int j = 0; j < ens.n_z; ++j) acc += std::cos(ens(i, j));
        shot_cos[i] = acc / ens.n_z;
    }
    auto est = jackknife(
        ens.n_shots,
        [&](std::span<const int> keep) {
            double acc = 0.0;
            for (int i : keep) acc += shot_cos[i];
            return acc / static_cast<double>(keep.size());
        },
        plan);
    est.method = "coherence_factor";
    return est;
}

std::vector<ConvergenceRow> convergence_scan(const std::function<double(const PhaseEnsemble&)>& theta,
                                             const PhaseEnsemble& ens, std::span<const int> sizes,
                                             const JackknifePlan& plan) {
    std::vector<ConvergenceRow> rows;
    rows.reserve(sizes.size());
    int counter = 0;
    for (int size : sizes) {
        if (size > ens.n_shots)
            throw InsufficientSamples("requested subsample size " + std::to_string(size) + " exceeds n_shots " +
                                      std::to_string(ens.n_shots));
        const auto pick = sample_without_replacement(ens.n_shots, size, derive_seed(plan.seed, 0x5ca1e + counter));
        const PhaseEnsemble sub = ens.select_shots(pick);
        JackknifePlan p = plan;
        p.seed = derive_seed(plan.seed, 0xc0de + counter);
        const auto est = jackknife(sub, theta, p);
        rows.push_back({size, est.value, est.std_error, size > 500});
        ++counter;
    }
    return rows;
}

}  // namespace phaseinfo
