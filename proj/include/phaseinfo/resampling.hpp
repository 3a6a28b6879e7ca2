#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "phaseinfo/ensemble.hpp"
#include "phaseinfo/estimate.hpp"

namespace phaseinfo {

// Delete-d jackknife: each replicate deletes d = round(delete_fraction * n)
// randomly chosen items and re-evaluates the estimator on the complement.
struct JackknifePlan {
    double delete_fraction = 0.05;
    int repetitions = 3000;
    std::uint64_t seed = 0;

    void validate(int n_items) const;
    int deleted(int n_items) const;
};

// theta receives the kept item indices (sorted ascending). Replicates run in
// parallel; each derives its subset from a counter-based seed, so results do
// not depend on scheduling. std_error uses the (n-d)/d inflation factor.
EstimateWithCI jackknife(int n_items, const std::function<double(std::span<const int>)>& theta,
                         const JackknifePlan& plan);

// Convenience overload for estimators of ensemble subsets.
EstimateWithCI jackknife(const PhaseEnsemble& ens, const std::function<double(const PhaseEnsemble&)>& theta,
                         const JackknifePlan& plan);

// Mean of cos(phi) over all shots and pixels, 95% CI from the delete-d
// jackknife over shots.
EstimateWithCI coherence_factor(const PhaseEnsemble& ens, const JackknifePlan& plan = {});

struct ConvergenceRow {
    int n_samples = 0;
    double value = 0.0;
    double std_error = 0.0;
    bool converged = true;  // flagged false for n_samples <= 500
};

// Subsamples without replacement at each requested size (seeded) and
// evaluates the estimator with a jackknife at that size.
std::vector<ConvergenceRow> convergence_scan(const std::function<double(const PhaseEnsemble&)>& theta,
                                             const PhaseEnsemble& ens, std::span<const int> sizes,
                                             const JackknifePlan& plan);

// k distinct indices from [0, n), sorted ascending; deterministic in rng state.
std::vector<int> sample_without_replacement(int n, int k, std::uint64_t seed);

}  // namespace phaseinfo
