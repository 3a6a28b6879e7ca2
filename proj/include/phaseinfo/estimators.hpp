#pragma once

#include <cstdint>
#include <vector>

#include "phaseinfo/ensemble.hpp"
#include "phaseinfo/estimate.hpp"
#include "phaseinfo/knn.hpp"

namespace phaseinfo {

// digamma to <= 1e-12 absolute error (recurrence lift + asymptotic series)
double digamma(double x);

struct EstimatorOptions {
    IndexKind index = IndexKind::kdtree;
    bool jitter = false;           // opt-in deterministic tie breaking
    std::uint64_t jitter_seed = 0;
};

// Kraskov-Stoegbauer-Grassberger mutual information (their first variant) in
// nats. Joint k-th neighbor distances in max-norm; subspace counts are strict
// (points exactly at the distance excluded) and include the point itself.
// Estimates may be slightly negative; they are never clamped.
double ksg_mutual_information(const DataCloud& cloud, int k, const EstimatorOptions& opt = {});

// Gaussian with the same mean and covariance as the data.
struct NearestGaussian {
    std::vector<double> mean;        // D
    std::vector<double> covariance;  // D x D row-major, unbiased sample covariance
    std::vector<double> factor;      // D x D lower-triangular Cholesky factor
    int d = 0;
};

NearestGaussian fit_nearest_gaussian(const DataCloud& cloud);

// n x D samples, bit-reproducible for a given seed
std::vector<double> sample_gaussian(const NearestGaussian& model, int n, std::uint64_t seed);

// kNN relative entropy between the data and its nearest Gaussian [nats]:
//   ln(N/(N-1)) + (D/N) sum_i ln(nu_i / rho_i)
// rho_i: k-th neighbor of i within the data (self excluded); nu_i: k-th
// neighbor of i among N fresh Gaussian samples. Max-norm throughout.
double kl_to_nearest_gaussian(const DataCloud& cloud, int k, std::uint64_t seed,
                              const EstimatorOptions& opt = {});

// Kozachenko-Leonenko differential entropy [nats], max-norm metric.
double differential_entropy(const DataCloud& cloud, int k, const EstimatorOptions& opt = {});

}  // namespace phaseinfo
