#include "phaseinfo/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "phaseinfo/rng.hpp"

namespace phaseinfo {

double digamma(double x) {
    if (!(x > 0.0)) throw DomainError("digamma requires x > 0");
    double acc = 0.0;
    while (x < 10.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // psi(x) ~ ln x - 1/(2x) - sum B_2n / (2n x^2n), truncated after B14;
    // remainder < 5e-17 for x >= 10
    const double series =
        inv2 * (1.0 / 12 -
                inv2 * (1.0 / 120 -
                        inv2 * (1.0 / 252 -
                                inv2 * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12))))));
    return acc + std::log(x) - 0.5 * inv - series;
}

namespace {

DataCloud prepare(const DataCloud& cloud, const EstimatorOptions& opt, DataCloud& storage) {
    if (!opt.jitter) return cloud;
    storage = jitter_cloud(cloud, opt.jitter_seed);
    return storage;
}

[[noreturn]] void throw_duplicates(const DataCloud& cloud, int i) {
    if (auto pair = find_duplicate_pair(cloud))
        throw DuplicatePoints("coincident points at shots " + std::to_string(pair->first) + " and " +
                              std::to_string(pair->second) + "; enable jitter or deduplicate");
    throw DuplicatePoints("zero k-th neighbor distance at shot " + std::to_string(i));
}

}  // namespace

double ksg_mutual_information(const DataCloud& input, int k, const EstimatorOptions& opt) {
    DataCloud storage;
    const DataCloud& cloud = prepare(input, opt, storage);
    const int n = cloud.n;
    if (n < k + 1) throw KTooLarge("KSG needs n >= k+1");
    if (cloud.d_a < 1 || cloud.d_b() < 1) throw ValidationError("KSG needs nonempty A and B axis groups");

    NeighborIndex index(cloud, opt.index);
    std::vector<int> na(n), nb(n);
    int zero_at = -1;
#pragma omp parallel for schedule(dynamic, 64)
    for (int i = 0; i < n; ++i) {
        const double eps = index.kth_neighbor_distance(i, k);
        if (eps == 0.0) {
#pragma omp critical
            zero_at = i;
            continue;
        }
        na[i] = index.count_within_subspace(i, eps, Subspace::a);
        nb[i] = index.count_within_subspace(i, eps, Subspace::b);
    }
    if (zero_at >= 0) throw_duplicates(cloud, zero_at);

    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += digamma(na[i]) + digamma(nb[i]);
    return digamma(k) + digamma(n) - acc / n;
}

NearestGaussian fit_nearest_gaussian(const DataCloud& cloud) {
    const int n = cloud.n;
    const int d = cloud.d;
    if (n < d + 1) throw InsufficientSamples("covariance fit needs n >= d+1");

    NearestGaussian model;
    model.d = d;
    model.mean.assign(d, 0.0);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < d; ++a) model.mean[a] += cloud(i, a);
    for (double& m : model.mean) m /= n;

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd r(d);
        for (int a = 0; a < d; ++a) r(a) = cloud(i, a) - model.mean[a];
        cov.noalias() += r * r.transpose();
    }
    cov /= (n - 1);

    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw SingularCovariance("sample covariance not positive definite (degenerate or duplicated axes?)");
    const Eigen::MatrixXd l = llt.matrixL();
    const double scale = cov.diagonal().maxCoeff();
    for (int i = 0; i < d; ++i)
        if (!(l(i, i) * l(i, i) > 1e-12 * scale))
            throw SingularCovariance("sample covariance numerically rank deficient at axis " + std::to_string(i));

    model.covariance.resize(static_cast<std::size_t>(d) * d);
    model.factor.resize(static_cast<std::size_t>(d) * d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            model.covariance[static_cast<std::size_t>(r) * d + c] = cov(r, c);
            model.factor[static_cast<std::size_t>(r) * d + c] = l(r, c);
        }
    return model;
}

std::vector<double> sample_gaussian(const NearestGaussian& model, int n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("sample_gaussian needs n >= 1");
    const int d = model.d;
    std::vector<double> out(static_cast<std::size_t>(n) * d);
    Rng rng(derive_seed(seed, 0x9a55));
    std::vector<double> z(d);
    for (int i = 0; i < n; ++i) {
        for (int a = 0; a < d; ++a) z[a] = rng.normal();
        for (int r = 0; r < d; ++r) {
            double acc = model.mean[r];
            for (int c = 0; c <= r; ++c) acc += model.factor[static_cast<std::size_t>(r) * d + c] * z[c];
            out[static_cast<std::size_t>(i) * d + r] = acc;
        }
    }
    return out;
}

double kl_to_nearest_gaussian(const DataCloud& input, int k, std::uint64_t seed, const EstimatorOptions& opt) {
    DataCloud storage;
    const DataCloud& cloud = prepare(input, opt, storage);
    const int n = cloud.n;
    const int d = cloud.d;
    if (n < k + 1) throw KTooLarge("KL estimator needs n >= k+1");

    const NearestGaussian model = fit_nearest_gaussian(cloud);
    DataCloud gauss = make_cloud(n, d, cloud.d_a);
    gauss.points = sample_gaussian(model, n, seed);
    gauss.compute_scale();

    const NeighborIndex data_index(cloud, opt.index);
    std::vector<double> log_ratio(n);
    int zero_at = -1;
#pragma omp parallel for schedule(dynamic, 64)
    for (int i = 0; i < n; ++i) {
        const double rho = data_index.kth_neighbor_distance(i, k);
        if (rho == 0.0) {
#pragma omp critical
            zero_at = i;
            continue;
        }
        log_ratio[i] = -std::log(rho);
    }
    if (zero_at >= 0) throw_duplicates(cloud, zero_at);

    // cross-set distances: k-th neighbor of each data point among the
    // Gaussian samples (no self to exclude)
    const NeighborIndex gauss_index(gauss, opt.index);
    std::vector<double> nu(n);
#pragma omp parallel for schedule(dynamic, 64)
    for (int i = 0; i < n; ++i) {
        nu[i] = gauss_index.kth_distance_from(cloud.point(i), k);
    }
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += std::log(nu[i]) + log_ratio[i];
    return std::log(static_cast<double>(n) / (n - 1)) + static_cast<double>(d) / n * acc;
}

double differential_entropy(const DataCloud& input, int k, const EstimatorOptions& opt) {
    DataCloud storage;
    const DataCloud& cloud = prepare(input, opt, storage);
    const int n = cloud.n;
    if (n < k + 1) throw KTooLarge("entropy estimator needs n >= k+1");

    NeighborIndex index(cloud, opt.index);
    std::vector<double> log_eps(n);
    int zero_at = -1;
#pragma omp parallel for schedule(dynamic, 64)
    for (int i = 0; i < n; ++i) {
        const double eps = index.kth_neighbor_distance(i, k);
        if (eps == 0.0) {
#pragma omp critical
            zero_at = i;
            continue;
        }
        log_eps[i] = std::log(eps);
    }
    if (zero_at >= 0) throw_duplicates(cloud, zero_at);

    double acc = 0.0;
    for (double v : log_eps) acc += v;
    // max-norm ball of radius eps has volume (2 eps)^D
    return digamma(n) - digamma(k) + cloud.d * std::numbers::ln2 + cloud.d * acc / n;
}

}  // namespace phaseinfo
