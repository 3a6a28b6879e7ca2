#include "phaseinfo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phaseinfo/estimators.hpp"
#include "phaseinfo/lm.hpp"
#include "phaseinfo/rng.hpp"

namespace phaseinfo {

const char* to_string(ScanKind kind) {
    switch (kind) {
        case ScanKind::volume: return "volume";
        case ScanKind::area: return "area";
        case ScanKind::separation: return "separation";
        case ScanKind::q: return "q";
        default: return "nongauss";
    }
}

namespace {

EstimateWithCI jackknifed_mi(const PhaseEnsemble& ens, const Partition& partition, const ScanOptions& opts,
                             std::uint64_t salt) {
    const DataCloud cloud = build_cloud(ens, partition);
    JackknifePlan plan = opts.plan;
    plan.seed = derive_seed(opts.seed, salt);
    auto est = jackknife(
        cloud.n,
        [&](std::span<const int> keep) { return ksg_mutual_information(cloud.select_rows(keep), opts.k); },
        plan);
    est.method = "ksg_mi";
    est.k = opts.k;
    return est;
}

}  // namespace

ScanResult volume_scan(const PhaseEnsemble& ens, const ScanOptions& opts) {
    if (ens.n_z < 2) throw ValidationError("volume scan needs at least 2 pixels");
    ScanResult result;
    result.kind = ScanKind::volume;
    for (int b = 1; b < ens.n_z; ++b) {
        Partition part;
        for (int j = 0; j < b; ++j) part.axes_a.push_back(j);
        for (int j = b; j < ens.n_z; ++j) part.axes_b.push_back(j);
        ScanRow row;
        row.x = static_cast<double>(b) / ens.n_z;
        row.x_label = "l_over_L";
        row.partition_id = part.id();
        row.boundary_count = part.boundary_count();
        row.estimate = jackknifed_mi(ens, part, opts, b);
        result.rows.push_back(std::move(row));
    }
    result.metadata["k"] = opts.k;
    result.metadata["n_shots"] = ens.n_shots;
    return result;
}

ScanResult area_scan(const PhaseEnsemble& ens, int volume, const ScanOptions& opts) {
    if (volume < 1 || 2 * volume > ens.n_z)
        throw VolumeTooLarge("area scan needs 1 <= volume and 2*volume <= n_z");
    ScanResult result;
    result.kind = ScanKind::area;

    const bool symmetric = 2 * volume == ens.n_z;
    std::vector<int> selector(ens.n_z, 0);
    std::fill(selector.begin(), selector.begin() + volume, 1);
    std::sort(selector.begin(), selector.end());
    int salt = 0;
    // enumerate combinations via distinct permutations of the 0/1 selector
    do {
        if (symmetric && selector[0] != 1) continue;  // drop A<->B mirror duplicates
        Partition part;
        for (int j = 0; j < ens.n_z; ++j) (selector[j] ? part.axes_a : part.axes_b).push_back(j);
        ScanRow row;
        row.partition_id = part.id();
        row.boundary_count = part.boundary_count();
        row.x = row.boundary_count;
        row.x_label = "boundary_count";
        row.estimate = jackknifed_mi(ens, part, opts, 0x0a5e + salt);
        result.rows.push_back(std::move(row));
        ++salt;
    } while (std::next_permutation(selector.begin(), selector.end()));

    std::stable_sort(result.rows.begin(), result.rows.end(),
                     [](const ScanRow& l, const ScanRow& r) { return l.boundary_count < r.boundary_count; });
    result.metadata["k"] = opts.k;
    result.metadata["volume"] = volume;
    result.metadata["n_shots"] = ens.n_shots;
    return result;
}

ScanResult separation_scan(const PhaseEnsemble& ens, int block, const ScanOptions& opts) {
    if (block < 1 || 2 * block > ens.n_z)
        throw BlockTooLarge("separation scan needs 1 <= block and 2*block <= n_z");
    ScanResult result;
    result.kind = ScanKind::separation;

    for (int d = 0; d + 2 * block <= ens.n_z; ++d) {
        const int extent = 2 * block + d;
        const int start = (ens.n_z - extent) / 2;  // center the pair on the grid
        // block means as a 2D cloud, mirroring the coarse-grained subsystems
        DataCloud cloud = make_cloud(ens.n_shots, 2, 1);
        for (int i = 0; i < ens.n_shots; ++i) {
            double a = 0.0, b = 0.0;
            for (int j = 0; j < block; ++j) {
                a += ens(i, start + j);
                b += ens(i, start + block + d + j);
            }
            cloud(i, 0) = a / block;
            cloud(i, 1) = b / block;
        }
        cloud.compute_scale();

        JackknifePlan plan = opts.plan;
        plan.seed = derive_seed(opts.seed, 0xd15 + d);
        ScanRow row;
        row.estimate = jackknife(
            cloud.n,
            [&](std::span<const int> keep) { return ksg_mutual_information(cloud.select_rows(keep), opts.k); },
            plan);
        row.estimate.method = "ksg_mi";
        row.estimate.k = opts.k;
        row.x = d * ens.dz;
        row.x_label = "separation_um";
        row.partition_id = "blocks@" + std::to_string(start + 1) + "+" + std::to_string(start + block + d + 1);
        result.rows.push_back(std::move(row));
    }
    result.metadata["k"] = opts.k;
    result.metadata["block"] = block;
    result.metadata["n_shots"] = ens.n_shots;
    return result;
}

ScanResult q_scan(std::span<const std::pair<double, const PhaseEnsemble*>> ensembles, const ScanOptions& opts) {
    ScanResult result;
    result.kind = ScanKind::q;
    int salt = 0;
    for (const auto& [q, ens] : ensembles) {
        Partition part;
        for (int j = 0; j + 1 < ens->n_z; ++j) part.axes_a.push_back(j);
        part.axes_b.push_back(ens->n_z - 1);
        ScanRow row;
        row.x = q;
        row.x_label = "q";
        row.partition_id = part.id();
        row.boundary_count = part.boundary_count();
        row.estimate = jackknifed_mi(*ens, part, opts, 0x9c + salt);
        result.rows.push_back(std::move(row));
        ++salt;
    }
    result.metadata["k"] = opts.k;
    return result;
}

ScanResult nongauss_scan(std::span<const PhaseEnsemble* const> ensembles, const ScanOptions& opts) {
    ScanResult result;
    result.kind = ScanKind::nongauss;
    int salt = 0;
    for (const PhaseEnsemble* ens : ensembles) {
        Partition part;  // full grid; the KL estimator only needs the joint cloud
        for (int j = 0; j + 1 < ens->n_z; ++j) part.axes_a.push_back(j);
        part.axes_b.push_back(ens->n_z - 1);
        const DataCloud cloud = build_cloud(*ens, part);

        JackknifePlan plan = opts.plan;
        plan.seed = derive_seed(opts.seed, 0x2e11 + salt);
        const std::uint64_t gauss_seed = derive_seed(opts.seed, 0x6a05 + salt);
        ScanRow row;
        row.estimate = jackknife(
            cloud.n,
            [&](std::span<const int> keep) {
                // fresh Gaussian draw per replicate, keyed on the subset
                std::uint64_t key = keep.size();
                for (int idx : keep) key = splitmix64(key ^ static_cast<std::uint64_t>(idx));
                return kl_to_nearest_gaussian(cloud.select_rows(keep), opts.k, derive_seed(gauss_seed, key));
            },
            plan);
        row.estimate.method = "kl_nearest_gaussian";
        row.estimate.k = opts.k;

        JackknifePlan cp = opts.plan;
        cp.seed = derive_seed(opts.seed, 0xc0 + salt);
        const EstimateWithCI coh = coherence_factor(*ens, cp);
        row.x = coh.value;
        row.x_label = "coherence";
        result.rows.push_back(std::move(row));
        ++salt;
    }
    result.metadata["k"] = opts.k;
    return result;
}

ExpFit fit_exponential(std::span<const FitPoint> points) {
    if (points.size() < 4) throw ValidationError("exponential fit needs at least 4 points");
    double ymin = points[0].y, ymax = points[0].y, xmin = points[0].x, xmax = points[0].x;
    for (const auto& p : points) {
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
    }
    if (ymax - ymin <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(ymax), 1.0))
        throw DegenerateData("all values equal within machine epsilon; decay length unidentifiable");

    Eigen::VectorXd x0(3);
    x0 << ymax - ymin, (xmax - xmin) / 3.0, ymin;  // (a, ell, b)
    Eigen::VectorXd weights(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        weights(i) = points[i].std_error > 0.0 ? 1.0 / (points[i].std_error * points[i].std_error) : 1.0;

    auto residuals = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(points.size());
        const double ell = std::abs(p(1));
        for (std::size_t i = 0; i < points.size(); ++i)
            r(i) = p(0) * std::exp(-points[i].x / ell) + p(2) - points[i].y;
        return r;
    };

    LmOptions lm;
    const LmResult res = levenberg_marquardt(residuals, x0, weights, lm);
    if (!res.converged) throw FitDiverged("exponential fit did not converge");

    ExpFit fit;
    fit.a = res.params(0);
    fit.ell = std::abs(res.params(1));
    fit.b = res.params(2);
    fit.residual_norm = res.residual_norm;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) fit.covariance[r][c] = res.covariance(r, c);
    return fit;
}

EstimateWithCI match_simulation(const EstimateWithCI& target_coherence, double lambda_t,
                                const std::function<EstimateWithCI(const PhaseEnsemble&)>& quantity,
                                std::span<const double> q_grid, const MatchOptions& opts) {
    if (q_grid.size() < 2) throw ValidationError("match needs a q grid of at least 2 nodes");

    struct Node {
        double coherence;
        double coherence_se;
        EstimateWithCI value;
    };
    std::vector<Node> nodes;
    nodes.reserve(q_grid.size());
    for (std::size_t i = 0; i < q_grid.size(); ++i) {
        const SGParams p = make_sg_params(q_grid[i], lambda_t);
        const PhaseEnsemble ens = simulate_pipeline(p, opts.n_samples, derive_seed(opts.seed, i), opts.pipeline);
        JackknifePlan cp = opts.plan;
        cp.seed = derive_seed(opts.seed, 0xce + i);
        const EstimateWithCI coh = coherence_factor(ens, cp);
        nodes.push_back({coh.value, coh.std_error, quantity(ens)});
    }

    const double c = target_coherence.value;
    double cmin = nodes[0].coherence, cmax = nodes[0].coherence;
    for (const auto& n : nodes) {
        cmin = std::min(cmin, n.coherence);
        cmax = std::max(cmax, n.coherence);
    }
    if (c < cmin || c > cmax) throw OutOfRange("target coherence outside simulated curve range");

    // bracketing interval along the (monotone in q) coherence axis
    std::size_t i = 0;
    while (i + 2 < nodes.size() && nodes[i + 1].coherence < c) ++i;
    const Node& n0 = nodes[i];
    const Node& n1 = nodes[i + 1];
    const double t = (c - n0.coherence) / (n1.coherence - n0.coherence);

    const double value = (1.0 - t) * n0.value.value + t * n1.value.value;
    const double jk_se = (1.0 - t) * n0.value.std_error + t * n1.value.std_error;
    const double spread = std::min(t, 1.0 - t) * std::abs(n1.value.value - n0.value.value);
    const double slope = (n1.value.value - n0.value.value) / (n1.coherence - n0.coherence);
    const double target_se = std::abs(slope) * target_coherence.std_error;
    const double se = std::sqrt(jk_se * jk_se + spread * spread + target_se * target_se);

    EstimateWithCI est = make_estimate(value, se, "match_simulation", n0.value.k, opts.n_samples);
    est.units = n0.value.units;
    return est;
}

}  // namespace phaseinfo
