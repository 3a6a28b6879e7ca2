#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "phaseinfo/ensemble.hpp"
#include "phaseinfo/estimate.hpp"
#include "phaseinfo/resampling.hpp"
#include "phaseinfo/sgsim.hpp"

namespace phaseinfo {

enum class ScanKind { volume, area, separation, q, nongauss };

const char* to_string(ScanKind kind);

struct ScanRow {
    double x = 0.0;            // scan coordinate (l/L, boundary count, d [um], q, coherence)
    std::string x_label;       // what x means
    std::string partition_id;  // disambiguates same-x realizations
    int boundary_count = -1;
    EstimateWithCI estimate;
};

struct ScanResult {
    ScanKind kind = ScanKind::volume;
    std::vector<ScanRow> rows;
    Meta metadata;
};

struct ScanOptions {
    int k = 2;
    JackknifePlan plan;
    std::uint64_t seed = 0;
};

// MI(A:B) for every position of a single boundary: A = pixels 1..b, B = rest.
ScanResult volume_scan(const PhaseEnsemble& ens, const ScanOptions& opts = {});

// MI over all bipartitions with |A| = volume, B the complement (A fixed to
// contain pixel 1 when |A| = |B| to drop mirrored duplicates), grouped by
// boundary count.
ScanResult area_scan(const PhaseEnsemble& ens, int volume, const ScanOptions& opts = {});

// MI between two `block`-pixel averages separated by d fine pixels, d swept
// from 0 to n_z - 2*block; the pair is centered on the grid. Expects the
// fine (pre-coarse-graining) ensemble.
ScanResult separation_scan(const PhaseEnsemble& ens, int block = 5, const ScanOptions& opts = {});

// MI(A : B={last pixel}) per simulated ensemble, x = q.
ScanResult q_scan(std::span<const std::pair<double, const PhaseEnsemble*>> ensembles,
                  const ScanOptions& opts = {});

// Relative entropy to the nearest Gaussian of the full-grid cloud per
// ensemble, x = that ensemble's coherence factor.
ScanResult nongauss_scan(std::span<const PhaseEnsemble* const> ensembles, const ScanOptions& opts = {});

// a * exp(-d / ell) + b fitted by weighted least squares (weights 1/stderr^2).
struct ExpFit {
    double a = 0.0;
    double b = 0.0;
    double ell = 0.0;          // decay length, same unit as d
    double covariance[3][3] = {};  // order (a, ell, b)
    double residual_norm = 0.0;
};

struct FitPoint {
    double x = 0.0;
    double y = 0.0;
    double std_error = 0.0;
};

ExpFit fit_exponential(std::span<const FitPoint> points);

// Evaluates `quantity` on ensembles simulated over the q grid and linearly
// interpolates value and error to the target coherence. The total CI combines
// the jackknife error, the interpolation spread between bracketing nodes, and
// the target-coherence CI (through the local slope) in quadrature.
struct MatchOptions {
    int n_samples = 2000;
    std::uint64_t seed = 0;
    JackknifePlan plan;
    PipelineOptions pipeline;
};

EstimateWithCI match_simulation(const EstimateWithCI& target_coherence, double lambda_t,
                                const std::function<EstimateWithCI(const PhaseEnsemble&)>& quantity,
                                std::span<const double> q_grid, const MatchOptions& opts = {});

}  // namespace phaseinfo
