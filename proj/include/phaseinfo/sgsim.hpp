#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "phaseinfo/ensemble.hpp"
#include "phaseinfo/estimate.hpp"
#include "phaseinfo/resampling.hpp"

namespace phaseinfo {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;     // J s
inline constexpr double k_boltzmann = 1.380649e-23; // J / K
inline constexpr double mass_rb87 = 1.4431606e-25;  // kg
}  // namespace constants

// Parameters of the classical-thermal sine-Gordon measure for the relative
// phase of two tunnel-coupled 1D quasicondensates. The phase marginal is
// governed by two length scales: the thermal coherence length lambda_T =
// 2 hbar^2 n_1d / (m kB T) and the coupling length ell_J^2 = hbar / (4 m J),
// combined into q = lambda_T / ell_J.
struct SGParams {
    double lambda_t = 15.0;  // um
    double ell_j = 7.5;      // um; +inf for the massless theory
    double q = 2.0;          // lambda_t / ell_j
    double length = 120.0;   // um
    int n_grid = 150;        // simulation grid points spanning [0, length]
    double sigma_psf = 3.0;  // um
    double n_1d = 70.0;      // um^-1
    double g_1d = 0.0;       // J um; density sector coupling, housed but unused here
    double tunnel_j = 0.0;   // s^-1, consistent with ell_j
    double temperature = 0.0;  // nK, consistent with lambda_t

    double dz() const { return length / (n_grid - 1); }
    void validate() const;
};

// Fills the derived physical fields (ell_j, tunnel_j, temperature) from
// (q, lambda_t) using the 87Rb constants.
SGParams make_sg_params(double q, double lambda_t, double length = 120.0, int n_grid = 150,
                        double sigma_psf = 3.0, double n_1d = 70.0);

// Dimensionless Boltzmann exponent beta*H[phi] of the phase marginal:
//   sum_bonds (lambda_T/8) (dphi)^2 / dz  +  dz (q^2 / 4 lambda_T) sum'_sites (1 - cos phi)
// where sum' carries trapezoid weights (endpoints half). Minimum at phi = 0.
double dimensionless_action(std::span<const double> profile, const SGParams& params);

// One spatial step of the thermal measure, discretized on a phi grid of M
// points spanning [-W pi, W pi] with trapezoidal quadrature weights:
//   K(a,b) = exp[ -(lambda_T/8)(a-b)^2/dz - dz (q^2/8 lambda_T)((1-cos a)+(1-cos b)) ]
struct TransferOperator {
    std::vector<double> phi_grid;  // M values
    std::vector<double> weights;   // trapezoid quadrature weights
    std::vector<double> kernel;    // M x M, row-major
    double step = 0.0;             // dz [um]
    int m = 0;
    int windings = 0;

    double cell() const { return phi_grid[1] - phi_grid[0]; }
};

TransferOperator build_transfer_operator(const SGParams& params, int m = 512, int windings = 8);

// Forward-filter/backward-sampling along z: right cumulative vectors
// v_j = K (w v_{j+1}) with a free right boundary, site 1 drawn from the
// central 2pi period of v_1 (gauge choice for the zero mode; the measure is
// 2pi-translation invariant and a full-window draw would let long massless
// walks feel the window edges), then phi_{j+1} | phi_j from K(phi_j, .) w v_{j+1}.
// Grid-cell sampling with within-cell uniform dithering; deterministic per seed.
PhaseEnsemble sample_transfer(const SGParams& params, const TransferOperator& op, int n_samples,
                              std::uint64_t seed);

// Single-site random-walk Metropolis targeting exp(-beta H), free endpoints.
// Runs n_chains independent chains (counter-seeded, parallelizable); each
// burns in, then emits every `thinning` sweeps. The proposal width adapts
// during the first half of burn-in and is frozen afterwards.
struct McmcOptions {
    int burn_in = 30000;  // sweeps; kink equilibration is slow (tau ~ 10^3 sweeps)
    int thinning = 25;    // sweeps between emitted samples
    double proposal_width = 1.3;
    int n_chains = 16;    // shots come in contiguous per-chain blocks
};

PhaseEnsemble sample_metropolis(const SGParams& params, int n_samples, std::uint64_t seed,
                                const McmcOptions& mcmc = {});

// Per-shot Gaussian convolution along z, mirror boundaries; sigma in um.
PhaseEnsemble apply_psf(const PhaseEnsemble& ens, double sigma);

// Linear interpolation onto n_pixels cell centers spanning the same extent.
PhaseEnsemble interp_to_pixels(const PhaseEnsemble& ens, int n_pixels);

struct PipelineOptions {
    int n_pixels = 60;
    double central_fraction = 0.5;
    int coarse_nz = 6;
    int operator_m = 512;
    int operator_windings = 8;
};

// sample (n_grid over [0, L]) -> interpolate to 60 pixels -> PSF -> central
// 50% -> offset reduction -> coarse grain to 6. Meta records every stage.
PhaseEnsemble simulate_pipeline(const SGParams& params, int n_samples, std::uint64_t seed,
                                const PipelineOptions& opts = {});

struct CoherencePoint {
    double q = 0.0;
    EstimateWithCI coherence;
};

using CoherenceCurve = std::vector<CoherencePoint>;

// simulate_pipeline per q; the resulting coherence table must be monotone in
// q beyond CI overlap, else NonMonotoneCurve (insufficient statistics).
CoherenceCurve coherence_curve(double lambda_t, std::span<const double> q_grid, int n_samples,
                               std::uint64_t seed, const JackknifePlan& plan = {},
                               const PipelineOptions& opts = {});

struct QEstimate {
    EstimateWithCI q;
    bool extrapolation_risk = false;  // target at a curve endpoint
};

// Monotone piecewise-linear inversion of the coherence curve; the CI combines
// the input coherence CI with the curve's own CI through the local slope.
QEstimate estimate_q(const EstimateWithCI& coherence, const CoherenceCurve& curve);

}  // namespace phaseinfo
