#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "phaseinfo/ensemble.hpp"

namespace phaseinfo {

// Per-slice parameters of the interference model
//   f(x) = A exp(-(x-x0)^2 / sigma_tof^2) [1 + C cos(2 pi (x-x0)/lambda_f - phi)] + B
struct SliceParams {
    double amplitude = 100.0;  // A [counts]
    double offset = 0.0;       // B [counts]
    double contrast = 0.6;     // C in [0, 1]
    double lambda_f = 12.0;    // fringe spacing [um]
    double x0 = 0.0;           // envelope center [um]
    double sigma_tof = 15.0;   // envelope width [um]
    double phi = 0.0;          // relative phase [rad]
};

double fringe_model(double x, const SliceParams& p);

// Synthetic matter-wave interferogram: n_z slices along z, n_x transverse
// pixels. Counts are nonnegative.
struct Interferogram {
    std::vector<double> image;  // row-major n_z x n_x
    std::vector<double> x_grid; // transverse pixel centers [um]
    int n_z = 0;
    int n_x = 0;
    std::optional<std::vector<SliceParams>> truth;  // for synthetic data

    double operator()(int z, int x) const { return image[static_cast<std::size_t>(z) * n_x + x]; }
    double& operator()(int z, int x) { return image[static_cast<std::size_t>(z) * n_x + x]; }
    std::span<const double> slice(int z) const {
        return {image.data() + static_cast<std::size_t>(z) * n_x, static_cast<std::size_t>(n_x)};
    }
};

// Evaluates the model per slice, adds seeded Gaussian noise, clamps at zero.
Interferogram synthesize(const std::vector<SliceParams>& truth, const std::vector<double>& x_grid,
                         double noise_sigma, std::uint64_t seed);

struct SliceFit {
    SliceParams params;
    double covariance[7][7] = {};  // order (A, B, C, lambda_f, x0, sigma_tof, phi)
    double phi_std_error = 0.0;
    double residual_norm = 0.0;
    bool converged = false;
};

// Nonlinear least squares of the fringe model. Initial values come from
// intensity moments (envelope) and the dominant spatial-frequency component
// of the envelope-normalized signal (fringes). phi is reported in (-pi, pi].
// Throws FitDiverged, or LowContrast when the fitted C drops below 0.05 and
// the phase is unreliable.
SliceFit fit_slice(std::span<const double> counts, std::span<const double> x_grid);

struct ProfileExtraction {
    std::vector<double> phase;          // unwrapped, one value per slice
    std::vector<double> phi_std_error;  // per-slice fit errors
    std::vector<bool> interpolated;     // slices patched from neighbors
};

// Fits every slice, patches unreliable ones from their neighbors, unwraps.
// Throws TooManyBadSlices when more than 20% of the slices are unreliable.
ProfileExtraction extract_profile(const Interferogram& image);

}  // namespace phaseinfo
