#include "phaseinfo/fringe.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "phaseinfo/lm.hpp"
#include "phaseinfo/rng.hpp"

namespace phaseinfo {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double fringe_model(double x, const SliceParams& p) {
    const double u = (x - p.x0) / p.sigma_tof;
    const double envelope = p.amplitude * std::exp(-u * u);
    return envelope * (1.0 + p.contrast * std::cos(kTwoPi * (x - p.x0) / p.lambda_f - p.phi)) + p.offset;
}

Interferogram synthesize(const std::vector<SliceParams>& truth, const std::vector<double>& x_grid,
                         double noise_sigma, std::uint64_t seed) {
    if (truth.empty() || x_grid.size() < 8) throw ValidationError("synthesize needs slices and >= 8 pixels");
    for (const auto& p : truth)
        if (p.sigma_tof <= 0.0 || p.lambda_f <= 0.0 || p.contrast < 0.0 || p.contrast > 1.0)
            throw ValidationError("invalid slice parameters");

    Interferogram img;
    img.n_z = static_cast<int>(truth.size());
    img.n_x = static_cast<int>(x_grid.size());
    img.x_grid = x_grid;
    img.image.resize(static_cast<std::size_t>(img.n_z) * img.n_x);
    img.truth = truth;
    for (int z = 0; z < img.n_z; ++z) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(z)));
        for (int x = 0; x < img.n_x; ++x) {
            double v = fringe_model(x_grid[x], truth[z]);
            if (noise_sigma > 0.0) v += rng.normal(0.0, noise_sigma);
            img(z, x) = std::max(0.0, v);
        }
    }
    return img;
}

namespace {

// dominant nonzero spatial frequency of the envelope-normalized signal;
// returns (frequency, complex amplitude) with amplitude relative to the
// envelope weight
struct FringeGuess {
    double frequency = 0.0;
    double contrast = 0.0;
    double phi = 0.0;
};

FringeGuess dominant_fringe(std::span<const double> counts, std::span<const double> x,
                            double x0, double sigma, double amplitude, double offset) {
    const int n = static_cast<int>(counts.size());
    std::vector<double> signal(n), weight(n);
    double wsum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = (x[i] - x0) / sigma;
        const double env = amplitude * std::exp(-u * u);
        weight[i] = env;  // suppress the tails where normalization blows up
        signal[i] = env > 1e-12 * amplitude ? (counts[i] - offset - env) / env : 0.0;
        wsum += weight[i];
    }
    const double span = x.back() - x.front();
    const double dx = span / (n - 1);
    FringeGuess best;
    double best_mag = -1.0;
    // frequency scan up to Nyquist at resolution 1/(2 span)
    const int n_freq = 2 * n;
    for (int f = 1; f <= n_freq; ++f) {
        const double freq = 0.5 * f / span;
        if (freq > 0.5 / dx) break;
        std::complex<double> acc(0.0, 0.0);
        for (int i = 0; i < n; ++i) {
            const double arg = kTwoPi * freq * (x[i] - x0);
            acc += weight[i] * signal[i] * std::complex<double>(std::cos(arg), -std::sin(arg));
        }
        if (std::abs(acc) > best_mag) {
            best_mag = std::abs(acc);
            best.frequency = freq;
            best.contrast = 2.0 * std::abs(acc) / wsum;
            best.phi = -std::arg(acc);
        }
    }
    return best;
}

}  // namespace

SliceFit fit_slice(std::span<const double> counts, std::span<const double> x_grid) {
    const int n = static_cast<int>(counts.size());
    if (n < 8 || counts.size() != x_grid.size()) throw ValidationError("fit_slice needs >= 8 pixels");

    // envelope moments
    double lo = counts[0];
    double hi = counts[0];
    for (double c : counts) {
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    double wsum = 0.0, mean = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = std::max(0.0, counts[i] - lo);
        wsum += w;
        mean += w * x_grid[i];
    }
    if (wsum <= 0.0) throw FitDiverged("flat slice, no envelope");
    mean /= wsum;
    double m2 = 0.0;
    for (int i = 0; i < n; ++i)
        m2 += std::max(0.0, counts[i] - lo) * (x_grid[i] - mean) * (x_grid[i] - mean);
    m2 /= wsum;
    // Gaussian exp(-u^2) has second moment sigma^2/2
    const double sigma0 = std::max(2.0 * (x_grid[1] - x_grid[0]), std::sqrt(2.0 * m2));
    const double amp0 = std::max(hi - lo, 1e-12);

    const FringeGuess guess = dominant_fringe(counts, x_grid, mean, sigma0, amp0, lo);

    Eigen::VectorXd p0(7);
    p0 << amp0, lo, std::clamp(guess.contrast, 0.02, 1.0), 1.0 / std::max(guess.frequency, 1e-6), mean, sigma0,
        guess.phi;

    auto residuals = [&](const Eigen::VectorXd& p) {
        SliceParams sp;
        sp.amplitude = p(0);
        sp.offset = p(1);
        sp.contrast = p(2);
        sp.lambda_f = p(3);
        sp.x0 = p(4);
        sp.sigma_tof = p(5);
        sp.phi = p(6);
        Eigen::VectorXd r(n);
        for (int i = 0; i < n; ++i) r(i) = fringe_model(x_grid[i], sp) - counts[i];
        return r;
    };

    LmOptions lm;
    lm.scale_covariance = true;  // unweighted fit, scale by reduced chi-square
    const LmResult res = levenberg_marquardt(residuals, p0, Eigen::VectorXd::Ones(n), lm);

    SliceFit fit;
    fit.converged = res.converged;
    fit.residual_norm = res.residual_norm;
    fit.params.amplitude = res.params(0);
    fit.params.offset = res.params(1);
    fit.params.contrast = res.params(2);
    fit.params.lambda_f = res.params(3);
    fit.params.x0 = res.params(4);
    fit.params.sigma_tof = std::abs(res.params(5));
    fit.params.phi = res.params(6);

    // canonical parameter signs: C >= 0, lambda_f > 0, phi in (-pi, pi]
    if (fit.params.lambda_f < 0.0) {
        fit.params.lambda_f = -fit.params.lambda_f;
        fit.params.phi = -fit.params.phi;
    }
    if (fit.params.contrast < 0.0) {
        fit.params.contrast = -fit.params.contrast;
        fit.params.phi += kPi;
    }
    fit.params.phi = wrap_phase(fit.params.phi);

    for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 7; ++c) fit.covariance[r][c] = res.covariance(r, c);
    fit.phi_std_error = std::sqrt(std::max(0.0, res.covariance(6, 6)));

    if (!res.converged) throw FitDiverged("slice fit did not converge");
    if (fit.params.contrast < 0.05)
        throw LowContrast("fitted contrast " + std::to_string(fit.params.contrast) + " below 0.05");
    return fit;
}

ProfileExtraction extract_profile(const Interferogram& image) {
    const int nz = image.n_z;
    ProfileExtraction out;
    out.phase.assign(nz, 0.0);
    out.phi_std_error.assign(nz, 0.0);
    out.interpolated.assign(nz, false);

    std::vector<double> wrapped(nz, 0.0);
    std::vector<bool> bad(nz, false);
#pragma omp parallel for schedule(dynamic)
    for (int z = 0; z < nz; ++z) {
        try {
            const SliceFit fit = fit_slice(image.slice(z), image.x_grid);
            wrapped[z] = fit.params.phi;
            out.phi_std_error[z] = fit.phi_std_error;
        } catch (const NumericalError&) {
            bad[z] = true;
        }
    }

    int n_bad = 0;
    for (bool b : bad) n_bad += b;
    if (n_bad > nz / 5)
        throw TooManyBadSlices(std::to_string(n_bad) + " of " + std::to_string(nz) + " slices unreliable");

    // patch unreliable slices by circular interpolation between the nearest
    // good neighbors
    for (int z = 0; z < nz; ++z) {
        if (!bad[z]) continue;
        int l = z - 1, r = z + 1;
        while (l >= 0 && bad[l]) --l;
        while (r < nz && bad[r]) ++r;
        if (l < 0 && r >= nz) throw TooManyBadSlices("no reliable slices to interpolate from");
        if (l < 0) {
            wrapped[z] = wrapped[r];
        } else if (r >= nz) {
            wrapped[z] = wrapped[l];
        } else {
            const double t = static_cast<double>(z - l) / (r - l);
            const double diff = wrap_phase(wrapped[r] - wrapped[l]);
            wrapped[z] = wrap_phase(wrapped[l] + t * diff);
        }
        out.interpolated[z] = true;
        out.phi_std_error[z] = 0.0;
    }

    out.phase = unwrap_profile(wrapped);
    return out;
}

}  // namespace phaseinfo
