#include "phaseinfo/sgsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "phaseinfo/rng.hpp"

namespace phaseinfo {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double lambda_t_from_temperature(double t_nk, double n_1d_per_um) {
    using namespace constants;
    const double n_m = n_1d_per_um * 1e6;
    const double t_k = t_nk * 1e-9;
    return 2.0 * hbar * hbar * n_m / (mass_rb87 * k_boltzmann * t_k) * 1e6;  // um
}

double ell_j_from_tunnel(double j_hz) {
    using namespace constants;
    return std::sqrt(hbar / (4.0 * mass_rb87 * j_hz)) * 1e6;  // um
}

}  // namespace

void SGParams::validate() const {
    if (!(length > 0.0)) throw ValidationError("system length must be positive");
    if (n_grid < 2) throw ValidationError("n_grid must be >= 2");
    if (sigma_psf < 0.0) throw ValidationError("sigma_psf must be >= 0");
    if (!(lambda_t > 0.0)) throw ValidationError("lambda_t must be positive");
    if (q < 0.0) throw ValidationError("q must be >= 0");
    if (std::isfinite(ell_j)) {
        if (std::abs(q - lambda_t / ell_j) > 1e-12 * std::max(1.0, q))
            throw ValidationError("q != lambda_t / ell_j");
        if (tunnel_j > 0.0 && std::abs(ell_j_from_tunnel(tunnel_j) - ell_j) > 1e-9 * ell_j)
            throw ValidationError("ell_j inconsistent with tunnel rate J");
    } else if (q != 0.0) {
        throw ValidationError("massless params require q == 0");
    }
    if (temperature > 0.0 &&
        std::abs(lambda_t_from_temperature(temperature, n_1d) - lambda_t) > 1e-9 * lambda_t)
        throw ValidationError("lambda_t inconsistent with temperature");
}

SGParams make_sg_params(double q, double lambda_t, double length, int n_grid, double sigma_psf, double n_1d) {
    using namespace constants;
    SGParams p;
    p.q = q;
    p.lambda_t = lambda_t;
    p.length = length;
    p.n_grid = n_grid;
    p.sigma_psf = sigma_psf;
    p.n_1d = n_1d;
    // T from lambda_T = 2 hbar^2 n / (m kB T)
    const double n_m = n_1d * 1e6;
    p.temperature = 2.0 * hbar * hbar * n_m / (mass_rb87 * k_boltzmann * (lambda_t * 1e-6)) * 1e9;  // nK
    if (q > 0.0) {
        p.ell_j = lambda_t / q;
        p.tunnel_j = hbar / (4.0 * mass_rb87 * (p.ell_j * 1e-6) * (p.ell_j * 1e-6));  // s^-1
    } else {
        p.ell_j = std::numeric_limits<double>::infinity();
        p.tunnel_j = 0.0;
    }
    p.validate();
    return p;
}

double dimensionless_action(std::span<const double> profile, const SGParams& params) {
    if (static_cast<int>(profile.size()) != params.n_grid)
        throw ValidationError("profile length does not match n_grid");
    const double dz = params.dz();
    const double kin = params.lambda_t / (8.0 * dz);
    const double pot = dz * params.q * params.q / (4.0 * params.lambda_t);
    double action = 0.0;
    for (std::size_t j = 0; j + 1 < profile.size(); ++j) {
        const double d = profile[j + 1] - profile[j];
        action += kin * d * d;
    }
    for (std::size_t j = 0; j < profile.size(); ++j) {
        const double w = (j == 0 || j + 1 == profile.size()) ? 0.5 : 1.0;
        action += w * pot * (1.0 - std::cos(profile[j]));
    }
    return action;
}

TransferOperator build_transfer_operator(const SGParams& params, int m, int windings) {
    if (m < 64) throw ValidationError("transfer operator needs M >= 64");
    if (windings < 2) throw ValidationError("transfer operator needs W >= 2");
    params.validate();

    TransferOperator op;
    op.m = m;
    op.windings = windings;
    op.step = params.dz();
    op.phi_grid.resize(m);
    op.weights.resize(m);
    const double span = 2.0 * windings * kPi;
    const double h = span / (m - 1);
    for (int i = 0; i < m; ++i) {
        op.phi_grid[i] = -windings * kPi + h * i;
        op.weights[i] = (i == 0 || i == m - 1) ? 0.5 * h : h;
    }

    const double kin = params.lambda_t / (8.0 * op.step);
    const double pot = op.step * params.q * params.q / (8.0 * params.lambda_t);
    std::vector<double> half_potential(m);
    for (int i = 0; i < m; ++i) half_potential[i] = pot * (1.0 - std::cos(op.phi_grid[i]));

    op.kernel.resize(static_cast<std::size_t>(m) * m);
#pragma omp parallel for schedule(static)
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            const double d = op.phi_grid[a] - op.phi_grid[b];
            // potential halves added first so K is symmetric bit-for-bit
            op.kernel[static_cast<std::size_t>(a) * m + b] =
                std::exp(-kin * d * d - (half_potential[a] + half_potential[b]));
        }
    return op;
}

PhaseEnsemble sample_transfer(const SGParams& params, const TransferOperator& op, int n_samples,
                              std::uint64_t seed) {
    if (n_samples < 1) throw ValidationError("n_samples must be >= 1");
    params.validate();
    const int n = params.n_grid;
    const int m = op.m;
    const double h = op.cell();

    // right cumulative vectors v_j, renormalized per step against underflow
    std::vector<std::vector<double>> v(n, std::vector<double>(m));
    std::fill(v[n - 1].begin(), v[n - 1].end(), 1.0);
    std::vector<double> wv(m);
    for (int j = n - 2; j >= 0; --j) {
        for (int b = 0; b < m; ++b) wv[b] = op.weights[b] * v[j + 1][b];
        double peak = 0.0;
#pragma omp parallel for schedule(static) reduction(max : peak)
        for (int a = 0; a < m; ++a) {
            const double* row = op.kernel.data() + static_cast<std::size_t>(a) * m;
            double acc = 0.0;
            for (int b = 0; b < m; ++b) acc += row[b] * wv[b];
            v[j][a] = acc;
            peak = std::max(peak, acc);
        }
        if (!(peak > 0.0) || !std::isfinite(peak))
            throw OperatorUnderflow("cumulative vector underflow at step " + std::to_string(j));
        for (double& x : v[j]) x /= peak;
    }

    std::vector<double> grid(n);
    for (int j = 0; j < n; ++j) grid[j] = params.length * j / (n - 1);
    PhaseEnsemble out = make_ensemble(n_samples, std::move(grid));

    // first site: central 2pi period of v_1
    int lo = 0, hi = m;
    while (op.phi_grid[lo] < -kPi) ++lo;
    while (op.phi_grid[hi - 1] > kPi) --hi;

#pragma omp parallel for schedule(static)
    for (int s = 0; s < n_samples; ++s) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
        std::vector<double> cdf(m);

        auto draw = [&](int first, int last) {
            double acc = 0.0;
            for (int b = first; b < last; ++b) {
                acc += cdf[b];
                cdf[b] = acc;
            }
            const double u = rng.uniform() * acc;
            int a = first, b = last - 1;
            while (a < b) {
                const int mid = (a + b) / 2;
                if (cdf[mid] > u)
                    b = mid;
                else
                    a = mid + 1;
            }
            return a;
        };

        for (int b = lo; b < hi; ++b) cdf[b] = op.weights[b] * v[0][b];
        int cell = draw(lo, hi);
        out(s, 0) = op.phi_grid[cell] + rng.uniform(-0.5 * h, 0.5 * h);

        for (int j = 1; j < n; ++j) {
            const double* row = op.kernel.data() + static_cast<std::size_t>(cell) * m;
            for (int b = 0; b < m; ++b) cdf[b] = row[b] * op.weights[b] * v[j][b];
            cell = draw(0, m);
            out(s, j) = op.phi_grid[cell] + rng.uniform(-0.5 * h, 0.5 * h);
        }
    }

    out.meta["source"] = "simulation";
    out.meta["sampler"] = "transfer_operator";
    out.meta["seed"] = seed;
    out.meta["q"] = params.q;
    out.meta["lambda_T_um"] = params.lambda_t;
    out.meta["L_um"] = params.length;
    out.meta["operator_m"] = op.m;
    out.meta["operator_windings"] = op.windings;
    out.append_history("sample_transfer n=" + std::to_string(n_samples));
    return out;
}

PhaseEnsemble sample_metropolis(const SGParams& params, int n_samples, std::uint64_t seed,
                                const McmcOptions& mcmc) {
    if (n_samples < 1) throw ValidationError("n_samples must be >= 1");
    params.validate();
    const int n = params.n_grid;
    const double dz = params.dz();
    const double kin = params.lambda_t / (8.0 * dz);
    const double pot = dz * params.q * params.q / (4.0 * params.lambda_t);
    const int chains = std::max(1, std::min(mcmc.n_chains, n_samples));

    std::vector<double> site_weight(n, pot);
    site_weight.front() *= 0.5;
    site_weight.back() *= 0.5;

    std::vector<double> grid(n);
    for (int j = 0; j < n; ++j) grid[j] = params.length * j / (n - 1);
    PhaseEnsemble out = make_ensemble(n_samples, std::move(grid));
    std::vector<double> acceptance(chains, 0.0);

#pragma omp parallel for schedule(dynamic)
    for (int c = 0; c < chains; ++c) {
        Rng rng(derive_seed(seed, 0xc4a1 + static_cast<std::uint64_t>(c)));
        std::vector<double> phi(n);

        // start near the target: exact massless increments for weak coupling,
        // the quadratic (Klein-Gordon) approximation otherwise; the global
        // offset is uniform over one well either way
        if (params.q < 0.5) {
            phi[0] = 0.0;
            const double sd = std::sqrt(4.0 * dz / params.lambda_t);
            for (int j = 1; j < n; ++j) phi[j] = phi[j - 1] + rng.normal(0.0, sd);
        } else {
            const double var = 2.0 / params.q;
            const double rho = std::exp(-dz / params.ell_j);
            phi[0] = rng.normal(0.0, std::sqrt(var));
            const double innovation = std::sqrt(var * (1.0 - rho * rho));
            for (int j = 1; j < n; ++j) phi[j] = rho * phi[j - 1] + rng.normal(0.0, innovation);
        }
        const double offset = rng.uniform(-kPi, kPi);
        for (double& x : phi) x += offset;

        double width = mcmc.proposal_width;
        long accepted = 0, proposed = 0;

        auto sweep = [&]() {
            for (int j = 0; j < n; ++j) {
                const double cur = phi[j];
                const double prop = cur + rng.uniform(-width, width);
                double ds = site_weight[j] * (std::cos(cur) - std::cos(prop));
                if (j > 0) {
                    const double l = phi[j - 1];
                    ds += kin * ((prop - l) * (prop - l) - (cur - l) * (cur - l));
                }
                if (j + 1 < n) {
                    const double r = phi[j + 1];
                    ds += kin * ((prop - r) * (prop - r) - (cur - r) * (cur - r));
                }
                ++proposed;
                if (ds <= 0.0 || rng.uniform() < std::exp(-ds)) {
                    phi[j] = prop;
                    ++accepted;
                }
            }
        };

        const int adapt_until = mcmc.burn_in / 2;
        for (int s = 0; s < mcmc.burn_in; ++s) {
            sweep();
            if (s < adapt_until && (s + 1) % 200 == 0) {
                const double rate = static_cast<double>(accepted) / proposed;
                if (rate < 0.35) width = std::max(0.05, width * 0.85);
                if (rate > 0.55) width = std::min(6.0, width * 1.15);
                accepted = proposed = 0;
            }
        }
        accepted = proposed = 0;

        // contiguous block of shots per chain, in temporal order
        const int base = n_samples / chains;
        const int extra = n_samples % chains;
        const int begin = c * base + std::min(c, extra);
        const int end = begin + base + (c < extra ? 1 : 0);
        for (int shot = begin; shot < end; ++shot) {
            for (int s = 0; s < mcmc.thinning; ++s) sweep();
            for (int j = 0; j < n; ++j) out(shot, j) = phi[j];
        }
        acceptance[c] = static_cast<double>(accepted) / std::max<long>(1, proposed);
    }

    double mean_acceptance = 0.0;
    for (double a : acceptance) mean_acceptance += a;
    mean_acceptance /= chains;

    out.meta["source"] = "simulation";
    out.meta["sampler"] = "metropolis";
    out.meta["seed"] = seed;
    out.meta["q"] = params.q;
    out.meta["lambda_T_um"] = params.lambda_t;
    out.meta["L_um"] = params.length;
    out.meta["acceptance_rate"] = mean_acceptance;
    out.meta["burn_in"] = mcmc.burn_in;
    out.meta["thinning"] = mcmc.thinning;
    out.meta["n_chains"] = chains;
    out.append_history("sample_metropolis n=" + std::to_string(n_samples));
    return out;
}

PhaseEnsemble apply_psf(const PhaseEnsemble& ens, double sigma) {
    if (sigma < 0.0) throw ValidationError("sigma must be >= 0");
    PhaseEnsemble out = ens;
    if (sigma > 0.0) {
        const int radius = static_cast<int>(std::ceil(4.0 * sigma / ens.dz));
        std::vector<double> kernel(2 * radius + 1);
        double norm = 0.0;
        for (int t = -radius; t <= radius; ++t) {
            const double x = t * ens.dz / sigma;
            kernel[t + radius] = std::exp(-0.5 * x * x);
            norm += kernel[t + radius];
        }
        for (double& k : kernel) k /= norm;

        const int nz = ens.n_z;
#pragma omp parallel for schedule(static)
        for (int i = 0; i < ens.n_shots; ++i)
            for (int j = 0; j < nz; ++j) {
                double acc = 0.0;
                for (int t = -radius; t <= radius; ++t) {
                    int idx = j + t;  // mirror about the edge pixels
                    while (idx < 0 || idx >= nz) idx = idx < 0 ? -idx : 2 * (nz - 1) - idx;
                    acc += kernel[t + radius] * ens(i, idx);
                }
                out(i, j) = acc;
            }
    }
    out.append_history("apply_psf sigma=" + std::to_string(sigma));
    return out;
}

PhaseEnsemble interp_to_pixels(const PhaseEnsemble& ens, int n_pixels) {
    if (n_pixels < 1) throw ValidationError("n_pixels must be >= 1");
    const double z0 = ens.grid.front();
    const double span = ens.grid.back() - ens.grid.front();
    const double pitch = span / n_pixels;
    std::vector<double> grid(n_pixels);
    for (int j = 0; j < n_pixels; ++j) grid[j] = z0 + (j + 0.5) * pitch;

    PhaseEnsemble out = make_ensemble(ens.n_shots, std::move(grid), ens.meta);
    for (int j = 0; j < n_pixels; ++j) {
        const double z = out.grid[j];
        const auto it = std::upper_bound(ens.grid.begin(), ens.grid.end(), z);
        int right = static_cast<int>(it - ens.grid.begin());
        right = std::clamp(right, 1, ens.n_z - 1);
        const int left = right - 1;
        const double t = (z - ens.grid[left]) / (ens.grid[right] - ens.grid[left]);
        for (int i = 0; i < ens.n_shots; ++i) out(i, j) = (1.0 - t) * ens(i, left) + t * ens(i, right);
    }
    out.append_history("interp_to_pixels " + std::to_string(n_pixels));
    return out;
}

PhaseEnsemble simulate_pipeline(const SGParams& params, int n_samples, std::uint64_t seed,
                                const PipelineOptions& opts) {
    const TransferOperator op = build_transfer_operator(params, opts.operator_m, opts.operator_windings);
    PhaseEnsemble ens = sample_transfer(params, op, n_samples, seed);
    ens = interp_to_pixels(ens, opts.n_pixels);
    ens = apply_psf(ens, params.sigma_psf);
    ens = select_central(ens, opts.central_fraction);
    ens = reduce_global_offset(ens);
    ens = coarse_grain(ens, opts.coarse_nz);
    return ens;
}

CoherenceCurve coherence_curve(double lambda_t, std::span<const double> q_grid, int n_samples,
                               std::uint64_t seed, const JackknifePlan& plan, const PipelineOptions& opts) {
    if (q_grid.empty()) throw ValidationError("empty q grid");
    for (std::size_t i = 0; i < q_grid.size(); ++i) {
        if (q_grid[i] < 0.0) throw ValidationError("q must be >= 0");
        if (i > 0 && q_grid[i] <= q_grid[i - 1]) throw ValidationError("q grid must be strictly increasing");
    }
    CoherenceCurve curve;
    curve.reserve(q_grid.size());
    for (std::size_t i = 0; i < q_grid.size(); ++i) {
        const SGParams p = make_sg_params(q_grid[i], lambda_t);
        const PhaseEnsemble ens = simulate_pipeline(p, n_samples, derive_seed(seed, i), opts);
        JackknifePlan jk = plan;
        jk.seed = derive_seed(seed, 0x6f00 + i);
        curve.push_back({q_grid[i], coherence_factor(ens, jk)});
    }
    for (std::size_t i = 0; i + 1 < curve.size(); ++i)
        if (curve[i + 1].coherence.ci_hi < curve[i].coherence.ci_lo)
            throw NonMonotoneCurve("coherence decreases beyond CI overlap between q=" +
                                   std::to_string(curve[i].q) + " and q=" + std::to_string(curve[i + 1].q));
    return curve;
}

QEstimate estimate_q(const EstimateWithCI& coherence, const CoherenceCurve& curve) {
    if (curve.size() < 2) throw ValidationError("coherence curve needs at least 2 points");
    const double c = coherence.value;
    const double lo = curve.front().coherence.value;
    const double hi = curve.back().coherence.value;
    if (c < lo || c > hi) throw OutOfRange("coherence " + std::to_string(c) + " outside curve range");

    QEstimate result;
    result.extrapolation_risk = (c == lo) || (c == hi);
    std::size_t i = 0;
    while (i + 2 < curve.size() && curve[i + 1].coherence.value < c) ++i;
    const double c0 = curve[i].coherence.value, c1 = curve[i + 1].coherence.value;
    const double q0 = curve[i].q, q1 = curve[i + 1].q;
    const double t = (c - c0) / (c1 - c0);
    const double slope = (q1 - q0) / (c1 - c0);
    const double curve_se = (1.0 - t) * curve[i].coherence.std_error + t * curve[i + 1].coherence.std_error;
    const double se = std::abs(slope) * std::hypot(coherence.std_error, curve_se);
    result.q = make_estimate(q0 + t * (q1 - q0), se, "estimate_q");
    return result;
}

}  // namespace phaseinfo
