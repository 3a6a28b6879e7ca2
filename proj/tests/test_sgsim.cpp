#include <doctest.h>

#include <cmath>
#include <numbers>

#include "common.hpp"
#include "oracle.hpp"
#include "phaseinfo/resampling.hpp"
#include "phaseinfo/rng.hpp"
#include "phaseinfo/sgsim.hpp"

using namespace phaseinfo;

namespace {
constexpr double kPi = std::numbers::pi;

// 3-sigma agreement of a per-shot statistic between two ensembles
void check_agreement(std::span<const double> a, std::span<const double> b, int batch_a = 1, int batch_b = 1) {
    const auto ma = oracle::batch_means(a, batch_a);
    const auto mb = oracle::batch_means(b, batch_b);
    const double combined = std::hypot(ma.se, mb.se);
    CHECK(std::abs(ma.mean - mb.mean) < 3.0 * combined);
}

}  // namespace

TEST_CASE("sg parameter conversions are self-consistent") {
    const SGParams p = make_sg_params(2.0, 15.0);
    CHECK(p.ell_j == doctest::Approx(7.5));
    CHECK_NEAR(p.q, p.lambda_t / p.ell_j, 1e-12);
    // ell_J^2 = hbar / (4 m J)
    const double lj_m = std::sqrt(constants::hbar / (4.0 * constants::mass_rb87 * p.tunnel_j));
    CHECK_NEAR(lj_m * 1e6, p.ell_j, 1e-9);
    // lambda_T = 2 hbar^2 n / (m kB T)
    const double lt_m = 2.0 * constants::hbar * constants::hbar * (p.n_1d * 1e6) /
                        (constants::mass_rb87 * constants::k_boltzmann * (p.temperature * 1e-9));
    CHECK_NEAR(lt_m * 1e6, p.lambda_t, 1e-9);
    CHECK_NOTHROW(p.validate());

    const SGParams massless = make_sg_params(0.0, 15.0);
    CHECK(std::isinf(massless.ell_j));
    CHECK(massless.tunnel_j == 0.0);
}

TEST_CASE("dimensionless_action spec examples") {
    SGParams flat = make_sg_params(2.0, 15.0, 60.0, 61);
    std::vector<double> zero(61, 0.0);
    CHECK(dimensionless_action(zero, flat) == 0.0);

    std::vector<double> pi_profile(61, kPi);
    // (q^2 / 4 lambda_T) * 2 * L = (4/60) * 2 * 60 = 8
    CHECK_NEAR(dimensionless_action(pi_profile, flat), 8.0, 1e-10);

    SGParams massless = make_sg_params(0.0, 15.0, 60.0, 61);
    std::vector<double> ramp(61);
    for (int j = 0; j <= 60; ++j) ramp[j] = 2.0 * kPi * j / 60.0;
    CHECK_NEAR(dimensionless_action(ramp, massless), 15.0 / 8.0 * (2 * kPi) * (2 * kPi) / 60.0, 1e-10);

    CHECK_THROWS_AS(dimensionless_action(std::vector<double>(60, 0.0), flat), ValidationError);
}

TEST_CASE("transfer operator kernel structure") {
    const SGParams p = make_sg_params(2.0, 15.0);
    const auto op = build_transfer_operator(p, 128, 4);
    CHECK(op.m == 128);
    CHECK(op.phi_grid.front() == -4 * kPi);
    CHECK(op.phi_grid.back() == 4 * kPi);

    // exact symmetry, everything finite and nonnegative; strictly positive
    // within the dynamically reachable band (far-off-diagonal entries are
    // mathematically positive but underflow double precision)
    for (int a = 0; a < op.m; a += 7)
        for (int b = 0; b < op.m; b += 5) {
            const double kab = op.kernel[a * op.m + b];
            CHECK(kab == op.kernel[b * op.m + a]);
            CHECK(kab >= 0.0);
            CHECK(std::isfinite(kab));
            if (std::abs(op.phi_grid[a] - op.phi_grid[b]) < 2.0) CHECK(kab > 0.0);
        }
    for (int a = 0; a < op.m; ++a) {
        double row_sum = 0.0;
        for (int b = 0; b < op.m; ++b) row_sum += op.kernel[a * op.m + b];
        CHECK(row_sum > 0.0);
        CHECK(std::isfinite(row_sum));
    }

    // q = 0 kernel is a pure Gaussian in (a - b)
    const SGParams massless = make_sg_params(0.0, 15.0);
    const auto g = build_transfer_operator(massless, 128, 4);
    const double kin = massless.lambda_t / (8.0 * massless.dz());
    for (int a = 0; a < g.m; a += 11)
        for (int b = 0; b < g.m; b += 13) {
            const double d = g.phi_grid[a] - g.phi_grid[b];
            CHECK_NEAR(g.kernel[a * g.m + b], std::exp(-kin * d * d), 1e-14);
        }

    CHECK_THROWS_AS(build_transfer_operator(p, 32, 8), ValidationError);
    CHECK_THROWS_AS(build_transfer_operator(p, 128, 1), ValidationError);
}

TEST_CASE("transfer sampler is deterministic and matches the massless oracle") {
    const SGParams p = make_sg_params(0.0, 15.0);
    const auto op = build_transfer_operator(p);
    const auto ens = sample_transfer(p, op, 400, 21);
    const auto again = sample_transfer(p, op, 400, 21);
    CHECK(ens.samples == again.samples);

    // single-bond increment variance: exact Gaussian value + dither h^2/6
    double var = 0.0;
    long count = 0;
    for (int i = 0; i < ens.n_shots; ++i)
        for (int j = 1; j < ens.n_z; ++j) {
            const double d = ens(i, j) - ens(i, j - 1);
            var += d * d;
            ++count;
        }
    var /= count;
    const double h = op.cell();
    const double expect = 4.0 * p.dz() / p.lambda_t + h * h / 6.0;
    const double rel_se = std::sqrt(2.0 / count);
    CHECK_NEAR(var, expect, 4.0 * rel_se * expect);

    // two-point cos correlations against the exact massless sampler
    const auto exact = oracle::massless_gaussian_ensemble(15.0, 120.0, 150, 3000, 77);
    for (auto [j0, j1] : {std::pair{0, 30}, {20, 80}, {0, 149}}) {
        const auto a = oracle::shot_cos_pair(ens, j0, j1);
        const auto b = oracle::shot_cos_pair(exact, j0, j1);
        check_agreement(a, b);
    }
}

TEST_CASE("metropolis massless increments match the exact sampler") {
    const SGParams p = make_sg_params(0.0, 15.0);
    McmcOptions mc;
    mc.burn_in = 400;  // massless init is exact already
    mc.thinning = 15;
    mc.n_chains = 8;
    const auto ens = sample_metropolis(p, 1200, 5, mc);
    CHECK(ens.meta["acceptance_rate"].get<double>() > 0.2);
    CHECK(ens.meta["acceptance_rate"].get<double>() < 0.8);

    const auto exact = oracle::massless_gaussian_ensemble(15.0, 120.0, 150, 3000, 101);
    for (auto [j0, j1] : {std::pair{0, 30}, {20, 80}}) {
        const auto a = oracle::shot_cos_pair(ens, j0, j1);
        const auto b = oracle::shot_cos_pair(exact, j0, j1);
        check_agreement(a, b, 8, 1);  // batch means absorb chain correlation
    }
}

TEST_CASE("metropolis and transfer sampler agree at q=2") {
    const SGParams p = make_sg_params(2.0, 15.0);
    const auto op = build_transfer_operator(p);
    const auto t = sample_transfer(p, op, 2500, 31);
    McmcOptions mc;
    mc.burn_in = 16000;
    mc.thinning = 60;
    mc.n_chains = 12;
    const auto m = sample_metropolis(p, 1500, 33, mc);

    check_agreement(oracle::shot_cos(t), oracle::shot_cos(m), 1, 10);
    for (auto [j0, j1] : {std::pair{30, 45}, {40, 100}}) {
        check_agreement(oracle::shot_cos_pair(t, j0, j1), oracle::shot_cos_pair(m, j0, j1), 1, 10);
    }
}

TEST_CASE("action and sampler consistency via reweighting") {
    // perturb lambda_T slightly: reweighting Metropolis samples by
    // exp(-(H' - H)) must reproduce direct sampling of <cos phi>
    const SGParams base = make_sg_params(1.0, 15.0);
    const SGParams pert = make_sg_params(1.0, 15.75);
    McmcOptions mc;
    mc.burn_in = 8000;
    mc.thinning = 40;
    mc.n_chains = 8;
    const auto ens = sample_metropolis(base, 1500, 41, mc);
    const auto direct = sample_metropolis(pert, 1500, 43, mc);

    std::vector<double> logw(ens.n_shots);
    for (int i = 0; i < ens.n_shots; ++i)
        logw[i] = dimensionless_action(ens.row(i), base) - dimensionless_action(ens.row(i), pert);
    const double wmax = *std::max_element(logw.begin(), logw.end());
    double wsum = 0.0, acc = 0.0;
    const auto cosns = oracle::shot_cos(ens);
    for (int i = 0; i < ens.n_shots; ++i) {
        const double w = std::exp(logw[i] - wmax);
        wsum += w;
        acc += w * cosns[i];
    }
    const double reweighted = acc / wsum;
    const auto md = oracle::batch_means(oracle::shot_cos(direct), 10);
    // effective sample size shrinks under reweighting; allow a loose band
    CHECK(std::abs(reweighted - md.mean) < 6.0 * std::max(md.se, 0.01));
}

TEST_CASE("apply_psf basics") {
    std::vector<double> g(60);
    for (int j = 0; j < 60; ++j) g[j] = 2.0 * j + 1.0;
    auto ens = make_ensemble(2, g);
    for (int j = 0; j < 60; ++j) {
        ens(0, j) = 0.7;               // constant
        ens(1, j) = j == 30 ? 5.0 : 0; // spike
    }
    const auto same = apply_psf(ens, 0.0);
    CHECK(same.samples == ens.samples);

    const auto blurred = apply_psf(ens, 3.0);
    for (int j = 0; j < 60; ++j) CHECK_NEAR(blurred(0, j), 0.7, 1e-12);

    // spike spreads with second moment ~ sigma^2
    double mass = 0.0, mean = 0.0;
    for (int j = 0; j < 60; ++j) mass += blurred(1, j);
    CHECK_NEAR(mass * ens.dz, 5.0 * ens.dz, 1e-9);
    for (int j = 0; j < 60; ++j) mean += blurred(1, j) * g[j];
    mean /= mass;
    double m2 = 0.0;
    for (int j = 0; j < 60; ++j) m2 += blurred(1, j) * (g[j] - mean) * (g[j] - mean);
    m2 /= mass;
    CHECK_NEAR(m2, 9.0, 0.5);
}

TEST_CASE("simulate_pipeline output shape and grid") {
    const SGParams p = make_sg_params(2.0, 15.0);
    const auto ens = simulate_pipeline(p, 50, 3);
    CHECK(ens.n_shots == 50);
    CHECK(ens.n_z == 6);
    CHECK_NEAR(ens.dz, 10.0, 1e-9);
    CHECK(ens.meta["history"].size() >= 6);
    ens.validate();
}

TEST_CASE("coherence is invariant under global 2pi profile shifts") {
    const SGParams p = make_sg_params(2.0, 15.0);
    auto ens = simulate_pipeline(p, 200, 5);
    auto shifted = ens;
    Rng rng(6);
    for (int i = 0; i < ens.n_shots; ++i) {
        const double off = 2.0 * kPi * (rng.uniform_int(5) - 2);
        for (int j = 0; j < ens.n_z; ++j) shifted(i, j) += off;
    }
    JackknifePlan plan;
    plan.repetitions = 50;
    CHECK_NEAR(coherence_factor(ens, plan).value, coherence_factor(shifted, plan).value, 1e-12);
}

TEST_CASE("pipeline coherence rises with q") {
    JackknifePlan plan;
    plan.repetitions = 200;
    double last = -1.0;
    for (double q : {0.0, 2.0, 6.0}) {
        const SGParams p = make_sg_params(q, 15.0);
        const auto est = coherence_factor(simulate_pipeline(p, 600, 7), plan);
        CHECK(est.value > last);
        last = est.value;
    }
    // massless endpoint is consistent with zero coherence
    const SGParams p0 = make_sg_params(0.0, 15.0);
    const auto c0 = coherence_factor(simulate_pipeline(p0, 800, 11), plan);
    CHECK(std::abs(c0.value) < 5.0 * std::max(c0.std_error, 0.005));
}

TEST_CASE("estimate_q inverts a coherence curve") {
    CoherenceCurve curve;
    for (double q : {0.0, 1.0, 2.0, 3.0}) {
        CoherencePoint pt;
        pt.q = q;
        pt.coherence = make_estimate(q / 4.0, 0.005, "synthetic");
        curve.push_back(pt);
    }
    const auto mid = estimate_q(make_estimate(0.375, 0.01, "target"), curve);
    CHECK_NEAR(mid.q.value, 1.5, 1e-12);
    CHECK_FALSE(mid.extrapolation_risk);
    CHECK(mid.q.std_error > 0.0);

    const auto node = estimate_q(make_estimate(0.25, 0.0, "target"), curve);
    CHECK_NEAR(node.q.value, 1.0, 1e-12);

    const auto edge = estimate_q(make_estimate(0.75, 0.01, "target"), curve);
    CHECK(edge.extrapolation_risk);
    CHECK_NEAR(edge.q.value, 3.0, 1e-12);

    CHECK_THROWS_AS(estimate_q(make_estimate(1.5, 0.01, "target"), curve), OutOfRange);
    CHECK_THROWS_AS(estimate_q(make_estimate(-0.1, 0.01, "target"), curve), OutOfRange);
}
