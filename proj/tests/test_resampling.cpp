#include <doctest.h>

#include <cmath>
#include <numeric>

#include "common.hpp"
#include "phaseinfo/resampling.hpp"
#include "phaseinfo/rng.hpp"

using namespace phaseinfo;

namespace {

PhaseEnsemble normal_ensemble(int n_shots, std::uint64_t seed) {
    auto ens = make_ensemble(n_shots, {0.0});
    Rng rng(seed);
    for (int i = 0; i < n_shots; ++i) ens(i, 0) = rng.normal();
    return ens;
}

double subset_mean(const PhaseEnsemble& ens) {
    double acc = 0.0;
    for (int i = 0; i < ens.n_shots; ++i) acc += ens(i, 0);
    return acc / ens.n_shots;
}

}  // namespace

TEST_CASE("jackknife of a constant estimator has zero error") {
    JackknifePlan plan;
    plan.repetitions = 100;
    const auto est = jackknife(
        200, [](std::span<const int>) { return 3.0; }, plan);
    CHECK(est.value == 3.0);
    CHECK(est.std_error == 0.0);
    CHECK(est.ci_lo == 3.0);
    CHECK(est.ci_hi == 3.0);
}

TEST_CASE("jackknife of the sample mean matches the closed-form SE") {
    const auto ens = normal_ensemble(1000, 5);
    JackknifePlan plan;
    plan.repetitions = 3000;
    plan.seed = 7;
    const auto est = jackknife(ens, subset_mean, plan);

    double sd = 0.0;
    const double mean = subset_mean(ens);
    for (int i = 0; i < ens.n_shots; ++i) sd += (ens(i, 0) - mean) * (ens(i, 0) - mean);
    sd = std::sqrt(sd / (ens.n_shots - 1));
    const double closed_form = sd / std::sqrt(1000.0);

    CHECK(est.value == mean);
    CHECK(std::abs(est.std_error - closed_form) / closed_form < 0.2);
    CHECK(est.ci_lo == est.value - 2 * est.std_error);
    CHECK(est.ci_hi == est.value + 2 * est.std_error);
}

TEST_CASE("jackknife is deterministic under a fixed seed") {
    const auto ens = normal_ensemble(300, 9);
    JackknifePlan plan;
    plan.repetitions = 200;
    plan.seed = 42;
    const auto a = jackknife(ens, subset_mean, plan);
    const auto b = jackknife(ens, subset_mean, plan);
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
}

TEST_CASE("jackknife SE is stable across seeds") {
    const auto ens = normal_ensemble(800, 11);
    JackknifePlan plan;
    plan.repetitions = 3000;
    std::vector<double> ses;
    for (std::uint64_t s = 0; s < 20; ++s) {
        plan.seed = s;
        ses.push_back(jackknife(ens, subset_mean, plan).std_error);
    }
    const auto [lo, hi] = std::minmax_element(ses.begin(), ses.end());
    CHECK((*hi - *lo) / *lo < 0.15);
}

TEST_CASE("jackknife validates the plan") {
    const auto ens = normal_ensemble(50, 13);
    JackknifePlan bad;
    bad.delete_fraction = 0.001;  // d = round(0.05) = 0
    CHECK_THROWS_AS(jackknife(ens, subset_mean, bad), InsufficientSamples);
    JackknifePlan worse;
    worse.delete_fraction = 1.5;
    CHECK_THROWS_AS(jackknife(ens, subset_mean, worse), ValidationError);
    JackknifePlan few;
    few.repetitions = 1;
    CHECK_THROWS_AS(jackknife(ens, subset_mean, few), ValidationError);
}

TEST_CASE("convergence_scan table") {
    const auto ens = normal_ensemble(1600, 15);
    JackknifePlan plan;
    plan.repetitions = 400;
    plan.seed = 3;
    const std::vector<int> sizes{100, 200, 400, 800, 1600};
    const auto rows = convergence_scan(subset_mean, ens, sizes, plan);
    REQUIRE(rows.size() == sizes.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].n_samples == sizes[i]);
        CHECK(rows[i].converged == (sizes[i] > 500));
    }
    // stderr decreasing roughly like 1/sqrt(n): each doubling shrinks by
    // ~sqrt(2), allow 30% relative slack
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double ratio = rows[i].std_error / rows[i - 1].std_error;
        CHECK(ratio < 1.0 / std::sqrt(2.0) * 1.3);
        CHECK(ratio > 1.0 / std::sqrt(2.0) * 0.7);
    }
    CHECK_THROWS_AS(convergence_scan(subset_mean, ens, std::vector<int>{3200}, plan), InsufficientSamples);
}

TEST_CASE("sample_without_replacement draws distinct sorted indices") {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto pick = sample_without_replacement(40, 12, s);
        REQUIRE(pick.size() == 12);
        for (std::size_t i = 1; i < pick.size(); ++i) CHECK(pick[i] > pick[i - 1]);
        CHECK(pick.front() >= 0);
        CHECK(pick.back() < 40);
    }
}
