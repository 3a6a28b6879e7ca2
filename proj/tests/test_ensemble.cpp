#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "common.hpp"
#include "phaseinfo/ensemble.hpp"
#include "phaseinfo/resampling.hpp"
#include "phaseinfo/rng.hpp"

using namespace phaseinfo;

namespace {
constexpr double kPi = std::numbers::pi;

PhaseEnsemble random_wrapped_ensemble(int n_shots, int n_z, std::uint64_t seed) {
    std::vector<double> grid(n_z);
    for (int j = 0; j < n_z; ++j) grid[j] = 2.0 * j + 1.0;
    auto ens = make_ensemble(n_shots, grid);
    Rng rng(seed);
    for (int i = 0; i < n_shots; ++i)
        for (int j = 0; j < n_z; ++j) ens(i, j) = rng.uniform(-kPi, kPi);
    return ens;
}
}  // namespace

TEST_CASE("unwrap_profile spec examples") {
    CHECK(unwrap_profile(std::vector<double>{0.0, 0.1, 0.2}) == std::vector<double>{0.0, 0.1, 0.2});

    const auto jump = unwrap_profile(std::vector<double>{0.0, 3.0, -3.0});
    CHECK(jump[0] == 0.0);
    CHECK(jump[1] == 3.0);
    CHECK_NEAR(jump[2], 3.2831853071795862, 1e-12);

    const auto two = unwrap_profile(std::vector<double>{3.1, -3.1});
    CHECK(two[0] == 3.1);
    CHECK_NEAR(two[1], 3.1831853071795862, 1e-12);
}

TEST_CASE("unwrap then re-wrap reproduces the input") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> wrapped(40);
        for (auto& v : wrapped) v = rng.uniform(-kPi, kPi);
        const auto unwrapped = unwrap_profile(wrapped);
        for (std::size_t j = 0; j < wrapped.size(); ++j) {
            CHECK_NEAR(wrap_phase(unwrapped[j]), wrapped[j], 1e-12);
            if (j > 0) {
                const double d = unwrapped[j] - unwrapped[j - 1];
                CHECK(d > -kPi - 1e-12);
                CHECK(d <= kPi + 1e-12);
            }
        }
    }
}

TEST_CASE("reduce_global_offset spec examples") {
    auto ens = make_ensemble(3, {1.0, 3.0});
    ens(0, 0) = 6.9;
    ens(0, 1) = 7.1;  // mean 7.0 -> shift by -2pi
    ens(1, 0) = 0.4;
    ens(1, 1) = 0.6;  // mean 0.5 -> unchanged
    ens(2, 0) = -0.2;
    ens(2, 1) = 0.0;  // mean -0.1 -> shift by +2pi
    const auto out = reduce_global_offset(ens);
    CHECK_NEAR((out(0, 0) + out(0, 1)) / 2, 7.0 - 2 * kPi, 1e-12);
    CHECK(out(1, 0) == 0.4);
    CHECK(out(1, 1) == 0.6);
    CHECK_NEAR((out(2, 0) + out(2, 1)) / 2, -0.1 + 2 * kPi, 1e-12);
}

TEST_CASE("reduce_global_offset is idempotent and preserves structure") {
    auto ens = random_wrapped_ensemble(50, 30, 11);
    Rng rng(13);
    for (int i = 0; i < ens.n_shots; ++i) {
        const double off = 2.0 * kPi * (rng.uniform_int(9) - 4);
        for (int j = 0; j < ens.n_z; ++j) ens(i, j) += off;
    }
    const auto once = reduce_global_offset(ens);
    const auto twice = reduce_global_offset(once);
    CHECK(once.samples == twice.samples);  // bit-level

    for (int i = 0; i < ens.n_shots; ++i) {
        double mean = 0.0;
        for (int j = 0; j < ens.n_z; ++j) mean += once(i, j);
        mean /= ens.n_z;
        CHECK(mean >= 0.0);
        CHECK(mean < 2 * kPi);
        for (int j = 1; j < ens.n_z; ++j) {
            const double before = ens(i, j) - ens(i, j - 1);
            const double after = once(i, j) - once(i, j - 1);
            CHECK_NEAR(after, before, 1e-12);
        }
    }
}

TEST_CASE("coherence_factor invariant under offset reduction") {
    auto ens = random_wrapped_ensemble(200, 12, 17);
    Rng rng(19);
    for (int i = 0; i < ens.n_shots; ++i) {
        const double off = 2.0 * kPi * (rng.uniform_int(7) - 3);
        for (int j = 0; j < ens.n_z; ++j) ens(i, j) += off;
    }
    JackknifePlan plan;
    plan.repetitions = 50;
    plan.seed = 3;
    const auto a = coherence_factor(ens, plan);
    const auto b = coherence_factor(reduce_global_offset(ens), plan);
    CHECK_NEAR(a.value, b.value, 1e-12);
}

TEST_CASE("coarse_grain spec examples") {
    auto flat = make_ensemble(1, [] {
        std::vector<double> g(30);
        std::iota(g.begin(), g.end(), 0.0);
        return g;
    }());
    for (int j = 0; j < 30; ++j) flat(0, j) = 1.0;
    const auto six = coarse_grain(flat, 6);
    CHECK(six.n_z == 6);
    for (int j = 0; j < 6; ++j) CHECK(six(0, j) == 1.0);

    auto ramp = make_ensemble(1, {0, 1, 2, 3, 4, 5});
    for (int j = 0; j < 6; ++j) ramp(0, j) = j + 1.0;
    const auto three = coarse_grain(ramp, 3);
    CHECK(three(0, 0) == 1.5);
    CHECK(three(0, 1) == 3.5);
    CHECK(three(0, 2) == 5.5);

    CHECK_THROWS_AS(coarse_grain(flat, 4), IndivisibleGrid);
}

TEST_CASE("coarse_grain commutes with offset reduction up to 2pi multiples") {
    auto ens = random_wrapped_ensemble(40, 30, 23);
    Rng rng(29);
    for (int i = 0; i < ens.n_shots; ++i) {
        const double off = 2.0 * kPi * (rng.uniform_int(9) - 4);
        for (int j = 0; j < ens.n_z; ++j) ens(i, j) += off;
    }
    const auto a = coarse_grain(reduce_global_offset(ens), 6);
    const auto b = reduce_global_offset(coarse_grain(ens, 6));
    for (int i = 0; i < a.n_shots; ++i)
        for (int j = 0; j < a.n_z; ++j) {
            const double diff = (a(i, j) - b(i, j)) / (2 * kPi);
            CHECK_NEAR(diff, std::round(diff), 1e-10);
        }
}

TEST_CASE("select_central spec examples") {
    std::vector<double> g(60);
    for (int j = 0; j < 60; ++j) g[j] = 2.0 * j + 1.0;
    auto ens = make_ensemble(2, g);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 60; ++j) ens(i, j) = 100.0 * i + j;

    const auto central = select_central(ens, 0.5);
    CHECK(central.n_z == 30);
    CHECK(central(0, 0) == 15.0);   // pixel 16 in 1-based labels
    CHECK(central(0, 29) == 44.0);  // pixel 45

    const auto full = select_central(ens, 1.0);
    CHECK(full.samples == ens.samples);

    auto tiny = make_ensemble(1, {0.0, 1.0, 2.0, 3.0});
    CHECK_THROWS_AS(select_central(tiny, 0.1), EmptySelection);
}

TEST_CASE("coherence_factor trivial values") {
    auto zeros = make_ensemble(100, {0.0, 1.0, 2.0});
    JackknifePlan plan;
    plan.repetitions = 50;
    CHECK(coherence_factor(zeros, plan).value == 1.0);

    auto uniform = random_wrapped_ensemble(4000, 10, 31);
    const auto est = coherence_factor(uniform, plan);
    const double se_iid = 1.0 / std::sqrt(2.0 * 4000 * 10);  // var(cos U) = 1/2
    CHECK(std::abs(est.value) < 4.0 * se_iid);
}

TEST_CASE("build_cloud spec examples and partition validation") {
    std::vector<double> g{5, 15, 25, 35, 45, 55};
    auto ens = make_ensemble(4, g);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 6; ++j) ens(i, j) = 10.0 * i + j;

    const auto c2 = build_cloud(ens, {{1}, {2}});  // pixels z2 and z3
    CHECK(c2.n == 4);
    CHECK(c2.d == 2);
    CHECK(c2.d_a == 1);
    CHECK(c2(2, 0) == 21.0);
    CHECK(c2(2, 1) == 22.0);

    const auto c6 = build_cloud(ens, {{0, 1, 2}, {3, 4, 5}});
    CHECK(c6.d == 6);
    CHECK(c6.d_a == 3);

    CHECK_THROWS_AS(build_cloud(ens, {{0}, {0}}), InvalidPartition);
    CHECK_THROWS_AS(build_cloud(ens, {{0}, {6}}), InvalidPartition);
    CHECK_THROWS_AS(build_cloud(ens, {{}, {1}}), InvalidPartition);
}

TEST_CASE("build_cloud commutes with shot permutation") {
    auto ens = random_wrapped_ensemble(25, 6, 37);
    const Partition part{{0, 1, 2}, {3, 4, 5}};
    const auto direct = build_cloud(ens, part);
    std::vector<int> perm(25);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(41);
    for (int i = 24; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
    const auto permuted = build_cloud(ens.select_shots(perm), part);
    for (int r = 0; r < 25; ++r)
        for (int a = 0; a < 6; ++a) CHECK(permuted(r, a) == direct(perm[r], a));
}

TEST_CASE("partition boundary counting") {
    CHECK(Partition{{0, 1, 2}, {3, 4, 5}}.boundary_count() == 1);
    CHECK(Partition{{0, 2, 4}, {1, 3, 5}}.boundary_count() == 5);
    CHECK(Partition{{0}, {3}}.boundary_count() == 0);
}
