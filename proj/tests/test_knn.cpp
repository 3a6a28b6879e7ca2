#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "phaseinfo/knn.hpp"
#include "phaseinfo/rng.hpp"

using namespace phaseinfo;

namespace {

DataCloud line_cloud(std::vector<double> values) {
    DataCloud c = make_cloud(static_cast<int>(values.size()), 1, 1);
    for (int i = 0; i < c.n; ++i) c(i, 0) = values[i];
    c.compute_scale();
    return c;
}

DataCloud random_cloud(int n, int d, int d_a, std::uint64_t seed, bool lattice) {
    DataCloud c = make_cloud(n, d, d_a);
    Rng rng(seed);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < d; ++a)
            c(i, a) = lattice ? static_cast<double>(rng.uniform_int(6)) : rng.uniform(-1.0, 1.0);
    c.compute_scale();
    return c;
}

}  // namespace

TEST_CASE("kth_neighbor_distance spec examples") {
    const auto c = line_cloud({0.0, 1.0, 3.0});
    for (IndexKind kind : {IndexKind::kdtree, IndexKind::brute}) {
        NeighborIndex idx(c, kind);
        CHECK(idx.kth_neighbor_distance(0, 1) == 1.0);
        CHECK(idx.kth_neighbor_distance(0, 2) == 3.0);
        CHECK_THROWS_AS(idx.kth_neighbor_distance(0, 3), KTooLarge);
    }

    DataCloud c2 = make_cloud(3, 2, 1);
    c2(0, 0) = 0;
    c2(0, 1) = 0;
    c2(1, 0) = 1;
    c2(1, 1) = 2;
    c2(2, 0) = 3;
    c2(2, 1) = 1;
    c2.compute_scale();
    NeighborIndex idx(c2);
    CHECK(idx.kth_neighbor_distance(0, 1) == 2.0);
}

TEST_CASE("count_within_subspace spec examples") {
    const auto c = line_cloud({0.0, 1.0, 2.0});
    NeighborIndex idx(c);
    // the point at exactly the radius is excluded; the point itself counts
    CHECK(idx.count_within_subspace(0, 1.0, Subspace::a) == 1);
    const auto c2 = line_cloud({0.0, 0.5, 2.0});
    NeighborIndex idx2(c2);
    CHECK(idx2.count_within_subspace(0, 1.0, Subspace::a) == 2);
    // radius above the largest pairwise distance counts everything
    CHECK(idx2.count_within_subspace(0, 2.5, Subspace::a) == 3);
    CHECK_THROWS_AS(idx2.count_within_subspace(0, 0.0, Subspace::a), ValidationError);
}

TEST_CASE("indexed queries match the exhaustive oracle exactly") {
    Rng seeds(123);
    for (int trial = 0; trial < 120; ++trial) {
        const int n = 3 + seeds.uniform_int(60);
        const int d = 1 + seeds.uniform_int(6);
        const int d_a = 1 + seeds.uniform_int(std::max(1, d - 1));
        const bool lattice = trial % 3 == 0;  // integer grids force exact ties
        const auto cloud = random_cloud(n, d, std::max(1, std::min(d_a, d)), seeds.next_u64(), lattice);

        NeighborIndex tree(cloud, IndexKind::kdtree);
        NeighborIndex brute(cloud, IndexKind::brute);
        Rng rng(trial);
        for (int i = 0; i < n; ++i) {
            const int k = 1 + rng.uniform_int(n - 1);
            const double expected = oracle::kth_distance(cloud, i, k);
            CHECK(tree.kth_neighbor_distance(i, k) == expected);
            CHECK(brute.kth_neighbor_distance(i, k) == expected);

            const double radius = expected > 0 ? expected : 0.5;
            for (Subspace s : {Subspace::joint, Subspace::a, Subspace::b}) {
                const int axis0 = s == Subspace::b ? cloud.d_a : 0;
                const int na = s == Subspace::joint ? cloud.d : (s == Subspace::a ? cloud.d_a : cloud.d - cloud.d_a);
                if (na == 0) continue;
                const int expect = oracle::strict_count(cloud, i, radius, axis0, na);
                CHECK(tree.count_within_subspace(i, radius, s) == expect);
                CHECK(brute.count_within_subspace(i, radius, s) == expect);
            }
        }
    }
}

TEST_CASE("strict count at the joint kth distance equals k for distinct distances") {
    // with all pairwise distances distinct the strict joint count at eps_k is
    // k: the k-1 nearer neighbors plus the point itself
    const auto cloud = random_cloud(64, 3, 2, 99, false);
    NeighborIndex idx(cloud);
    for (int i = 0; i < cloud.n; ++i)
        for (int k : {1, 2, 5}) {
            const double eps = idx.kth_neighbor_distance(i, k);
            CHECK(idx.count_within_subspace(i, eps, Subspace::joint) == k);
        }
}

TEST_CASE("count_within_subspace is monotone in the radius") {
    const auto cloud = random_cloud(80, 4, 2, 7, true);
    NeighborIndex idx(cloud);
    Rng rng(8);
    for (int i = 0; i < cloud.n; i += 7) {
        int last = 0;
        for (double r = 0.25; r < 8.0; r += 0.25) {
            const int c = idx.count_within_subspace(i, r, Subspace::joint);
            CHECK(c >= last);
            last = c;
        }
    }
}

TEST_CASE("cross-set kth distance") {
    const auto base = line_cloud({0.0, 1.0, 3.0});
    NeighborIndex idx(base);
    const std::vector<double> query{2.0};
    CHECK(idx.kth_distance_from(query, 1) == 1.0);  // nearest is 1 or 3
    CHECK(idx.kth_distance_from(query, 2) == 1.0);  // tie: both at distance 1
    CHECK(idx.kth_distance_from(query, 3) == 2.0);
}

TEST_CASE("duplicate detection and jitter") {
    auto cloud = line_cloud({0.0, 1.0, 1.0, 2.0});
    const auto pair = find_duplicate_pair(cloud);
    REQUIRE(pair.has_value());
    CHECK(pair->first == 1);
    CHECK(pair->second == 2);

    const auto jittered = jitter_cloud(cloud, 5);
    CHECK_FALSE(find_duplicate_pair(jittered).has_value());
    for (int i = 0; i < cloud.n; ++i)
        CHECK(std::abs(jittered(i, 0) - cloud(i, 0)) <= 1e-10 * cloud.scale[0]);
    // deterministic
    const auto again = jitter_cloud(cloud, 5);
    CHECK(again.points == jittered.points);
}
