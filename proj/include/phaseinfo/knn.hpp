#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "phaseinfo/ensemble.hpp"

namespace phaseinfo {

enum class Subspace { joint, a, b };

// brute = serial exhaustive scan, kept as the reference path; kdtree is the
// production kernel. Both evaluate the same floating-point expressions, so
// results agree exactly, including tie semantics.
enum class IndexKind { kdtree, brute };

// max-norm distance over a contiguous axis range of two cloud rows
inline double chebyshev(const double* p, const double* q, int naxes) {
    double best = 0.0;
    for (int a = 0; a < naxes; ++a) {
        const double d = p[a] > q[a] ? p[a] - q[a] : q[a] - p[a];
        if (d > best) best = d;
    }
    return best;
}

namespace detail {

class KdTree {
  public:
    void build(const DataCloud& cloud, int axis0, int naxes);
    // k-th smallest max-norm distance to the indexed points; pass self < 0
    // to include every point (external query)
    double kth_distance(const double* q, int self, int k) const;
    // number of points with distance strictly below radius (self counts)
    int count_within(int self, double radius) const;

  private:
    struct Node {
        int begin, end;       // range into idx_
        int left = -1, right = -1;
        int split_dim = -1;
        double split_val = 0.0;
    };

    double point(int i, int a) const { return data_[static_cast<std::size_t>(i) * stride_ + axis0_ + a]; }
    double min_dist(int node, const double* q) const;
    double max_dist(int node, const double* q) const;
    int build_node(int begin, int end);
    void knn_search(int node, const double* q, int self, int k, std::vector<double>& heap) const;
    int count_search(int node, const double* q, double radius) const;

    const double* data_ = nullptr;
    int n_ = 0, stride_ = 0, axis0_ = 0, naxes_ = 0;
    std::vector<int> idx_;
    std::vector<Node> nodes_;
    std::vector<double> bounds_;  // per node: naxes lo then naxes hi
    static constexpr int kLeafSize = 16;
};

}  // namespace detail

// Max-norm neighbor queries over a DataCloud, with subspace-restricted
// counting for the A and B axis groups. The cloud must outlive the index.
// Queries are const and safe to run concurrently.
class NeighborIndex {
  public:
    explicit NeighborIndex(const DataCloud& cloud, IndexKind kind = IndexKind::kdtree);

    // k-th nearest neighbor distance of point i, self excluded; 1 <= k <= n-1
    double kth_neighbor_distance(int i, int k) const;

    // points j (including j == i) with subspace distance strictly < radius
    int count_within_subspace(int i, double radius, Subspace s) const;

    // k-th smallest joint-space distance from an external query point to the
    // indexed points (nothing excluded); used for cross-set searches
    double kth_distance_from(std::span<const double> query, int k) const;

    int size() const { return cloud_->n; }
    const DataCloud& cloud() const { return *cloud_; }

  private:
    int axis0(Subspace s) const { return s == Subspace::b ? cloud_->d_a : 0; }
    int naxes(Subspace s) const {
        switch (s) {
            case Subspace::joint: return cloud_->d;
            case Subspace::a: return cloud_->d_a;
            default: return cloud_->d - cloud_->d_a;
        }
    }

    const DataCloud* cloud_;
    IndexKind kind_;
    detail::KdTree joint_, tree_a_, tree_b_;
};

// First pair of coincident points (max-norm distance exactly zero), if any.
std::optional<std::pair<int, int>> find_duplicate_pair(const DataCloud& cloud);

// Copy of the cloud with seeded uniform noise of amplitude
// 1e-10 * per-axis range added to every coordinate.
DataCloud jitter_cloud(const DataCloud& cloud, std::uint64_t seed);

}  // namespace phaseinfo
