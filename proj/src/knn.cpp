#include "phaseinfo/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phaseinfo/rng.hpp"

namespace phaseinfo {

namespace detail {

void KdTree::build(const DataCloud& cloud, int axis0, int naxes) {
    data_ = cloud.points.data();
    n_ = cloud.n;
    stride_ = cloud.d;
    axis0_ = axis0;
    naxes_ = naxes;
    idx_.resize(n_);
    std::iota(idx_.begin(), idx_.end(), 0);
    nodes_.clear();
    bounds_.clear();
    if (n_ > 0 && naxes_ > 0) build_node(0, n_);
}

int KdTree::build_node(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({begin, end});
    const std::size_t b0 = bounds_.size();
    bounds_.resize(b0 + 2 * static_cast<std::size_t>(naxes_));
    double* lo = bounds_.data() + b0;
    double* hi = lo + naxes_;
    for (int a = 0; a < naxes_; ++a) {
        lo[a] = hi[a] = point(idx_[begin], a);
    }
    for (int i = begin + 1; i < end; ++i)
        for (int a = 0; a < naxes_; ++a) {
            const double v = point(idx_[i], a);
            if (v < lo[a]) lo[a] = v;
            if (v > hi[a]) hi[a] = v;
        }
    if (end - begin <= kLeafSize) return id;

    int dim = 0;
    double widest = hi[0] - lo[0];
    for (int a = 1; a < naxes_; ++a)
        if (hi[a] - lo[a] > widest) {
            widest = hi[a] - lo[a];
            dim = a;
        }
    if (widest <= 0.0) return id;  // all points coincide in this subspace

    const int mid = begin + (end - begin) / 2;
    std::nth_element(idx_.begin() + begin, idx_.begin() + mid, idx_.begin() + end,
                     [&](int x, int y) { return point(x, dim) < point(y, dim); });
    Node& nd = nodes_[id];
    nd.split_dim = dim;
    nd.split_val = point(idx_[mid], dim);
    const int left = build_node(begin, mid);
    nodes_[id].left = left;
    const int right = build_node(mid, end);
    nodes_[id].right = right;
    return id;
}

double KdTree::min_dist(int node, const double* q) const {
    const double* lo = bounds_.data() + 2 * static_cast<std::size_t>(naxes_) * node;
    const double* hi = lo + naxes_;
    double best = 0.0;
    for (int a = 0; a < naxes_; ++a) {
        // distance to the nearest coordinate in [lo, hi]; same expression
        // family as the leaf predicate so pruning is exact
        double d = 0.0;
        if (q[a] < lo[a])
            d = lo[a] - q[a];
        else if (q[a] > hi[a])
            d = q[a] - hi[a];
        if (d > best) best = d;
    }
    return best;
}

double KdTree::max_dist(int node, const double* q) const {
    const double* lo = bounds_.data() + 2 * static_cast<std::size_t>(naxes_) * node;
    const double* hi = lo + naxes_;
    double best = 0.0;
    for (int a = 0; a < naxes_; ++a) {
        const double dl = q[a] > lo[a] ? q[a] - lo[a] : lo[a] - q[a];
        const double dh = q[a] > hi[a] ? q[a] - hi[a] : hi[a] - q[a];
        const double d = dl > dh ? dl : dh;
        if (d > best) best = d;
    }
    return best;
}

void KdTree::knn_search(int node, const double* q, int self, int k, std::vector<double>& heap) const {
    const Node& nd = nodes_[node];
    if (nd.left < 0) {
        for (int i = nd.begin; i < nd.end; ++i) {
            const int j = idx_[i];
            if (j == self) continue;
            const double d = chebyshev(q, data_ + static_cast<std::size_t>(j) * stride_ + axis0_, naxes_);
            if (static_cast<int>(heap.size()) < k) {
                heap.push_back(d);
                std::push_heap(heap.begin(), heap.end());
            } else if (d < heap.front()) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = d;
                std::push_heap(heap.begin(), heap.end());
            }
        }
        return;
    }
    const int near = q[nd.split_dim] < nd.split_val ? nd.left : nd.right;
    const int far = near == nd.left ? nd.right : nd.left;
    knn_search(near, q, self, k, heap);
    if (static_cast<int>(heap.size()) < k || min_dist(far, q) < heap.front()) knn_search(far, q, self, k, heap);
}

double KdTree::kth_distance(const double* q, int self, int k) const {
    std::vector<double> heap;
    heap.reserve(k);
    knn_search(0, q, self, k, heap);
    return heap.front();
}

int KdTree::count_search(int node, const double* q, double radius) const {
    const Node& nd = nodes_[node];
    if (min_dist(node, q) >= radius) return 0;
    if (max_dist(node, q) < radius) return nd.end - nd.begin;
    if (nd.left < 0) {
        int c = 0;
        for (int i = nd.begin; i < nd.end; ++i)
            if (chebyshev(q, data_ + static_cast<std::size_t>(idx_[i]) * stride_ + axis0_, naxes_) < radius) ++c;
        return c;
    }
    return count_search(nd.left, q, radius) + count_search(nd.right, q, radius);
}

int KdTree::count_within(int self, double radius) const {
    const double* q = data_ + static_cast<std::size_t>(self) * stride_ + axis0_;
    return count_search(0, q, radius);
}

}  // namespace detail

NeighborIndex::NeighborIndex(const DataCloud& cloud, IndexKind kind) : cloud_(&cloud), kind_(kind) {
    if (cloud.n < 1) throw ValidationError("empty cloud");
    if (cloud.d < 1 || cloud.d_a < 0 || cloud.d_a > cloud.d) throw ValidationError("bad cloud axis split");
    if (kind_ == IndexKind::kdtree) {
        joint_.build(cloud, 0, cloud.d);
        tree_a_.build(cloud, 0, cloud.d_a);
        tree_b_.build(cloud, cloud.d_a, cloud.d - cloud.d_a);
    }
}

double NeighborIndex::kth_neighbor_distance(int i, int k) const {
    const int n = cloud_->n;
    if (k < 1 || k >= n) throw KTooLarge("kth_neighbor_distance requires 1 <= k <= n-1, got k=" + std::to_string(k));
    const double* q = cloud_->points.data() + static_cast<std::size_t>(i) * cloud_->d;
    if (kind_ == IndexKind::kdtree) return joint_.kth_distance(q, i, k);
    // serial reference: exhaustive scan
    std::vector<double> dist;
    dist.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        dist.push_back(chebyshev(q, cloud_->points.data() + static_cast<std::size_t>(j) * cloud_->d, cloud_->d));
    }
    std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
    return dist[k - 1];
}

double NeighborIndex::kth_distance_from(std::span<const double> query, int k) const {
    const int n = cloud_->n;
    if (k < 1 || k > n) throw KTooLarge("kth_distance_from requires 1 <= k <= n");
    if (static_cast<int>(query.size()) != cloud_->d) throw ValidationError("query dimension mismatch");
    if (kind_ == IndexKind::kdtree) return joint_.kth_distance(query.data(), -1, k);
    std::vector<double> dist(n);
    for (int j = 0; j < n; ++j)
        dist[j] = chebyshev(query.data(), cloud_->points.data() + static_cast<std::size_t>(j) * cloud_->d, cloud_->d);
    std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
    return dist[k - 1];
}

int NeighborIndex::count_within_subspace(int i, double radius, Subspace s) const {
    if (!(radius > 0.0)) throw ValidationError("count_within_subspace requires radius > 0");
    if (kind_ == IndexKind::kdtree) {
        switch (s) {
            case Subspace::joint: return joint_.count_within(i, radius);
            case Subspace::a: return tree_a_.count_within(i, radius);
            default: return tree_b_.count_within(i, radius);
        }
    }
    const int a0 = axis0(s);
    const int na = naxes(s);
    const double* q = cloud_->points.data() + static_cast<std::size_t>(i) * cloud_->d + a0;
    int count = 0;
    for (int j = 0; j < cloud_->n; ++j)
        if (chebyshev(q, cloud_->points.data() + static_cast<std::size_t>(j) * cloud_->d + a0, na) < radius) ++count;
    return count;
}

std::optional<std::pair<int, int>> find_duplicate_pair(const DataCloud& cloud) {
    NeighborIndex index(cloud);
    for (int i = 0; i < cloud.n; ++i) {
        if (index.kth_neighbor_distance(i, 1) == 0.0) {
            const double* q = cloud.points.data() + static_cast<std::size_t>(i) * cloud.d;
            for (int j = 0; j < cloud.n; ++j) {
                if (j == i) continue;
                if (chebyshev(q, cloud.points.data() + static_cast<std::size_t>(j) * cloud.d, cloud.d) == 0.0)
                    return std::make_pair(std::min(i, j), std::max(i, j));
            }
        }
    }
    return std::nullopt;
}

DataCloud jitter_cloud(const DataCloud& cloud, std::uint64_t seed) {
    DataCloud out = cloud;
    for (int i = 0; i < cloud.n; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        for (int a = 0; a < cloud.d; ++a) {
            const double amp = 1e-10 * cloud.scale[a];
            out(i, a) += rng.uniform(-amp, amp);
        }
    }
    out.compute_scale();
    return out;
}

}  // namespace phaseinfo
