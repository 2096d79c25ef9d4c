#pragma once

#include "kbsf/core.hpp"

#include <vector>

namespace kbsf {

// Exact k-nearest-neighbor index over a fixed point set (KD-tree with
// median splits). Distances are Euclidean, optionally with per-dimension
// weights; weighted points are rescaled once at build time. The index is
// immutable after construction: growing point sets rebuild explicitly.
class NeighborIndex {
public:
    struct Hit {
        int index;
        double distance;
    };

    NeighborIndex() = default;
    explicit NeighborIndex(std::vector<State> points, Vec weights = Vec());

    // Exact k-NN sorted by nondecreasing distance (ties by lower index).
    // Returns min(k, size()) hits.
    std::vector<Hit> nearest(const State& query, int k) const;

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    int dim() const { return dim_; }
    const State& point(int i) const { return points_.at(i); }
    const std::vector<State>& points() const { return points_; }

private:
    struct Node {
        int left = -1, right = -1;
        int split_dim = 0;
        double split_val = 0.0;
        int begin = 0, end = 0;  // leaf range into order_
        bool leaf = false;
    };

    int build(int begin, int end, std::vector<State>& scaled);
    void search(int node, const Vec& q, int k,
                std::vector<std::pair<double, int>>& heap) const;

    std::vector<State> points_;   // original, unscaled
    std::vector<State> scaled_;   // weight-scaled copies used for metric
    std::vector<int> order_;
    std::vector<Node> nodes_;
    Vec weights_;
    int dim_ = 0;
    int root_ = -1;
};

}  // namespace kbsf
