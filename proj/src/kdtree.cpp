#include "kbsf/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kbsf {

namespace {
constexpr int kLeafSize = 16;

double sq_dist(const Vec& a, const Vec& b) {
    return (a - b).squaredNorm();
}
}  // namespace

NeighborIndex::NeighborIndex(std::vector<State> points, Vec weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.empty()) return;
    dim_ = static_cast<int>(points_[0].size());
    for (const auto& p : points_)
        if (p.size() != dim_)
            throw std::invalid_argument("NeighborIndex: inconsistent point dimensions");
    if (weights_.size() != 0 && weights_.size() != dim_)
        throw std::invalid_argument("NeighborIndex: weight vector dimension mismatch");

    scaled_ = points_;
    if (weights_.size() != 0)
        for (auto& p : scaled_) p = p.cwiseProduct(weights_);

    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * points_.size() / kLeafSize + 4);
    root_ = build(0, static_cast<int>(points_.size()), scaled_);
}

int NeighborIndex::build(int begin, int end, std::vector<State>& scaled) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin <= kLeafSize) {
        node.leaf = true;
        nodes_.push_back(node);
        return static_cast<int>(nodes_.size()) - 1;
    }

    // split on the dimension with the widest spread
    Vec lo = scaled[order_[begin]], hi = scaled[order_[begin]];
    for (int i = begin + 1; i < end; ++i) {
        lo = lo.cwiseMin(scaled[order_[i]]);
        hi = hi.cwiseMax(scaled[order_[i]]);
    }
    int sd = 0;
    (hi - lo).maxCoeff(&sd);
    if (hi(sd) == lo(sd)) {  // all points identical: degenerate leaf
        node.leaf = true;
        nodes_.push_back(node);
        return static_cast<int>(nodes_.size()) - 1;
    }
    int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) { return scaled[a](sd) < scaled[b](sd); });
    node.split_dim = sd;
    node.split_val = scaled[order_[mid]](sd);
    int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    int left = build(begin, mid, scaled);
    int right = build(mid, end, scaled);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
}

void NeighborIndex::search(int node_id, const Vec& q, int k,
                           std::vector<std::pair<double, int>>& heap) const {
    const Node& node = nodes_[node_id];
    if (node.leaf) {
        for (int i = node.begin; i < node.end; ++i) {
            int idx = order_[i];
            double d2 = sq_dist(scaled_[idx], q);
            std::pair<double, int> cand{d2, idx};
            if (static_cast<int>(heap.size()) < k) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end());
            } else if (cand < heap.front()) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end());
            }
        }
        return;
    }
    double diff = q(node.split_dim) - node.split_val;
    int near = diff < 0.0 ? node.left : node.right;
    int far = diff < 0.0 ? node.right : node.left;
    search(near, q, k, heap);
    if (static_cast<int>(heap.size()) < k || diff * diff <= heap.front().first)
        search(far, q, k, heap);
}

std::vector<NeighborIndex::Hit> NeighborIndex::nearest(const State& query, int k) const {
    if (empty()) throw std::invalid_argument("NeighborIndex: query on empty index");
    if (k < 1) throw std::invalid_argument("NeighborIndex: k must be at least 1");
    if (query.size() != dim_)
        throw std::invalid_argument("NeighborIndex: query dimension mismatch");

    Vec q = weights_.size() != 0 ? Vec(query.cwiseProduct(weights_)) : Vec(query);
    k = std::min<int>(k, static_cast<int>(size()));

    std::vector<std::pair<double, int>> heap;  // max-heap on (d2, index)
    heap.reserve(k);
    search(root_, q, k, heap);
    std::sort(heap.begin(), heap.end());
    std::vector<Hit> hits;
    hits.reserve(heap.size());
    for (const auto& [d2, idx] : heap) hits.push_back({idx, std::sqrt(d2)});
    return hits;
}

}  // namespace kbsf
