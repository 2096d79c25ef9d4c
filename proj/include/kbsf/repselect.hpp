#pragma once

#include "kbsf/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kbsf {

// Strategies for placing representative states.
struct SelectionStrategy {
    enum class Kind { KMeans, Random, Grid };
    Kind kind = Kind::KMeans;
    int m = 100;
    std::uint64_t seed = 0;
    int kmeans_max_iters = 100;
    bool kmeans_plusplus = true;  // plain random seeding behind this flag
};

// Lloyd's algorithm with k-means++ seeding; deterministic under the seed.
// `weights` rescales coordinates before distances are taken (the same norm
// the kernels use). Empty clusters are repaired by reseeding from the point
// farthest from its assigned center.
std::vector<State> kmeans_centers(const std::vector<State>& points, int m,
                                  std::uint64_t seed, int max_iters = 100,
                                  bool plusplus_seeding = true, Vec weights = Vec());

// m distinct points drawn uniformly without replacement.
std::vector<State> random_subset(const std::vector<State>& points, int m,
                                 std::uint64_t seed);

// Cartesian product of evenly spaced per-dimension coordinates, endpoints
// inclusive; a count of 1 places the midpoint.
std::vector<State> grid_centers(const std::vector<std::pair<double, double>>& bounds,
                                const std::vector<int>& counts);

// Dispatches on the strategy kind; Grid needs bounds instead of points and
// is not reachable from here.
std::vector<State> select_representatives(const SelectionStrategy& strategy,
                                          const std::vector<State>& points,
                                          Vec norm_weights = Vec());

// Sum of squared (weighted) distances from each point to its closest center.
double kmeans_objective(const std::vector<State>& points,
                        const std::vector<State>& centers, Vec weights = Vec());

}  // namespace kbsf
