#include "kbsf/repselect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace kbsf {

namespace {

double wdist2(const State& a, const State& b, const Vec& w) {
    if (w.size() == 0) return (a - b).squaredNorm();
    return ((a - b).cwiseProduct(w)).squaredNorm();
}

std::size_t count_distinct(const std::vector<State>& points) {
    std::vector<const State*> sorted;
    sorted.reserve(points.size());
    for (const auto& p : points) sorted.push_back(&p);
    auto less = [](const State* a, const State* b) {
        return std::lexicographical_compare(a->begin(), a->end(), b->begin(), b->end());
    };
    std::sort(sorted.begin(), sorted.end(), less);
    std::size_t distinct = points.empty() ? 0 : 1;
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (*sorted[i] != *sorted[i - 1]) ++distinct;
    return distinct;
}

std::vector<State> seed_centers(const std::vector<State>& points, int m,
                                std::mt19937_64& rng, bool plusplus, const Vec& w) {
    const std::size_t n = points.size();
    std::vector<State> centers;
    centers.reserve(m);
    if (!plusplus) {
        // plain seeding: random distinct points
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i = 0; i < n && static_cast<int>(centers.size()) < m; ++i) {
            bool dup = false;
            for (const auto& c : centers)
                if (c == points[order[i]]) { dup = true; break; }
            if (!dup) centers.push_back(points[order[i]]);
        }
        return centers;
    }
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    centers.push_back(points[first(rng)]);
    std::vector<double> d2(n);
    while (static_cast<int>(centers.size()) < m) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = wdist2(points[i], centers[0], w);
            for (std::size_t c = 1; c < centers.size(); ++c)
                best = std::min(best, wdist2(points[i], centers[c], w));
            d2[i] = best;
            total += best;
        }
        if (total == 0.0)
            throw std::invalid_argument("kmeans_centers: fewer distinct points than clusters");
        std::uniform_real_distribution<double> u(0.0, total);
        double x = u(rng);
        std::size_t pick = 0;
        for (; pick + 1 < n; ++pick) {
            x -= d2[pick];
            if (x <= 0.0) break;
        }
        while (d2[pick] == 0.0 && pick > 0) --pick;  // never reseed an existing center
        centers.push_back(points[pick]);
    }
    return centers;
}

}  // namespace

std::vector<State> kmeans_centers(const std::vector<State>& points, int m,
                                  std::uint64_t seed, int max_iters,
                                  bool plusplus_seeding, Vec weights) {
    if (points.empty()) throw std::invalid_argument("kmeans_centers: empty point set");
    if (m < 1) throw std::invalid_argument("kmeans_centers: m must be at least 1");
    if (static_cast<std::size_t>(m) > count_distinct(points))
        throw std::invalid_argument("kmeans_centers: more clusters than distinct points");

    std::mt19937_64 rng(seed);
    std::vector<State> centers = seed_centers(points, m, rng, plusplus_seeding, weights);
    const std::size_t n = points.size();
    std::vector<int> assign(n, -1);

    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double bd = wdist2(points[i], centers[0], weights);
            for (int c = 1; c < m; ++c) {
                double d = wdist2(points[i], centers[c], weights);
                if (d < bd) { bd = d; best = c; }
            }
            if (assign[i] != best) { assign[i] = best; changed = true; }
        }
        if (!changed && iter > 0) break;

        std::vector<State> sums(m, State::Zero(points[0].size()));
        std::vector<int> counts(m, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sums[assign[i]] += points[i];
            ++counts[assign[i]];
        }
        for (int c = 0; c < m; ++c) {
            if (counts[c] > 0) {
                centers[c] = sums[c] / counts[c];
                continue;
            }
            // empty cluster: reseed from the point farthest from its center
            std::size_t far = 0;
            double fd = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                double d = wdist2(points[i], centers[assign[i]], weights);
                if (d > fd) { fd = d; far = i; }
            }
            centers[c] = points[far];
            assign[far] = c;
        }
    }
    return centers;
}

std::vector<State> random_subset(const std::vector<State>& points, int m,
                                 std::uint64_t seed) {
    if (m < 0 || static_cast<std::size_t>(m) > points.size())
        throw std::invalid_argument("random_subset: m out of range");
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    // partial Fisher-Yates: the first m entries are a uniform subset
    for (int i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
        std::swap(order[i], order[pick(rng)]);
    }
    std::vector<State> out;
    out.reserve(m);
    for (int i = 0; i < m; ++i) out.push_back(points[order[i]]);
    return out;
}

std::vector<State> grid_centers(const std::vector<std::pair<double, double>>& bounds,
                                const std::vector<int>& counts) {
    if (bounds.empty() || bounds.size() != counts.size())
        throw std::invalid_argument("grid_centers: bounds/counts mismatch");
    const int d = static_cast<int>(bounds.size());
    std::vector<std::vector<double>> axes(d);
    for (int i = 0; i < d; ++i) {
        auto [lo, hi] = bounds[i];
        if (!(lo < hi)) throw std::invalid_argument("grid_centers: low must be below high");
        if (counts[i] < 1) throw std::invalid_argument("grid_centers: counts must be >= 1");
        if (counts[i] == 1) {
            axes[i] = {0.5 * (lo + hi)};
            continue;
        }
        for (int k = 0; k < counts[i]; ++k)
            axes[i].push_back(lo + (hi - lo) * k / (counts[i] - 1));
    }
    std::vector<State> grid;
    std::vector<int> idx(d, 0);
    while (true) {
        State s(d);
        for (int i = 0; i < d; ++i) s(i) = axes[i][idx[i]];
        grid.push_back(s);
        int i = d - 1;
        while (i >= 0 && ++idx[i] == counts[i]) idx[i--] = 0;
        if (i < 0) break;
    }
    return grid;
}

std::vector<State> select_representatives(const SelectionStrategy& strategy,
                                          const std::vector<State>& points,
                                          Vec norm_weights) {
    switch (strategy.kind) {
        case SelectionStrategy::Kind::KMeans:
            return kmeans_centers(points, strategy.m, strategy.seed,
                                  strategy.kmeans_max_iters, strategy.kmeans_plusplus,
                                  std::move(norm_weights));
        case SelectionStrategy::Kind::Random:
            return random_subset(points, strategy.m, strategy.seed);
        case SelectionStrategy::Kind::Grid:
            throw std::invalid_argument(
                "select_representatives: grid selection needs explicit bounds");
    }
    throw std::logic_error("select_representatives: unknown strategy");
}

double kmeans_objective(const std::vector<State>& points,
                        const std::vector<State>& centers, Vec weights) {
    double total = 0.0;
    for (const auto& p : points) {
        double best = wdist2(p, centers[0], weights);
        for (std::size_t c = 1; c < centers.size(); ++c)
            best = std::min(best, wdist2(p, centers[c], weights));
        total += best;
    }
    return total;
}

}  // namespace kbsf
