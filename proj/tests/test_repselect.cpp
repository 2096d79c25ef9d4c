#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kbsf/repselect.hpp"

#include <algorithm>
#include <random>

using namespace kbsf;

namespace {
State s1d(double x) {
    State s(1);
    s << x;
    return s;
}
}  // namespace

TEST_CASE("kmeans with m equal to the distinct point count returns the points") {
    std::vector<State> pts{s1d(0.0), s1d(1.0), s1d(2.0), s1d(1.0)};
    auto centers = kmeans_centers(pts, 3, 42);
    REQUIRE(centers.size() == 3);
    std::vector<double> got;
    for (const auto& c : centers) got.push_back(c(0));
    std::sort(got.begin(), got.end());
    CHECK(got[0] == doctest::Approx(0.0));
    CHECK(got[1] == doctest::Approx(1.0));
    CHECK(got[2] == doctest::Approx(2.0));
}

TEST_CASE("two well-separated pairs cluster at their midpoints") {
    std::vector<State> pts{s1d(0.0), s1d(0.1), s1d(10.0), s1d(10.1)};
    auto centers = kmeans_centers(pts, 2, 7);
    std::vector<double> got{centers[0](0), centers[1](0)};
    std::sort(got.begin(), got.end());
    CHECK(got[0] == doctest::Approx(0.05));
    CHECK(got[1] == doctest::Approx(10.05));
}

TEST_CASE("m = 1 returns the centroid") {
    std::vector<State> pts{s1d(1.0), s1d(2.0), s1d(6.0)};
    auto centers = kmeans_centers(pts, 1, 3);
    CHECK(centers[0](0) == doctest::Approx(3.0));
}

TEST_CASE("kmeans rejects more clusters than distinct points") {
    std::vector<State> pts{s1d(1.0), s1d(1.0), s1d(2.0)};
    CHECK_THROWS_AS(kmeans_centers(pts, 3, 1), std::invalid_argument);
}

TEST_CASE("kmeans is deterministic under a fixed seed and locally optimal") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<State> pts;
    for (int i = 0; i < 200; ++i) {
        State s(2);
        s << u(rng), u(rng);
        pts.push_back(s);
    }
    auto a = kmeans_centers(pts, 10, 99, 500);
    auto b = kmeans_centers(pts, 10, 99, 500);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

    // local optimum: every center is the mean of the points assigned to it
    std::vector<State> sums(a.size(), State::Zero(2));
    std::vector<int> counts(a.size(), 0);
    for (const auto& p : pts) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < a.size(); ++c)
            if ((p - a[c]).squaredNorm() < (p - a[best]).squaredNorm()) best = c;
        sums[best] += p;
        ++counts[best];
    }
    for (std::size_t c = 0; c < a.size(); ++c) {
        REQUIRE(counts[c] > 0);
        CHECK((sums[c] / counts[c] - a[c]).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("kmeans objective decreases monotonically in iterations") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<State> pts;
    for (int i = 0; i < 150; ++i) {
        State s(2);
        s << u(rng), u(rng);
        pts.push_back(s);
    }
    double prev = std::numeric_limits<double>::infinity();
    for (int iters = 1; iters <= 20; iters += 3) {
        double obj = kmeans_objective(pts, kmeans_centers(pts, 8, 11, iters));
        CHECK(obj <= prev + 1e-9);
        prev = obj;
    }
}

TEST_CASE("random_subset basics") {
    std::vector<State> pts;
    for (int i = 0; i < 10; ++i) pts.push_back(s1d(i));
    auto all = random_subset(pts, 10, 5);
    CHECK(all.size() == 10);
    std::vector<double> vals;
    for (const auto& s : all) vals.push_back(s(0));
    std::sort(vals.begin(), vals.end());
    for (int i = 0; i < 10; ++i) CHECK(vals[i] == doctest::Approx(i));

    auto a = random_subset(pts, 4, 123);
    auto b = random_subset(pts, 4, 123);
    for (int i = 0; i < 4; ++i) CHECK(a[i] == b[i]);

    CHECK_THROWS_AS(random_subset(pts, 11, 1), std::invalid_argument);
}

TEST_CASE("random_subset draws uniformly (frequency test)") {
    std::vector<State> pts;
    for (int i = 0; i < 10; ++i) pts.push_back(s1d(i));
    std::vector<int> histogram(10, 0);
    const int draws = 10000;
    for (int t = 0; t < draws; ++t) {
        auto one = random_subset(pts, 1, 777 + t);
        ++histogram[static_cast<int>(one[0](0))];
    }
    for (int i = 0; i < 10; ++i) {
        double freq = static_cast<double>(histogram[i]) / draws;
        CHECK(freq > 0.085);
        CHECK(freq < 0.115);
    }
}

TEST_CASE("grid_centers spans the box endpoints inclusive") {
    auto g2 = grid_centers({{0.0, 1.0}}, {2});
    REQUIRE(g2.size() == 2);
    CHECK(g2[0](0) == doctest::Approx(0.0));
    CHECK(g2[1](0) == doctest::Approx(1.0));

    auto g3 = grid_centers({{0.0, 1.0}}, {3});
    REQUIRE(g3.size() == 3);
    CHECK(g3[1](0) == doctest::Approx(0.5));

    auto corners = grid_centers({{0.0, 1.0}, {0.0, 1.0}}, {2, 2});
    CHECK(corners.size() == 4);

    CHECK_THROWS_AS(grid_centers({{1.0, 0.0}}, {2}), std::invalid_argument);
}
