#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kbsf/kbrl.hpp"

#include <random>

using namespace kbsf;

namespace {

State s2(double x, double y) {
    State s(2);
    s << x, y;
    return s;
}

SampleSet random_samples(int n, int actions, int dim, std::uint64_t seed,
                         double reward_lo = -1.0, double reward_hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> rew(reward_lo, reward_hi);
    std::uniform_int_distribution<int> act(0, actions - 1);
    SampleSet samples(actions);
    // guarantee one transition per action
    for (int i = 0; i < n; ++i) {
        State a(dim), b(dim);
        for (int d = 0; d < dim; ++d) {
            a(d) = u(rng);
            b(d) = u(rng);
        }
        samples.add(a, i < actions ? i : act(rng), rew(rng), b);
    }
    return samples;
}

}  // namespace

TEST_CASE("single transition gives the one-state model") {
    SampleSet s(1);
    s.add(s2(0.1, 0.2), 0, 3.5, s2(0.3, 0.4));
    KbrlModel model = build_kbrl(s, KernelSpec{}, 0.9);
    CHECK(model.num_states() == 1);
    CHECK(model.block(0)(0, 0) == doctest::Approx(1.0));
    CHECK(model.reward(0)(0) == doctest::Approx(3.5));
}

TEST_CASE("two equidistant transitions split the mass") {
    // both starts equidistant from both end states
    SampleSet s(1);
    s.add(s2(0.0, 1.0), 0, 1.0, s2(0.0, 0.0));
    s.add(s2(0.0, -1.0), 0, 3.0, s2(0.0, 0.0));
    KbrlModel model = build_kbrl(s, KernelSpec{}, 0.9);
    for (int i = 0; i < 2; ++i) {
        CHECK(model.block(0)(i, 0) == doctest::Approx(0.5));
        CHECK(model.block(0)(i, 1) == doctest::Approx(0.5));
        CHECK(model.reward(0)(i) == doctest::Approx(2.0));
    }
}

TEST_CASE("block structure: zeros outside the action block") {
    SampleSet s(2);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 3; ++i) s.add(s2(u(rng), u(rng)), 0, u(rng), s2(u(rng), u(rng)));
    for (int i = 0; i < 2; ++i) s.add(s2(u(rng), u(rng)), 1, u(rng), s2(u(rng), u(rng)));
    KbrlModel model = build_kbrl(s, KernelSpec{}, 0.9);
    FiniteMDP mdp = model.to_mdp();
    REQUIRE(mdp.num_states == 5);
    // action 0: columns 3..4 are zero; action 1: columns 0..2 are zero
    CHECK(mdp.P[0].rightCols(2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(mdp.P[1].leftCols(3).cwiseAbs().maxCoeff() == 0.0);
    mdp.validate(1e-9);
}

TEST_CASE("reward vectors satisfy rhat = Phat r to 1e-12") {
    SampleSet s = random_samples(40, 3, 2, 17);
    KbrlModel model = build_kbrl(s, KernelSpec{}, 0.9);
    FiniteMDP mdp = model.to_mdp();
    Vec stacked(static_cast<Eigen::Index>(s.total()));
    Eigen::Index pos = 0;
    for (int a = 0; a < 3; ++a)
        for (const auto& t : s.transitions(a)) stacked(pos++) = t.reward;
    for (int a = 0; a < 3; ++a)
        CHECK((mdp.P[a] * stacked - model.reward(a)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("an action with no transitions is a configuration error") {
    SampleSet s(2);
    s.add(s2(0, 0), 0, 0.0, s2(1, 1));
    CHECK_THROWS_AS(build_kbrl(s, KernelSpec{}, 0.9), std::invalid_argument);
}

TEST_CASE("block solver matches the materialized dp solve") {
    SampleSet s = random_samples(30, 2, 2, 23);
    KbrlModel model = build_kbrl(s, KernelSpec{}, 0.9);
    solve_kbrl(model, {.epsilon = 1e-8});
    ValueFunction oracle = value_iteration(model.to_mdp(), {.epsilon = 1e-10});
    CHECK((model.vstar()->v - oracle.v).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("zero rewards solve to zero") {
    SampleSet s = random_samples(20, 2, 2, 29, 0.0, 0.0);
    KbrlModel model = build_kbrl(s, KernelSpec{}, 0.95);
    solve_kbrl(model);
    CHECK(model.vstar()->v.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("gamma = 0 reduces the solve to one backup") {
    SampleSet s = random_samples(15, 2, 2, 31);
    KbrlModel model = build_kbrl(s, KernelSpec{}, 0.0);
    solve_kbrl(model);
    // oracle: V(shat^a_i) = max_b sum_j kappa^b(shat^a_i, s^b_j) r^b_j
    FiniteMDP mdp = model.to_mdp();
    Vec expect = apply_gamma_operator(bellman_backup(mdp, Vec::Zero(mdp.num_states)));
    CHECK((model.vstar()->v - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("kbrl_q basics") {
    SampleSet s(1);
    s.add(s2(0.5, 0.5), 0, 2.0, s2(0.9, 0.9));
    KbrlModel model = build_kbrl(s, KernelSpec{}, 0.0);
    CHECK_THROWS_AS(kbrl_q(model, s2(0, 0), 0), std::logic_error);  // unsolved
    solve_kbrl(model);
    // gamma = 0 and a single transition: q is the reward everywhere
    CHECK(kbrl_q(model, s2(0.0, 0.0), 0) == doctest::Approx(2.0));
    CHECK(kbrl_q(model, s2(0.7, 0.1), 0) == doctest::Approx(2.0));
}

TEST_CASE("narrow kernels concentrate the query on the nearest transition") {
    SampleSet s(1);
    s.add(s2(0.2, 0.2), 0, 1.0, s2(0.25, 0.2));
    s.add(s2(0.8, 0.8), 0, -1.0, s2(0.75, 0.8));
    KernelSpec narrow;
    narrow.tau = 1e-3;
    KbrlModel model = build_kbrl(s, narrow, 0.9);
    solve_kbrl(model);
    double v0 = model.vstar()->v(0);
    CHECK(kbrl_q(model, s2(0.2, 0.2), 0) ==
          doctest::Approx(1.0 + 0.9 * v0).epsilon(1e-9));
}

TEST_CASE("query equidistant from identical-reward transitions averages them") {
    SampleSet s(1);
    s.add(s2(0.0, 1.0), 0, 2.0, s2(5.0, 5.0));
    s.add(s2(0.0, -1.0), 0, 2.0, s2(-5.0, -5.0));
    KbrlModel model = build_kbrl(s, KernelSpec{}, 0.9);
    solve_kbrl(model);
    double expected = 0.5 * (2.0 + 0.9 * model.vstar()->v(0)) +
                      0.5 * (2.0 + 0.9 * model.vstar()->v(1));
    CHECK(kbrl_q(model, s2(0.0, 0.0), 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("hand-built 3-transition model matches the dp oracle") {
    SampleSet s(1);
    s.add(s2(0.1, 0.1), 0, 1.0, s2(0.2, 0.2));
    s.add(s2(0.5, 0.5), 0, -1.0, s2(0.6, 0.6));
    s.add(s2(0.9, 0.9), 0, 0.5, s2(0.1, 0.9));
    KbrlModel model = build_kbrl(s, KernelSpec{}, 0.9);
    solve_kbrl(model, {.epsilon = 1e-9});
    ValueFunction oracle = value_iteration(model.to_mdp(), {.epsilon = 1e-12});
    CHECK((model.vstar()->v - oracle.v).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("duplicate sampled states stay distinct model states") {
    SampleSet s(1);
    for (int i = 0; i < 3; ++i) s.add(s2(0.5, 0.5), 0, 1.0, s2(0.5, 0.5));
    KbrlModel model = build_kbrl(s, KernelSpec{}, 0.9);
    CHECK(model.num_states() == 3);
}
