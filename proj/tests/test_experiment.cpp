#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kbsf/experiment.hpp"

#include <nlohmann/json.hpp>

#include <random>
#include <sstream>

using namespace kbsf;

namespace {

// trivially solvable agent stubs for the committee vote
struct FixedAgent final : ActionValueModel {
    int choice;
    int actions;
    FixedAgent(int c, int a) : choice(c), actions(a) {}
    int num_actions() const override { return actions; }
    double q(const State&, int a) const override { return a == choice ? 1.0 : 0.0; }
};

}  // namespace

TEST_CASE("committee vote follows the majority") {
    FixedAgent a0(0, 3), a1(1, 3), a2(0, 3);
    std::mt19937_64 rng(1);
    State s = State::Zero(2);
    CHECK(committee_decide({&a0, &a1, &a2}, s, rng) == 0);
    CHECK(committee_decide({&a1}, s, rng) == 1);
}

TEST_CASE("committee ties break uniformly at random") {
    FixedAgent a0(0, 2), a1(1, 2);
    std::mt19937_64 rng(99);
    State s = State::Zero(2);
    int zeros = 0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t)
        if (committee_decide({&a0, &a1}, s, rng) == 0) ++zeros;
    double freq = static_cast<double>(zeros) / trials;
    CHECK(freq > 0.48);
    CHECK(freq < 0.52);
}

TEST_CASE("aggregate summary statistics") {
    Summary constant = aggregate({2.5, 2.5, 2.5, 2.5});
    CHECK(constant.mean == doctest::Approx(2.5));
    CHECK(constant.half_width_99 == doctest::Approx(0.0));

    Summary two = aggregate({0.0, 2.0});
    CHECK(two.mean == doctest::Approx(1.0));

    Summary one = aggregate({7.0});
    CHECK(one.mean == doctest::Approx(7.0));
    CHECK(one.half_width_99 == 0.0);  // point estimate only
}

TEST_CASE("99% interval covers the true mean about 99% of the time") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal(3.0, 1.5);
    int covered = 0;
    const int resamples = 1000;
    for (int t = 0; t < resamples; ++t) {
        std::vector<double> sample(12);
        for (auto& v : sample) v = normal(rng);
        Summary s = aggregate(sample);
        if (std::abs(s.mean - 3.0) <= s.half_width_99) ++covered;
    }
    double coverage = static_cast<double>(covered) / resamples;
    CHECK(coverage > 0.975);
    CHECK(coverage <= 1.0);
}

TEST_CASE("seed fan-out is deterministic and spread out") {
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 2, 4));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 3));
    CHECK(derive_seed(2, 2, 3) != derive_seed(1, 2, 3));
}

TEST_CASE("collect_samples gathers exactly n transitions across episodes") {
    auto env = make_environment("puddle", 5);
    SampleSet s = collect_samples(*env, 500, 5);
    CHECK(s.total() == 500);
    CHECK(s.num_actions() == 4);
    for (int a = 0; a < 4; ++a) CHECK(s.count(a) > 50);  // roughly uniform
}

TEST_CASE("experiment config JSON round-trip") {
    ExperimentConfig cfg;
    cfg.task = "single_pole";
    cfg.algorithm = "ikbsf";
    cfg.n = 1234;
    cfg.m = 77;
    cfg.tau = 0.5;
    cfg.taubar = 0.25;
    cfg.runs = 3;
    cfg.seed = 99;
    cfg.incremental.t_m = 250;
    cfg.query_mode = "reps";
    ExperimentConfig back = ExperimentConfig::from_json(cfg.to_json());
    CHECK(back.task == cfg.task);
    CHECK(back.algorithm == cfg.algorithm);
    CHECK(back.n == cfg.n);
    CHECK(back.m == cfg.m);
    CHECK(back.tau == cfg.tau);
    CHECK(back.taubar == cfg.taubar);
    CHECK(back.incremental.t_m == cfg.incremental.t_m);
    CHECK(back.query_mode == cfg.query_mode);
}

TEST_CASE("smoke run on the puddle world emits one metric row per run") {
    ExperimentConfig cfg;
    cfg.task = "puddle";
    cfg.algorithm = "kbsf";
    cfg.n = 400;
    cfg.m = 12;
    cfg.tau = 0.1;
    cfg.taubar = 0.1;
    cfg.runs = 1;
    cfg.seed = 3;
    cfg.workers = 1;
    RunResult result = run_experiment(cfg);
    REQUIRE(result.runs.size() == 1);
    CHECK(result.runs[0].final_m == 12);
    std::ostringstream csv;
    write_metrics_csv(result, csv);
    CHECK(csv.str().find("run,mean_return") == 0);
}

TEST_CASE("identical config and seed reproduce identical metrics") {
    ExperimentConfig cfg;
    cfg.task = "puddle";
    cfg.algorithm = "kbsf";
    cfg.n = 300;
    cfg.m = 10;
    cfg.tau = 0.1;
    cfg.taubar = 0.1;
    cfg.runs = 3;
    cfg.seed = 11;
    cfg.workers = 2;
    RunResult a = run_experiment(cfg);
    cfg.workers = 1;  // scheduling must not matter
    RunResult b = run_experiment(cfg);
    std::ostringstream ca, cb;
    write_metrics_csv(a, ca, /*include_timing=*/false);
    write_metrics_csv(b, cb, /*include_timing=*/false);
    CHECK(ca.str() == cb.str());
}

TEST_CASE("committee of size 1 equals the single agent") {
    auto env = make_environment("puddle", 21);
    SampleSet samples = collect_samples(*env, 300, 21);
    KernelSpec tau;
    tau.tau = 0.1;
    std::vector<State> reps_states{};
    for (int a = 0; a < 4 && reps_states.size() < 10; ++a)
        for (const auto& t : samples.transitions(a)) {
            reps_states.push_back(t.end);
            if (reps_states.size() == 10) break;
        }
    RepresentativeSet reps(reps_states, tau);
    KbsfSolution sol = batch_kbsf(samples, reps, tau, 0.99);
    auto agent = make_kbsf_evaluator(sol, samples);
    auto grid = test_state_grid("puddle");

    auto env_a = make_environment("puddle", 5);
    auto env_b = make_environment("puddle", 5);
    EvalResult solo = evaluate_policy(*env_a, *agent, grid, 0.99, 9);
    EvalResult voted = evaluate_committee(*env_b, {agent.get()}, grid, 0.99, 9);
    CHECK(solo.mean_return == voted.mean_return);
    CHECK(solo.success_rate == voted.success_rate);
}

TEST_CASE("kbrl and kbsf agree when the reduction is lossless") {
    // representative states = all sampled end states, tiny tau-bar
    auto env = make_environment("puddle", 31);
    SampleSet samples = collect_samples(*env, 250, 31);
    KernelSpec tau;
    tau.tau = 0.1;
    KbrlModel kbrl = build_kbrl(samples, tau, 0.99);
    solve_kbrl(kbrl, {.epsilon = 1e-8});

    std::vector<State> ends;
    for (int a = 0; a < 4; ++a)
        for (const auto& t : samples.transitions(a)) ends.push_back(t.end);
    KernelSpec tiny;
    tiny.tau = 1e-6;
    RepresentativeSet reps(ends, tiny);
    KbsfSolution sol = batch_kbsf(samples, reps, tau, 0.99, {.epsilon = 1e-8});

    auto kbrl_eval = make_kbrl_evaluator(kbrl);
    auto kbsf_eval = make_kbsf_evaluator(sol, samples);
    auto grid = test_state_grid("puddle");
    auto env_a = make_environment("puddle", 77);
    auto env_b = make_environment("puddle", 77);
    EvalResult ra = evaluate_policy(*env_a, *kbrl_eval, grid, 0.99, 123);
    EvalResult rb = evaluate_policy(*env_b, *kbsf_eval, grid, 0.99, 123);
    CHECK(ra.mean_return == doctest::Approx(rb.mean_return).epsilon(1e-9));
}

TEST_CASE("vectorized evaluators match the reference queries") {
    auto env = make_environment("puddle", 41);
    SampleSet samples = collect_samples(*env, 200, 41);
    KernelSpec tau;
    tau.tau = 0.25;
    KbrlModel kbrl = build_kbrl(samples, tau, 0.99);
    solve_kbrl(kbrl);
    auto eval = make_kbrl_evaluator(kbrl);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 25; ++t) {
        State s(2);
        s << u(rng), u(rng);
        for (int a = 0; a < 4; ++a)
            CHECK(eval->q(s, a) == doctest::Approx(kbrl_q(kbrl, s, a)).epsilon(1e-10));
    }
}
