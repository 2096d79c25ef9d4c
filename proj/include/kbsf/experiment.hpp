#pragma once

#include "kbsf/bounds.hpp"
#include "kbsf/environment.hpp"
#include "kbsf/ikbsf.hpp"
#include "kbsf/kbrl.hpp"
#include "kbsf/kbsf.hpp"
#include "kbsf/repselect.hpp"

#include <nlohmann/json_fwd.hpp>

#include <memory>
#include <random>
#include <string>

namespace kbsf {

// Deterministic seed fan-out: run seeds derive from the master seed and the
// run index, so results do not depend on worker scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

// Collects n transitions with a uniform-random exploration policy,
// resetting on episode ends.
SampleSet collect_samples(Environment& env, std::size_t n, std::uint64_t seed);

// Greedy-action provider over a learned value function; implementations
// wrap KBRL queries, full KBSF queries, or the representative-state query.
class ActionValueModel {
public:
    virtual ~ActionValueModel() = default;
    virtual int num_actions() const = 0;
    virtual double q(const State& s, int a) const = 0;
    virtual int greedy_action(const State& s) const;  // ties to lowest index
};

std::unique_ptr<ActionValueModel> make_kbrl_evaluator(const KbrlModel& model);
std::unique_ptr<ActionValueModel> make_kbsf_evaluator(const KbsfSolution& solution,
                                                      const SampleSet& samples);
std::unique_ptr<ActionValueModel> make_reps_evaluator(const ReducedModel& model);

// Plurality vote over the agents' greedy actions; exact ties are resolved
// uniformly at random with the supplied RNG.
int committee_decide(const std::vector<const ActionValueModel*>& agents, const State& s,
                     std::mt19937_64& rng);

struct EvalResult {
    double mean_return = 0.0;   // discounted return averaged over test states
    double success_rate = 0.0;  // fraction of test states ending in the goal
};

// Rolls out the greedy policy once from every test state.
EvalResult evaluate_policy(Environment& env, const ActionValueModel& model,
                           const std::vector<State>& test_states, double gamma,
                           std::uint64_t seed);
EvalResult evaluate_committee(Environment& env,
                              const std::vector<const ActionValueModel*>& agents,
                              const std::vector<State>& test_states, double gamma,
                              std::uint64_t seed);

struct ExperimentConfig {
    std::string task = "puddle";
    std::string algorithm = "kbsf";  // kbrl | kbsf | ikbsf
    std::size_t n = 8000;
    int m = 100;
    double tau = 0.1;
    double taubar = 0.1;
    int mu = 0;
    int mubar = 0;
    SelectionStrategy selection;
    double gamma = -1.0;  // < 0: use the task's recommendation
    int runs = 50;
    std::uint64_t seed = 1;
    int committee = 1;
    int workers = 2;
    // "full": kernel query over retained samples; "reps": representative-
    // state query (the discard-samples mode); "auto" picks full for puddle
    // and reps for the pole tasks.
    std::string query_mode = "auto";
    SolverConfig solver;
    IncrementalConfig incremental;
    std::string out_dir;

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    void validate() const;
};

struct RunMetrics {
    int run = 0;
    double mean_return = 0.0;
    double success_rate = 0.0;
    double build_seconds = 0.0;  // representative selection + model build
    double solve_seconds = 0.0;
    int final_m = 0;
};

struct RunResult {
    ExperimentConfig config;
    std::vector<RunMetrics> runs;
};

RunResult run_experiment(const ExperimentConfig& config);

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;
    double half_width_99 = 0.0;  // 99% t-interval half width; 0 for a single run
    int count = 0;
};
Summary aggregate(const std::vector<double>& values);

// Returns the per-run metric column used to rank configurations (mean
// return for puddle, success rate for the pole tasks).
std::vector<double> headline_metric(const RunResult& result);

// Metrics CSV: one row per run. Timing columns can be suppressed so
// instrumented and uninstrumented outputs are comparable.
void write_metrics_csv(const RunResult& result, std::ostream& out,
                       bool include_timing = true);

}  // namespace kbsf
