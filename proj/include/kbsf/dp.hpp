#pragma once

#include "kbsf/core.hpp"

#include <functional>
#include <optional>
#include <utility>

namespace kbsf {

struct SolverConfig {
    double epsilon = 1e-6;           // stop tolerance
    int max_policy_iterations = 30;  // outer loop cap for policy iteration
    int inner_eval_sweeps = 20;      // partial-evaluation sweeps per outer step
    std::optional<Vec> warm_start;   // initial value function
    long max_value_iterations = 2'000'000;  // safety cap
};

// One application of the backup operator: Q_ia = r^a_i + gamma (P^a v)_i.
Mat bellman_backup(const FiniteMDP& m, const Vec& v);

// Value iteration with the successive-iterate stop rule
//   ||v_{t+1} - v_t||_inf <= eps (1 - gamma) / (2 gamma),
// which leaves the returned v within eps/2 of v* in the sup norm
// (Puterman, Prop. 6.6.5). For gamma = 0 a single backup is exact.
ValueFunction value_iteration(const FiniteMDP& m, const SolverConfig& config = {});

// Modified policy iteration: greedy improvement followed by a fixed number
// of partial-evaluation sweeps, stopped by the same criterion as value
// iteration. Accepts a warm-start value function.
std::pair<ValueFunction, Policy> modified_policy_iteration(const FiniteMDP& m,
                                                           const SolverConfig& config = {});

namespace detail {

// Shared solver drivers over an abstract backup, so block-structured models
// can reuse the exact same stop rules.
using BackupFn = std::function<Mat(const Vec&)>;
// Applies one evaluation sweep v <- r^pi + gamma P^pi v for a fixed policy.
using PolicySweepFn = std::function<Vec(const Policy&, const Vec&)>;

ValueFunction run_value_iteration(const BackupFn& backup, int num_states, double gamma,
                                  const SolverConfig& config);
std::pair<ValueFunction, Policy> run_modified_policy_iteration(
    const BackupFn& backup, const PolicySweepFn& sweep, int num_states, double gamma,
    double reward_floor, const SolverConfig& config);

}  // namespace detail

}  // namespace kbsf
