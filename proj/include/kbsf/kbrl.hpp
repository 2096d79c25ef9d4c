#pragma once

#include "kbsf/core.hpp"
#include "kbsf/dp.hpp"
#include "kbsf/kernel.hpp"

#include <optional>
#include <vector>

namespace kbsf {

// The finite MDP built from sample transitions: one model state per sampled
// end state, stacked action-major (all of action 0's end states first, then
// action 1's, ...). The transition matrix of action a has nonzero columns
// only inside action a's block, so only the n x n_a blocks are stored; the
// full matrices can be materialized for diagnostics.
class KbrlModel {
public:
    KbrlModel(SampleSet samples, KernelSpec kernel, double gamma);

    int num_states() const { return static_cast<int>(end_states_.size()); }
    int num_actions() const { return samples_.num_actions(); }
    double gamma() const { return gamma_; }
    const SampleSet& samples() const { return samples_; }
    const KernelSpec& kernel() const { return kernel_; }

    // Nonzero block of action a's transition matrix (num_states x n_a).
    const Mat& block(int a) const { return blocks_.at(a); }
    // Expected rewards of action a (equals block(a) * sampled rewards of a).
    const Vec& reward(int a) const { return rewards_.at(a); }
    // Index of action a's i-th end state in the stacked ordering.
    std::size_t state_index(int a, std::size_t i) const { return samples_.offset(a) + i; }
    const std::vector<State>& end_states() const { return end_states_; }

    FiniteMDP to_mdp() const;  // materializes full P^a; diagnostics only

    const std::optional<ValueFunction>& vstar() const { return vstar_; }
    void set_vstar(ValueFunction vf) { vstar_ = std::move(vf); }

private:
    SampleSet samples_;
    KernelSpec kernel_;
    double gamma_;
    std::vector<Mat> blocks_;    // per action: num_states x n_a
    std::vector<Vec> rewards_;   // per action: num_states
    std::vector<State> end_states_;
    std::optional<ValueFunction> vstar_;
};

// Builds the model; every action needs at least one transition.
KbrlModel build_kbrl(SampleSet samples, const KernelSpec& kernel, double gamma);

// Solves the model with modified policy iteration on the block structure
// (each backup touches only the n_a nonzero columns per action) and caches
// the result inside the model.
const ValueFunction& solve_kbrl(KbrlModel& model, const SolverConfig& config = {});

// Q(s,a) = sum_i kappa^a(s, s^a_i) [r^a_i + gamma V*(shat^a_i)];
// requires a solved model.
double kbrl_q(const KbrlModel& model, const State& s, int a);

}  // namespace kbsf
