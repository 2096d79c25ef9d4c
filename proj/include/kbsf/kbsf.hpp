#pragma once

#include "kbsf/core.hpp"
#include "kbsf/dp.hpp"
#include "kbsf/kbrl.hpp"
#include "kbsf/kernel.hpp"

#include <nlohmann/json_fwd.hpp>

#include <iosfwd>
#include <vector>

namespace kbsf {

// The m anchor states of the reduced model together with the kernel
// (tau-bar, mu-bar) used to smooth onto them.
class RepresentativeSet {
public:
    RepresentativeSet() = default;
    RepresentativeSet(std::vector<State> states, KernelSpec kernel);

    int size() const { return static_cast<int>(states_.size()); }
    const std::vector<State>& states() const { return states_; }
    const State& state(int i) const { return states_.at(i); }
    const KernelSpec& kernel() const { return kernel_; }
    const NeighborIndex& index() const { return index_; }

    // Appends one state and rebuilds the spatial index; duplicates rejected.
    void add_state(const State& s);

    // Normalized kernel row over the representative states, plus raw mass.
    Vec smoothing_row(const State& s, double& raw_mass) const;
    Vec smoothing_row(const State& s) const;

private:
    std::vector<State> states_;
    KernelSpec kernel_;
    NeighborIndex index_;
};

// The two stochastic factors and reduced rewards of Algorithm 1:
//   kdot[a](i,j) = kappa^a_tau(rep_i, s^a_j)      (m x n_a)
//   ddot[a](i,j) = kappa-bar_taubar(shat^a_i, rep_j)  (n_a x m)
//   rbar[a] = kdot[a] * r^a
// kmass[a](i) holds the raw kernel mass sum_j k_tau(rep_i, s^a_j), the
// accumulator the incremental updates carry forward.
struct Factorization {
    std::vector<Mat> kdot;
    std::vector<Mat> ddot;
    std::vector<Vec> rbar;
    std::vector<Vec> kmass;

    int order() const { return kdot.empty() ? 0 : static_cast<int>(kdot[0].rows()); }
    int num_actions() const { return static_cast<int>(kdot.size()); }
};

// The m-state MDP produced by swapping the factors, with everything needed
// to keep absorbing data incrementally: the kernel-mass accumulators w and
// the last computed action-value matrix qbar (m x |A|).
struct ReducedModel {
    FiniteMDP mdp;
    RepresentativeSet reps;
    KernelSpec sample_kernel;  // tau/mu side, used by updates
    std::vector<Vec> w;
    Mat qbar;
    bool solved = false;

    int num_states() const { return mdp.num_states; }
    int num_actions() const { return mdp.num_actions(); }

    // Rows with w == 0 carry no information yet; for solving they are
    // patched into zero-reward self-loops.
    std::vector<std::pair<int, int>> zero_mass_rows() const;  // (action, row)
    FiniteMDP solver_mdp() const;

    // Solves the (patched) reduced MDP with warm-started modified policy
    // iteration and stores the result in qbar.
    const Mat& solve(const SolverConfig& config = {});

    nlohmann::json to_json() const;
    static ReducedModel from_json(const nlohmann::json& j);
    void save(std::ostream& out) const;
    static ReducedModel load(std::istream& in);
};

Factorization build_factorization(const SampleSet& samples, const RepresentativeSet& reps,
                                  const KernelSpec& sample_kernel);

// P-bar^a = kdot[a] * ddot[a]; rewards copied. The matrix products switch to
// extended-precision accumulation for large blocks.
FiniteMDP swap_factors_mdp(const Factorization& f, double gamma);
ReducedModel swap_factors(const Factorization& f, RepresentativeSet reps,
                          KernelSpec sample_kernel, double gamma);

struct KbsfSolution {
    ReducedModel model;
    Vec vtilde;  // value estimate at every sampled end state, action-major
};

// Algorithm 1 end to end: factorize, swap, solve, and return
// vtilde = Gamma(D Qbar*), computed blockwise (D is never materialized).
KbsfSolution batch_kbsf(const SampleSet& samples, RepresentativeSet reps,
                        const KernelSpec& sample_kernel, double gamma,
                        const SolverConfig& config = {});

// Recomputes vtilde for a solved model from retained samples.
Vec compute_vtilde(const ReducedModel& model, const SampleSet& samples);

// Qtilde(s,a) = sum_i kappa^a_tau(s, s^a_i) [r^a_i + gamma vtilde(shat^a_i)].
double kbsf_q(const KbsfSolution& solution, const SampleSet& samples, const State& s, int a);

// Convex combination of rows; equals a row of (D K) when the weights are the
// matching row of D.
Vec nadaraya_watson_row(const std::vector<Vec>& rows, const Vec& weights);

}  // namespace kbsf
