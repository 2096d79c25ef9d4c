#pragma once

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <vector>

namespace kbsf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// A state is a dense coordinate vector; dimensions are fixed per problem
// instance. No [0,1] normalization is enforced here; rescaling (or a
// weighted norm) is the caller's business.
using State = Eigen::VectorXd;

inline constexpr double kDefaultRewardCap = 1e6;

// One observed transition (s, a, r, s').
struct Transition {
    State start;
    int action = 0;
    double reward = 0.0;
    State end;
};

// Per-action lists of sample transitions. All states in one set share the
// same dimension; rewards are capped by a configurable finite bound.
class SampleSet {
public:
    explicit SampleSet(int num_actions, double reward_cap = kDefaultRewardCap);

    void add(Transition t);
    void add(const State& start, int action, double reward, const State& end);

    int num_actions() const { return static_cast<int>(per_action_.size()); }
    std::size_t count(int action) const { return per_action_.at(action).size(); }
    std::size_t total() const { return total_; }
    int dim() const { return dim_; }
    double reward_cap() const { return reward_cap_; }

    const std::vector<Transition>& transitions(int action) const {
        return per_action_.at(action);
    }

    // Offset of action a's block when model states are stacked action-major;
    // offset(num_actions()) == total().
    std::size_t offset(int action) const;

private:
    std::vector<std::vector<Transition>> per_action_;
    std::size_t total_ = 0;
    int dim_ = -1;
    double reward_cap_;
};

// Finite MDP in matrix form: one row-stochastic transition matrix and one
// expected-reward vector per action.
struct FiniteMDP {
    int num_states = 0;
    std::vector<Mat> P;
    std::vector<Vec> r;
    double gamma = 0.0;

    int num_actions() const { return static_cast<int>(P.size()); }

    // Throws if shapes are inconsistent, rows are not stochastic within
    // `stochastic_tol`, or gamma is outside [0, 1).
    void validate(double stochastic_tol = 1e-9) const;
};

struct ValueFunction {
    Vec v;
    Mat Q;  // states x actions; may be empty when only v is known

    bool has_q() const { return Q.size() > 0; }
};

struct Policy {
    std::vector<int> actions;
    double epsilon = 0.0;  // for epsilon-greedy wrappers
};

// Row-wise argmax with ties broken by lowest action index.
Policy greedy_policy(const Mat& Q);

// The max-over-actions operator: v_i = max_j Q_ij.
Vec apply_gamma_operator(const Mat& Q);

// Generates a row-stochastic random MDP; used by tests and diagnostics.
FiniteMDP random_mdp(int num_states, int num_actions, double gamma,
                     std::uint64_t seed, double reward_lo = -1.0,
                     double reward_hi = 1.0);

}  // namespace kbsf
