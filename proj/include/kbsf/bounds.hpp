#pragma once

#include "kbsf/kbrl.hpp"
#include "kbsf/kbsf.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>

namespace kbsf {

// Components of the value-function error bound
//   xi_v = r_error / (1-g) + reward_gap / (1-g)^2 (g/2 p_error + sigma_d)
// where p_error = max_a ||Phat^a - D K^a||_inf (max absolute row sum),
// r_error = max_a ||rhat^a - D rbar^a||_inf, reward_gap is the spread of the
// reduced rewards, and sigma_d the level of stochasticity of D.
struct BoundReport {
    double reward_gap = 0.0;  // max - min over reduced rewards
    double sigma_d = 0.0;
    double p_error = 0.0;
    double r_error = 0.0;
    double xi_v = 0.0;
    double gamma = 0.0;
    std::optional<double> epsilon_qbar;

    // recomputes xi_v from the stored components and compares
    bool consistent(double tol = 1e-12) const;
    nlohmann::json to_json() const;
};

// sigma(D) = max_i (1 - max_j d_ij) over the stacked row blocks.
double sigma_of_d(const std::vector<Mat>& ddot_blocks);

// Bound components from explicit matrices. `ddot`/`kdot` are the per-action
// blocks; Phat^a must carry its nonzero columns in action a's block so that
// D K^a can be formed blockwise.
BoundReport xi_v_from_parts(const std::vector<Mat>& phat_blocks,
                            const std::vector<Vec>& rhat,
                            const std::vector<Mat>& ddot,
                            const std::vector<Mat>& kdot,
                            const std::vector<Vec>& rbar, double gamma);

// Materializes the needed matrices from a KBRL model and a factorization
// over the same samples. Guarded to small models; the bound is a validation
// instrument, not a production path.
BoundReport xi_v_report(const KbrlModel& kbrl, const Factorization& f,
                        const ReducedModel& reduced, int max_states = 2000);

// |Qhat(s,a) - Qtilde(s,a)| <= gamma xi_v.
double prop2_query_bound(const BoundReport& report);

// Bound on max |Q*(s,a) - Qtilde*(s,a)| for two MDPs sharing states,
// actions, and discount:
//   1/(1-g) max_a ||r - rt||_inf + g(2-g)/(2(1-g)^2) R_dif max_a ||P - Pt||_inf
// with R_dif the reward spread of the first MDP.
double two_mdp_q_bound(const FiniteMDP& m, const FiniteMDP& mt);

// Online variant: same components as xi_v but with the two-MDP coefficient
// g(2-g)/2 on the transition error, plus the solve gap epsilon_qbar.
double prop4_online_bound(const KbrlModel& kbrl_t, const Factorization& f_t,
                          const ReducedModel& reduced_t, double epsilon_qbar,
                          int max_states = 2000);
double prop4_from_report(const BoundReport& report, double epsilon_qbar);

// max_{i,a} |Qbar*(i,a) - qbar(i,a)| against a tight solve of the model.
double epsilon_qbar(const ReducedModel& model, double solver_epsilon = 1e-9);

// Width threshold: any tau-bar strictly below the returned value makes the
// kernel mass outside the w nearest representative states less than alpha
// times the mass on them. Requires dist(s,w) < dist(s,w+1) strictly.
// Returns +infinity when both guards are inactive.
double taubar_threshold(const State& s, const RepresentativeSet& reps, int w,
                        double alpha, const KernelSpec& kernel);

// Averager-based bound: given exact order-n factorizations E L^a = P^a and
// E rbb^a = r^a, returns
//   xi'_v = 2g/(1-g) ||v* - u|| + g(1+g)/(1-g) ||v* - vcheck*||
// in the sup norm, with u the fixed point of E reached by power iteration
// from v* and vcheck* the optimal value of (S, A, L^a, rbb^a, g).
double averager_bound(const FiniteMDP& m, const Mat& E, const std::vector<Mat>& L,
                      const std::vector<Vec>& rbb, const SolverConfig& config = {});

// Companion H-matrix reduction: D = E H^T, K^a = H L^a, rbar^a = H rbb^a,
// Pbar^a = K^a D; reports xi'_v alongside ||v* - Gamma D Qbar*||_inf so the
// inequality can be checked.
struct AveragerReduction {
    double xi_prime;
    double reduction_error;  // ||v* - Gamma D Qbar*||_inf
    int m;                   // number of nonzero columns of E
};
AveragerReduction averager_reduction(const FiniteMDP& m, const Mat& E,
                                     const std::vector<Mat>& L,
                                     const std::vector<Vec>& rbb,
                                     const SolverConfig& config = {});

}  // namespace kbsf
