#include "kbsf/dp.hpp"

#include <cmath>
#include <limits>

namespace kbsf {

Mat bellman_backup(const FiniteMDP& m, const Vec& v) {
    if (v.size() != m.num_states)
        throw std::invalid_argument("bellman_backup: value vector length mismatch");
    Mat Q(m.num_states, m.num_actions());
    for (int a = 0; a < m.num_actions(); ++a)
        Q.col(a) = m.r[a] + m.gamma * (m.P[a] * v);
    return Q;
}

namespace detail {

namespace {
double stop_threshold(double epsilon, double gamma) {
    if (gamma <= 0.0) return epsilon;  // one exact backup suffices anyway
    return epsilon * (1.0 - gamma) / (2.0 * gamma);
}
}  // namespace

ValueFunction run_value_iteration(const BackupFn& backup, int num_states, double gamma,
                                  const SolverConfig& config) {
    if (!(config.epsilon > 0.0))
        throw std::invalid_argument("SolverConfig: epsilon must be positive");
    Vec v = config.warm_start ? *config.warm_start : Vec(Vec::Zero(num_states));
    if (v.size() != num_states)
        throw std::invalid_argument("SolverConfig: warm start length mismatch");
    const double thr = stop_threshold(config.epsilon, gamma);
    Mat Q;
    for (long it = 0; it < config.max_value_iterations; ++it) {
        Q = backup(v);
        Vec v_next = apply_gamma_operator(Q);
        double delta = (v_next - v).cwiseAbs().maxCoeff();
        v = std::move(v_next);
        if (delta <= thr || gamma == 0.0) return ValueFunction{std::move(v), std::move(Q)};
    }
    throw std::runtime_error("value_iteration: iteration cap reached before convergence");
}

std::pair<ValueFunction, Policy> run_modified_policy_iteration(
    const BackupFn& backup, const PolicySweepFn& sweep, int num_states, double gamma,
    double reward_floor, const SolverConfig& config) {
    if (!(config.epsilon > 0.0))
        throw std::invalid_argument("SolverConfig: epsilon must be positive");
    if (config.max_policy_iterations < 1 || config.inner_eval_sweeps < 1)
        throw std::invalid_argument("SolverConfig: iteration counts must be at least 1");

    // Without a warm start, begin below v* so the outer iteration is
    // monotone (Puterman 6.5); with one, trust the caller's vector.
    Vec v;
    if (config.warm_start) {
        v = *config.warm_start;
        if (v.size() != num_states)
            throw std::invalid_argument("SolverConfig: warm start length mismatch");
    } else {
        double floor = gamma < 1.0 ? reward_floor / (1.0 - gamma) : reward_floor;
        v = Vec::Constant(num_states, std::min(floor, 0.0));
    }

    const double thr = stop_threshold(config.epsilon, gamma);
    Mat Q;
    Policy pi;
    for (int outer = 0; outer < config.max_policy_iterations; ++outer) {
        Q = backup(v);
        pi = greedy_policy(Q);
        Vec v_next = apply_gamma_operator(Q);
        double delta = (v_next - v).cwiseAbs().maxCoeff();
        if (delta <= thr || gamma == 0.0)
            return {ValueFunction{std::move(v_next), std::move(Q)}, std::move(pi)};
        for (int s = 0; s < config.inner_eval_sweeps; ++s) v_next = sweep(pi, v_next);
        v = std::move(v_next);
    }
    // Outer cap hit: polish with value iteration from the current iterate so
    // callers still get a value function satisfying the stop rule.
    SolverConfig vi = config;
    vi.warm_start = v;
    ValueFunction vf = run_value_iteration(backup, num_states, gamma, vi);
    Policy final_pi = greedy_policy(vf.Q);
    return {std::move(vf), std::move(final_pi)};
}

}  // namespace detail

ValueFunction value_iteration(const FiniteMDP& m, const SolverConfig& config) {
    m.validate();
    return detail::run_value_iteration(
        [&m](const Vec& v) { return bellman_backup(m, v); }, m.num_states, m.gamma, config);
}

std::pair<ValueFunction, Policy> modified_policy_iteration(const FiniteMDP& m,
                                                           const SolverConfig& config) {
    m.validate();
    double floor = std::numeric_limits<double>::infinity();
    for (const auto& r : m.r) floor = std::min(floor, r.minCoeff());
    auto backup = [&m](const Vec& v) { return bellman_backup(m, v); };
    auto sweep = [&m](const Policy& pi, const Vec& v) {
        Vec out(m.num_states);
        for (int i = 0; i < m.num_states; ++i) {
            int a = pi.actions[i];
            out(i) = m.r[a](i) + m.gamma * m.P[a].row(i).dot(v);
        }
        return out;
    };
    return detail::run_modified_policy_iteration(backup, sweep, m.num_states, m.gamma,
                                                 floor, config);
}

}  // namespace kbsf
