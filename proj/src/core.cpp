#include "kbsf/core.hpp"

#include <cmath>
#include <random>

namespace kbsf {

SampleSet::SampleSet(int num_actions, double reward_cap)
    : per_action_(num_actions), reward_cap_(reward_cap) {
    if (num_actions < 1) throw std::invalid_argument("SampleSet: need at least one action");
    if (!(reward_cap > 0.0)) throw std::invalid_argument("SampleSet: reward cap must be positive");
}

void SampleSet::add(Transition t) {
    if (t.action < 0 || t.action >= num_actions())
        throw std::invalid_argument("SampleSet: action index out of range");
    if (!t.start.allFinite() || !t.end.allFinite())
        throw std::invalid_argument("SampleSet: non-finite state");
    if (!(std::abs(t.reward) <= reward_cap_))
        throw std::invalid_argument("SampleSet: reward exceeds configured cap");
    if (dim_ < 0) dim_ = static_cast<int>(t.start.size());
    if (t.start.size() != dim_ || t.end.size() != dim_)
        throw std::invalid_argument("SampleSet: state dimension mismatch");
    per_action_[t.action].push_back(std::move(t));
    ++total_;
}

void SampleSet::add(const State& start, int action, double reward, const State& end) {
    add(Transition{start, action, reward, end});
}

std::size_t SampleSet::offset(int action) const {
    if (action < 0 || action > num_actions())
        throw std::invalid_argument("SampleSet: action index out of range");
    std::size_t off = 0;
    for (int a = 0; a < action; ++a) off += per_action_[a].size();
    return off;
}

void FiniteMDP::validate(double stochastic_tol) const {
    if (num_states < 1) throw std::invalid_argument("FiniteMDP: empty state space");
    if (P.empty() || P.size() != r.size())
        throw std::invalid_argument("FiniteMDP: action count mismatch between P and r");
    if (!(gamma >= 0.0) || gamma >= 1.0)
        throw std::invalid_argument("FiniteMDP: gamma must lie in [0, 1)");
    for (std::size_t a = 0; a < P.size(); ++a) {
        if (P[a].rows() != num_states || P[a].cols() != num_states)
            throw std::invalid_argument("FiniteMDP: transition matrix shape mismatch");
        if (r[a].size() != num_states)
            throw std::invalid_argument("FiniteMDP: reward vector length mismatch");
        if (!P[a].allFinite() || !r[a].allFinite())
            throw std::invalid_argument("FiniteMDP: non-finite entries");
        if ((P[a].array() < 0.0).any())
            throw std::invalid_argument("FiniteMDP: negative transition probability");
        for (int i = 0; i < num_states; ++i) {
            double s = P[a].row(i).sum();
            if (std::abs(s - 1.0) > stochastic_tol)
                throw std::invalid_argument("FiniteMDP: row is not stochastic");
        }
    }
}

Policy greedy_policy(const Mat& Q) {
    if (Q.rows() == 0 || Q.cols() == 0)
        throw std::invalid_argument("greedy_policy: empty action-value matrix");
    if (!Q.allFinite())
        throw std::invalid_argument("greedy_policy: non-finite action values");
    Policy pi;
    pi.actions.resize(Q.rows());
    for (Eigen::Index i = 0; i < Q.rows(); ++i) {
        int best = 0;
        for (Eigen::Index j = 1; j < Q.cols(); ++j)
            if (Q(i, j) > Q(i, best)) best = static_cast<int>(j);
        pi.actions[i] = best;
    }
    return pi;
}

Vec apply_gamma_operator(const Mat& Q) {
    if (Q.size() == 0) return Vec();
    if (!Q.allFinite())
        throw std::invalid_argument("apply_gamma_operator: non-finite action values");
    return Q.rowwise().maxCoeff();
}

FiniteMDP random_mdp(int num_states, int num_actions, double gamma,
                     std::uint64_t seed, double reward_lo, double reward_hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> rew(reward_lo, reward_hi);
    FiniteMDP m;
    m.num_states = num_states;
    m.gamma = gamma;
    m.P.resize(num_actions);
    m.r.resize(num_actions);
    for (int a = 0; a < num_actions; ++a) {
        m.P[a] = Mat(num_states, num_states);
        m.r[a] = Vec(num_states);
        for (int i = 0; i < num_states; ++i) {
            double row_sum = 0.0;
            for (int j = 0; j < num_states; ++j) {
                double x = unit(rng);
                m.P[a](i, j) = x;
                row_sum += x;
            }
            m.P[a].row(i) /= row_sum;
            // cancel accumulated rounding so validate() sees exact rows
            m.P[a].row(i) /= m.P[a].row(i).sum();
            m.r[a](i) = rew(rng);
        }
    }
    return m;
}

}  // namespace kbsf
