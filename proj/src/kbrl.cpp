#include "kbsf/kbrl.hpp"

#include <cmath>

namespace kbsf {

KbrlModel::KbrlModel(SampleSet samples, KernelSpec kernel, double gamma)
    : samples_(std::move(samples)), kernel_(std::move(kernel)), gamma_(gamma) {
    kernel_.validate();
    if (!(gamma_ >= 0.0) || gamma_ >= 1.0)
        throw std::invalid_argument("KbrlModel: gamma must lie in [0, 1)");
    const int A = samples_.num_actions();
    for (int a = 0; a < A; ++a)
        if (samples_.count(a) == 0)
            throw std::invalid_argument("KbrlModel: action without sample transitions");

    // duplicated sampled states stay distinct model states
    end_states_.reserve(samples_.total());
    for (int a = 0; a < A; ++a)
        for (const auto& t : samples_.transitions(a)) end_states_.push_back(t.end);

    const int n = num_states();
    blocks_.resize(A);
    rewards_.resize(A);
    for (int a = 0; a < A; ++a) {
        const auto& trs = samples_.transitions(a);
        const auto na = static_cast<Eigen::Index>(trs.size());
        std::vector<State> starts;
        starts.reserve(trs.size());
        Vec ra(na);
        for (Eigen::Index j = 0; j < na; ++j) {
            starts.push_back(trs[j].start);
            ra(j) = trs[j].reward;
        }
        NeighborIndex index;
        if (kernel_.mu > 0 && kernel_.mu < na)
            index = NeighborIndex(starts, kernel_.norm_weights);
        const NeighborIndex* idx = index.empty() ? nullptr : &index;

        Mat block(n, na);
        for (int i = 0; i < n; ++i)
            block.row(i) = normalized_row(kernel_, end_states_[i], starts, idx).transpose();
        rewards_[a] = block * ra;
        blocks_[a] = std::move(block);
    }
}

FiniteMDP KbrlModel::to_mdp() const {
    FiniteMDP m;
    m.num_states = num_states();
    m.gamma = gamma_;
    const int A = num_actions();
    m.P.resize(A);
    m.r.resize(A);
    for (int a = 0; a < A; ++a) {
        m.P[a] = Mat::Zero(m.num_states, m.num_states);
        m.P[a].middleCols(static_cast<Eigen::Index>(samples_.offset(a)),
                          blocks_[a].cols()) = blocks_[a];
        m.r[a] = rewards_[a];
    }
    return m;
}

KbrlModel build_kbrl(SampleSet samples, const KernelSpec& kernel, double gamma) {
    return KbrlModel(std::move(samples), kernel, gamma);
}

const ValueFunction& solve_kbrl(KbrlModel& model, const SolverConfig& config) {
    const int n = model.num_states();
    const int A = model.num_actions();

    auto backup = [&model, n, A](const Vec& v) {
        Mat Q(n, A);
        for (int a = 0; a < A; ++a) {
            auto seg = v.segment(static_cast<Eigen::Index>(model.state_index(a, 0)),
                                 model.block(a).cols());
            Q.col(a) = model.reward(a) + model.gamma() * (model.block(a) * seg);
        }
        return Q;
    };
    auto sweep = [&model, n](const Policy& pi, const Vec& v) {
        Vec out(n);
        for (int i = 0; i < n; ++i) {
            int a = pi.actions[i];
            auto seg = v.segment(static_cast<Eigen::Index>(model.state_index(a, 0)),
                                 model.block(a).cols());
            out(i) = model.reward(a)(i) + model.gamma() * model.block(a).row(i).dot(seg);
        }
        return out;
    };

    double floor = 0.0;
    for (int a = 0; a < A; ++a) floor = std::min(floor, model.reward(a).minCoeff());
    auto [vf, pi] = detail::run_modified_policy_iteration(backup, sweep, n, model.gamma(),
                                                          floor, config);
    (void)pi;
    model.set_vstar(std::move(vf));
    return *model.vstar();
}

double kbrl_q(const KbrlModel& model, const State& s, int a) {
    if (!model.vstar()) throw std::logic_error("kbrl_q: model has not been solved");
    if (a < 0 || a >= model.num_actions())
        throw std::invalid_argument("kbrl_q: action index out of range");

    const auto& trs = model.samples().transitions(a);
    std::vector<State> starts;
    starts.reserve(trs.size());
    for (const auto& t : trs) starts.push_back(t.start);
    Vec kappa = normalized_row(model.kernel(), s, starts);

    const Vec& v = model.vstar()->v;
    double q = 0.0;
    for (std::size_t i = 0; i < trs.size(); ++i) {
        double vhat = v(static_cast<Eigen::Index>(model.state_index(a, i)));
        q += kappa(static_cast<Eigen::Index>(i)) * (trs[i].reward + model.gamma() * vhat);
    }
    return q;
}

}  // namespace kbsf
