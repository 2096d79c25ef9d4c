#include "kbsf/bounds.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>

namespace kbsf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double max_abs_row_sum(const Mat& m) {
    return m.cwiseAbs().rowwise().sum().maxCoeff();
}

double xi_v_formula(double r_error, double reward_gap, double p_coeff, double p_error,
                    double sigma_d, double gamma) {
    return r_error / (1.0 - gamma) +
           reward_gap / ((1.0 - gamma) * (1.0 - gamma)) * (p_coeff * p_error + sigma_d);
}

}  // namespace

bool BoundReport::consistent(double tol) const {
    double recomputed = xi_v_formula(r_error, reward_gap, gamma / 2.0, p_error, sigma_d, gamma);
    return std::abs(recomputed - xi_v) <= tol * std::max(1.0, std::abs(xi_v));
}

nlohmann::json BoundReport::to_json() const {
    nlohmann::json j;
    j["reward_gap"] = reward_gap;
    j["sigma_d"] = sigma_d;
    j["p_error"] = p_error;
    j["r_error"] = r_error;
    j["xi_v"] = xi_v;
    j["gamma"] = gamma;
    if (epsilon_qbar) j["epsilon_qbar"] = *epsilon_qbar;
    return j;
}

double sigma_of_d(const std::vector<Mat>& ddot_blocks) {
    if (ddot_blocks.empty()) throw std::invalid_argument("sigma_of_d: no blocks");
    double sigma = 0.0;
    bool any = false;
    for (const auto& block : ddot_blocks) {
        if (block.rows() == 0) continue;
        any = true;
        for (Eigen::Index i = 0; i < block.rows(); ++i)
            sigma = std::max(sigma, 1.0 - block.row(i).maxCoeff());
    }
    if (!any) throw std::invalid_argument("sigma_of_d: empty blocks");
    return sigma;
}

BoundReport xi_v_from_parts(const std::vector<Mat>& phat_blocks,
                            const std::vector<Vec>& rhat, const std::vector<Mat>& ddot,
                            const std::vector<Mat>& kdot, const std::vector<Vec>& rbar,
                            double gamma) {
    const int A = static_cast<int>(phat_blocks.size());
    if (A == 0 || ddot.size() != static_cast<std::size_t>(A) ||
        kdot.size() != static_cast<std::size_t>(A) ||
        rbar.size() != static_cast<std::size_t>(A) || rhat.size() != static_cast<std::size_t>(A))
        throw std::invalid_argument("xi_v_from_parts: per-action inputs mismatch");

    // stack D row blocks once; n = total rows
    Eigen::Index n = 0;
    for (const auto& d : ddot) n += d.rows();
    const Eigen::Index m = ddot[0].cols();
    Mat D(n, m);
    Eigen::Index row = 0;
    for (const auto& d : ddot) {
        D.middleRows(row, d.rows()) = d;
        row += d.rows();
    }

    BoundReport report;
    report.gamma = gamma;
    report.sigma_d = sigma_of_d(ddot);

    double reward_min = kInf, reward_max = -kInf;
    Eigen::Index col = 0;
    for (int a = 0; a < A; ++a) {
        reward_min = std::min(reward_min, rbar[a].minCoeff());
        reward_max = std::max(reward_max, rbar[a].maxCoeff());
        if (phat_blocks[a].rows() != n || phat_blocks[a].cols() != kdot[a].cols())
            throw std::invalid_argument("xi_v_from_parts: block shape mismatch");
        // D K^a has nonzero columns only in action a's block, matching Phat
        Mat dk = D * kdot[a];  // n x n_a
        report.p_error = std::max(report.p_error, max_abs_row_sum(phat_blocks[a] - dk));
        report.r_error =
            std::max(report.r_error, (rhat[a] - D * rbar[a]).cwiseAbs().maxCoeff());
        col += kdot[a].cols();
    }
    report.reward_gap = reward_max - reward_min;
    report.xi_v = xi_v_formula(report.r_error, report.reward_gap, gamma / 2.0,
                               report.p_error, report.sigma_d, gamma);
    return report;
}

BoundReport xi_v_report(const KbrlModel& kbrl, const Factorization& f,
                        const ReducedModel& reduced, int max_states) {
    if (kbrl.num_states() > max_states)
        throw std::invalid_argument("xi_v_report: model too large for diagnostic materialization");
    if (kbrl.num_actions() != f.num_actions())
        throw std::invalid_argument("xi_v_report: action count mismatch");
    if (reduced.num_states() != f.order())
        throw std::invalid_argument("xi_v_report: order mismatch");
    std::vector<Mat> phat;
    std::vector<Vec> rhat;
    for (int a = 0; a < kbrl.num_actions(); ++a) {
        if (kbrl.block(a).cols() != f.kdot[a].cols())
            throw std::invalid_argument("xi_v_report: sample mismatch between models");
        phat.push_back(kbrl.block(a));
        rhat.push_back(kbrl.reward(a));
    }
    return xi_v_from_parts(phat, rhat, f.ddot, f.kdot, f.rbar, kbrl.gamma());
}

double prop2_query_bound(const BoundReport& report) { return report.gamma * report.xi_v; }

double two_mdp_q_bound(const FiniteMDP& m, const FiniteMDP& mt) {
    if (m.num_states != mt.num_states || m.num_actions() != mt.num_actions())
        throw std::invalid_argument("two_mdp_q_bound: state/action space mismatch");
    if (m.gamma != mt.gamma)
        throw std::invalid_argument("two_mdp_q_bound: discount mismatch");
    const double g = m.gamma;
    double r_error = 0.0, p_error = 0.0;
    double rmin = kInf, rmax = -kInf;
    for (int a = 0; a < m.num_actions(); ++a) {
        r_error = std::max(r_error, (m.r[a] - mt.r[a]).cwiseAbs().maxCoeff());
        p_error = std::max(p_error, max_abs_row_sum(m.P[a] - mt.P[a]));
        rmin = std::min(rmin, m.r[a].minCoeff());
        rmax = std::max(rmax, m.r[a].maxCoeff());
    }
    double r_dif = rmax - rmin;
    return r_error / (1.0 - g) +
           g * (2.0 - g) / (2.0 * (1.0 - g) * (1.0 - g)) * r_dif * p_error;
}

double prop4_from_report(const BoundReport& report, double eps_qbar) {
    const double g = report.gamma;
    return xi_v_formula(report.r_error, report.reward_gap, g * (2.0 - g) / 2.0,
                        report.p_error, report.sigma_d, g) +
           eps_qbar;
}

double prop4_online_bound(const KbrlModel& kbrl_t, const Factorization& f_t,
                          const ReducedModel& reduced_t, double eps_qbar, int max_states) {
    BoundReport report = xi_v_report(kbrl_t, f_t, reduced_t, max_states);
    return prop4_from_report(report, eps_qbar);
}

double epsilon_qbar(const ReducedModel& model, double solver_epsilon) {
    if (!model.solved) throw std::logic_error("epsilon_qbar: model has not been solved");
    SolverConfig tight;
    tight.epsilon = solver_epsilon;
    auto [vf, pi] = modified_policy_iteration(model.solver_mdp(), tight);
    (void)pi;
    return (vf.Q - model.qbar).cwiseAbs().maxCoeff();
}

double taubar_threshold(const State& s, const RepresentativeSet& reps, int w, double alpha,
                        const KernelSpec& kernel) {
    const int m = reps.size();
    if (w < 1 || w > m - 1)
        throw std::invalid_argument("taubar_threshold: w must lie in [1, m-1]");
    if (!(alpha > 0.0)) throw std::invalid_argument("taubar_threshold: alpha must be positive");
    auto hits = reps.index().nearest(s, w + 1);
    const double dist_w = hits[w - 1].distance;
    const double dist_w1 = hits[w].distance;
    if (!(dist_w < dist_w1))
        throw std::invalid_argument(
            "taubar_threshold: tie between the w-th and (w+1)-th distances");

    double phi1 = kernel.decay_onset > 0.0 ? dist_w / kernel.decay_onset : kInf;
    double beta = alpha * w / ((m - w) * kernel.decay_ratio);
    double phi2 = beta < 1.0 ? (dist_w - dist_w1) / std::log(beta) : kInf;
    return std::min(phi1, phi2);
}

namespace {

Vec power_iteration_fixed_point(const Mat& E, Vec v, double tol = 1e-10,
                                int max_iters = 200000) {
    for (int i = 0; i < max_iters; ++i) {
        Vec next = E * v;
        if ((next - v).cwiseAbs().maxCoeff() < tol) return next;
        v = std::move(next);
    }
    throw std::runtime_error("averager_bound: power iteration did not converge");
}

void check_exact_factorization(const FiniteMDP& m, const Mat& E, const std::vector<Mat>& L,
                               const std::vector<Vec>& rbb, double tol) {
    if (E.rows() != m.num_states || E.cols() != m.num_states)
        throw std::invalid_argument("averager_bound: E shape mismatch");
    if (L.size() != m.P.size() || rbb.size() != m.r.size())
        throw std::invalid_argument("averager_bound: per-action inputs mismatch");
    for (int a = 0; a < m.num_actions(); ++a) {
        if ((E * L[a] - m.P[a]).cwiseAbs().maxCoeff() > tol)
            throw std::invalid_argument("averager_bound: E L^a does not reproduce P^a");
        if ((E * rbb[a] - m.r[a]).cwiseAbs().maxCoeff() > tol)
            throw std::invalid_argument("averager_bound: E rbb^a does not reproduce r^a");
    }
}

}  // namespace

double averager_bound(const FiniteMDP& m, const Mat& E, const std::vector<Mat>& L,
                      const std::vector<Vec>& rbb, const SolverConfig& config) {
    check_exact_factorization(m, E, L, rbb, 1e-9);
    const double g = m.gamma;
    ValueFunction vstar = value_iteration(m, config);
    Vec u = power_iteration_fixed_point(E, vstar.v);

    FiniteMDP mcheck;
    mcheck.num_states = m.num_states;
    mcheck.gamma = g;
    mcheck.P = L;
    mcheck.r = rbb;
    ValueFunction vcheck = value_iteration(mcheck, config);

    double term1 = 2.0 * g / (1.0 - g) * (vstar.v - u).cwiseAbs().maxCoeff();
    double term2 =
        g * (1.0 + g) / (1.0 - g) * (vstar.v - vcheck.v).cwiseAbs().maxCoeff();
    return term1 + term2;
}

AveragerReduction averager_reduction(const FiniteMDP& mdp, const Mat& E,
                                     const std::vector<Mat>& L, const std::vector<Vec>& rbb,
                                     const SolverConfig& config) {
    AveragerReduction out{};
    out.xi_prime = averager_bound(mdp, E, L, rbb, config);

    // nonzero columns of E define the selection matrix H
    std::vector<int> nonzero_cols;
    for (Eigen::Index j = 0; j < E.cols(); ++j)
        if ((E.col(j).cwiseAbs().array() > 1e-12).any())
            nonzero_cols.push_back(static_cast<int>(j));
    const int m = static_cast<int>(nonzero_cols.size());
    out.m = m;
    const int n = mdp.num_states;
    const int A = mdp.num_actions();

    Mat H = Mat::Zero(m, n);
    for (int i = 0; i < m; ++i) H(i, nonzero_cols[i]) = 1.0;

    Mat D = E * H.transpose();  // n x m
    FiniteMDP reduced;
    reduced.num_states = m;
    reduced.gamma = mdp.gamma;
    reduced.P.resize(A);
    reduced.r.resize(A);
    std::vector<Mat> K(A);
    for (int a = 0; a < A; ++a) {
        K[a] = H * L[a];  // m x n
        reduced.P[a] = K[a] * D;
        reduced.r[a] = H * rbb[a];
    }
    reduced.validate();

    ValueFunction vstar = value_iteration(mdp, config);
    ValueFunction qbar = value_iteration(reduced, config);
    Vec approx = apply_gamma_operator(D * qbar.Q);
    out.reduction_error = (vstar.v - approx).cwiseAbs().maxCoeff();
    return out;
}

}  // namespace kbsf
