#include "kbsf/cartpole.hpp"

#include <cmath>

namespace kbsf {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

PoleBalance::PoleBalance(std::uint64_t seed, PoleBalanceConfig config)
    : config_(config), rng_(seed), state_(State::Zero(config.state_dim())) {
    if (config_.num_poles < 1 || config_.num_poles > 3)
        throw std::invalid_argument("PoleBalance: num_poles must be 1, 2, or 3");
}

void PoleBalance::reseed(std::uint64_t seed) { rng_.seed(seed); }

State PoleBalance::derivatives(const State& s, double force) const {
    const int np = config_.num_poles;
    const double g = config_.gravity;

    // effective mass and force contributions of each pole
    double mass_eff = config_.cart_mass;
    double force_eff = force;
    for (int p = 0; p < np; ++p) {
        double th = s(2 + 2 * p), om = s(3 + 2 * p);
        double m = config_.pole_mass[p], l = config_.half_length[p];
        double mu = config_.hinge_friction[p];
        double c = std::cos(th), si = std::sin(th);
        mass_eff += m * (1.0 - 0.75 * c * c);
        force_eff += m * l * om * om * si - 0.75 * m * c * (g * si - mu * om / (m * l));
    }
    double x_acc = force_eff / mass_eff;

    State d(s.size());
    d(0) = s(1);
    d(1) = x_acc;
    for (int p = 0; p < np; ++p) {
        double th = s(2 + 2 * p), om = s(3 + 2 * p);
        double m = config_.pole_mass[p], l = config_.half_length[p];
        double mu = config_.hinge_friction[p];
        d(2 + 2 * p) = om;
        d(3 + 2 * p) =
            0.75 / l * (g * std::sin(th) - x_acc * std::cos(th) - mu * om / (m * l));
    }
    return d;
}

State PoleBalance::rk4_step(const State& s, double force) const {
    const double h = config_.dt;
    State k1 = derivatives(s, force);
    State k2 = derivatives(s + 0.5 * h * k1, force);
    State k3 = derivatives(s + 0.5 * h * k2, force);
    State k4 = derivatives(s + h * k3, force);
    return s + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double PoleBalance::mechanical_energy(const State& s) const {
    const double g = config_.gravity;
    double xd = s(1);
    double e = 0.5 * config_.cart_mass * xd * xd;
    for (int p = 0; p < config_.num_poles; ++p) {
        double th = s(2 + 2 * p), om = s(3 + 2 * p);
        double m = config_.pole_mass[p], l = config_.half_length[p];
        // rod: CM velocity plus rotation about the CM (I = m l^2 / 3)
        double vx = xd + l * om * std::cos(th);
        double vy = -l * om * std::sin(th);
        e += 0.5 * m * (vx * vx + vy * vy) + 0.5 * (m * l * l / 3.0) * om * om;
        e += m * g * l * std::cos(th);
    }
    return e;
}

bool PoleBalance::failed(const State& s) const {
    if (std::abs(s(0)) > config_.track_limit) return true;
    const double limit = config_.angle_limit_deg * kPi / 180.0;
    for (int p = 0; p < config_.num_poles; ++p)
        if (std::abs(s(2 + 2 * p)) > limit) return true;
    return false;
}

std::vector<double> PoleBalance::grid_bounds(int num_poles) {
    // half-widths of the evaluation hypercube: 50% of each state axis
    const double deg = kPi / 180.0;
    std::vector<double> b = {1.2, 1.2 / 5.0, 18.0 * deg, 75.0 * deg};
    if (num_poles >= 2) {
        b.push_back(18.0 * deg);
        b.push_back(150.0 * deg);
    }
    if (num_poles >= 3) {
        b.push_back(18.0 * deg);
        b.push_back(75.0 * deg);
    }
    return b;
}

State PoleBalance::reset() {
    auto bounds = grid_bounds(config_.num_poles);
    State s(config_.state_dim());
    for (int i = 0; i < config_.state_dim(); ++i) {
        std::uniform_real_distribution<double> u(-bounds[i], bounds[i]);
        s(i) = config_.start_scale * u(rng_);
    }
    return reset_to(s);
}

State PoleBalance::reset_to(const State& s) {
    if (s.size() != config_.state_dim())
        throw std::invalid_argument("PoleBalance: state dimension mismatch");
    state_ = s;
    steps_ = 0;
    terminal_ = false;
    return state_;
}

StepResult PoleBalance::step(int action) {
    if (terminal_) throw std::logic_error("PoleBalance: step after terminal state");
    if (action < 0 || action >= 2)
        throw std::invalid_argument("PoleBalance: invalid action index");

    double force = action == 0 ? -config_.force : config_.force;
    State s = state_;
    for (int i = 0; i < config_.steps_per_action; ++i) s = rk4_step(s, force);

    StepResult result;
    result.next = s;
    ++steps_;
    if (!s.allFinite()) {
        // integration blow-up: treat as failure and report diagnostically
        result.terminal = true;
        result.reward = config_.failure_reward;
        state_ = s;
        terminal_ = true;
        return result;
    }
    if (failed(s)) {
        result.terminal = true;
        result.reward = config_.failure_reward;
    } else if (steps_ >= config_.episode_cap) {
        result.terminal = true;
        result.goal = true;
    }
    state_ = s;
    terminal_ = result.terminal;
    return result;
}

}  // namespace kbsf
