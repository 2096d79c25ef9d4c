#pragma once

#include "kbsf/environment.hpp"

#include <array>

namespace kbsf {

// Cart with up to three poles on a bounded track, integrated with 4th-order
// Runge-Kutta. State layout: [x, x_dot, theta_1, theta_dot_1, ...]; angles
// in radians from the upright vertical. Two actions push the cart with a
// constant force left or right; an episode fails (reward -1) when any pole
// leaves the allowed angle range or the cart leaves the track, and succeeds
// when `episode_cap` action steps have been survived.
//
// Physical constants: 1 kg cart, long poles 0.1 kg with half-length 0.5 m,
// the short second pole scaled by 0.1 in both length and mass, a third pole
// identical to the long one, +-10 N force, hinge friction 2e-6.
struct PoleBalanceConfig {
    static constexpr const char* kConstantsVersion = "gomez2003-v1";

    int num_poles = 1;  // 1, 2, or 3
    double gamma = 0.99;
    double dt = 0.01;             // integration step (s)
    int steps_per_action = 2;     // RK4 sub-steps per action
    double angle_limit_deg = 36.0;
    double track_limit = 2.4;     // m
    double force = 10.0;          // N
    double cart_mass = 1.0;       // kg
    double gravity = 9.8;         // m/s^2
    int episode_cap = 3000;       // action steps; reaching it is a success
    double failure_reward = -1.0;

    // per-pole half-lengths (m) and masses (kg); index 0 is the long pole
    std::array<double, 3> half_length = {0.5, 0.05, 0.5};
    std::array<double, 3> pole_mass = {0.1, 0.01, 0.1};
    std::array<double, 3> hinge_friction = {2e-6, 2e-6, 2e-6};

    // start-state distribution bounds (uniform), matching the test grid
    // bounds; see test_state_grid().
    double start_scale = 1.0;

    int state_dim() const { return 2 + 2 * num_poles; }
};

class PoleBalance final : public Environment {
public:
    explicit PoleBalance(std::uint64_t seed, PoleBalanceConfig config = {});

    int state_dim() const override { return config_.state_dim(); }
    int num_actions() const override { return 2; }
    double recommended_gamma() const override { return config_.gamma; }

    State reset() override;
    State reset_to(const State& s) override;
    StepResult step(int action) override;
    void reseed(std::uint64_t seed) override;

    const PoleBalanceConfig& config() const { return config_; }

    // Time derivative of the state under the given force; exposed for the
    // integration tests.
    State derivatives(const State& s, double force) const;
    // Total mechanical energy (frictionless accounting), for drift checks.
    double mechanical_energy(const State& s) const;

    // Per-dimension bounds of the evaluation region (hypercube half-widths).
    static std::vector<double> grid_bounds(int num_poles);

private:
    State rk4_step(const State& s, double force) const;
    bool failed(const State& s) const;

    PoleBalanceConfig config_;
    std::mt19937_64 rng_;
    State state_;
    int steps_ = 0;
    bool terminal_ = true;
};

}  // namespace kbsf
