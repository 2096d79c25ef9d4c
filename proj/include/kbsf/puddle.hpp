#pragma once

#include "kbsf/environment.hpp"

namespace kbsf {

// Continuous two-dimensional gridworld on [0,1]^2 with two capsule-shaped
// puddles. Each of the four actions (right, left, up, down) moves the agent
// a fixed step plus Gaussian noise; reaching the upper-right corner region
// pays +5 and ends the episode, landing inside a puddle costs 10 times the
// depth below the puddle surface. Episodes are cut off (as failures) after
// `episode_cap` steps.
struct PuddleWorldConfig {
    double gamma = 0.99;
    double step_size = 0.05;
    double noise_sigma = 0.01;
    double goal_reward = 5.0;
    double puddle_penalty_rate = 10.0;
    double goal_threshold = 1.9;  // terminal when x + y >= threshold
    int episode_cap = 300;
    double puddle_radius = 0.1;
    // capsule axes: {x1, y1, x2, y2}
    double puddle1[4] = {0.1, 0.75, 0.45, 0.75};
    double puddle2[4] = {0.45, 0.4, 0.45, 0.8};
};

class PuddleWorld final : public Environment {
public:
    explicit PuddleWorld(std::uint64_t seed, PuddleWorldConfig config = {});

    int state_dim() const override { return 2; }
    int num_actions() const override { return 4; }
    double recommended_gamma() const override { return config_.gamma; }

    State reset() override;
    State reset_to(const State& s) override;
    StepResult step(int action) override;
    void reseed(std::uint64_t seed) override;

    // Depth below the puddle surface at p (0 outside both puddles); the
    // reward at a non-goal state is -penalty_rate * depth.
    double puddle_depth(const State& p) const;
    bool in_goal(const State& p) const;

    const PuddleWorldConfig& config() const { return config_; }

private:
    PuddleWorldConfig config_;
    std::mt19937_64 rng_;
    State state_;
    int steps_ = 0;
    bool terminal_ = true;
};

}  // namespace kbsf
