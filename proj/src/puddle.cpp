#include "kbsf/puddle.hpp"

#include <algorithm>
#include <cmath>

namespace kbsf {

namespace {

double point_segment_distance(double px, double py, const double seg[4]) {
    double vx = seg[2] - seg[0], vy = seg[3] - seg[1];
    double wx = px - seg[0], wy = py - seg[1];
    double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? std::clamp((wx * vx + wy * vy) / len2, 0.0, 1.0) : 0.0;
    double dx = px - (seg[0] + t * vx), dy = py - (seg[1] + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

PuddleWorld::PuddleWorld(std::uint64_t seed, PuddleWorldConfig config)
    : config_(config), rng_(seed), state_(State::Zero(2)) {}

void PuddleWorld::reseed(std::uint64_t seed) { rng_.seed(seed); }

double PuddleWorld::puddle_depth(const State& p) const {
    double d1 = config_.puddle_radius - point_segment_distance(p(0), p(1), config_.puddle1);
    double d2 = config_.puddle_radius - point_segment_distance(p(0), p(1), config_.puddle2);
    return std::max({d1, d2, 0.0});
}

bool PuddleWorld::in_goal(const State& p) const {
    return p(0) + p(1) >= config_.goal_threshold;
}

State PuddleWorld::reset() {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    State s(2);
    do {
        s << unit(rng_), unit(rng_);
    } while (in_goal(s));
    return reset_to(s);
}

State PuddleWorld::reset_to(const State& s) {
    if (s.size() != 2) throw std::invalid_argument("PuddleWorld: state must be 2-D");
    state_ = s;
    steps_ = 0;
    terminal_ = false;
    return state_;
}

StepResult PuddleWorld::step(int action) {
    if (terminal_) throw std::logic_error("PuddleWorld: step after terminal state");
    if (action < 0 || action >= 4)
        throw std::invalid_argument("PuddleWorld: invalid action index");

    std::normal_distribution<double> noise(0.0, config_.noise_sigma);
    double dx = 0.0, dy = 0.0;
    switch (action) {
        case 0: dx = config_.step_size; break;
        case 1: dx = -config_.step_size; break;
        case 2: dy = config_.step_size; break;
        case 3: dy = -config_.step_size; break;
    }
    State next(2);
    next(0) = std::clamp(state_(0) + dx + noise(rng_), 0.0, 1.0);
    next(1) = std::clamp(state_(1) + dy + noise(rng_), 0.0, 1.0);

    StepResult result;
    result.next = next;
    ++steps_;
    if (in_goal(next)) {
        result.reward = config_.goal_reward;
        result.terminal = true;
        result.goal = true;
    } else {
        result.reward = -config_.puddle_penalty_rate * puddle_depth(next);
        if (steps_ >= config_.episode_cap) result.terminal = true;
    }
    state_ = next;
    terminal_ = result.terminal;
    return result;
}

}  // namespace kbsf
