#pragma once

#include "kbsf/core.hpp"

#include <memory>
#include <random>
#include <string>

namespace kbsf {

struct StepResult {
    State next;
    double reward = 0.0;
    bool terminal = false;
    bool goal = false;  // terminal with success (goal reached / kept balanced)
};

// A self-contained episodic simulator. Instances own their RNG and are
// single-threaded; stepping a terminal episode before reset is an error.
class Environment {
public:
    virtual ~Environment() = default;

    virtual int state_dim() const = 0;
    virtual int num_actions() const = 0;
    virtual double recommended_gamma() const = 0;

    // Draws a start state from the task's start distribution.
    virtual State reset() = 0;
    virtual State reset_to(const State& s) = 0;
    virtual StepResult step(int action) = 0;

    virtual void reseed(std::uint64_t seed) = 0;
};

// Fixed evaluation states for a task: "puddle" (13 states),
// "single_pole" (81), "double_pole" (81), "triple_pole" (256).
std::vector<State> test_state_grid(const std::string& task);

// Instantiates a task by name with its default configuration.
std::unique_ptr<Environment> make_environment(const std::string& task, std::uint64_t seed);

}  // namespace kbsf
