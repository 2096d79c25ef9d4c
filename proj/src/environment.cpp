#include "kbsf/environment.hpp"

#include "kbsf/cartpole.hpp"
#include "kbsf/puddle.hpp"

namespace kbsf {

namespace {

// axis-aligned grid over [-bounds, +bounds] with `points` values per listed
// dimension (endpoints inclusive); dimensions with one point sit at zero
std::vector<State> hypercube_grid(const std::vector<double>& bounds,
                                  const std::vector<int>& points) {
    const int d = static_cast<int>(bounds.size());
    std::vector<std::vector<double>> axes(d);
    for (int i = 0; i < d; ++i) {
        if (points[i] == 1) {
            axes[i] = {0.0};
            continue;
        }
        for (int k = 0; k < points[i]; ++k)
            axes[i].push_back(-bounds[i] + 2.0 * bounds[i] * k / (points[i] - 1));
    }
    std::vector<State> grid;
    std::vector<int> idx(d, 0);
    while (true) {
        State s(d);
        for (int i = 0; i < d; ++i) s(i) = axes[i][idx[i]];
        grid.push_back(s);
        int i = d - 1;
        while (i >= 0 && ++idx[i] == points[i]) idx[i--] = 0;
        if (i < 0) break;
    }
    return grid;
}

}  // namespace

std::vector<State> test_state_grid(const std::string& task) {
    if (task == "puddle") {
        // 3x3 grid over [0.1,0.3] x [0.3,0.5] plus {0.1,0.3} x {0.9,1.0}
        std::vector<State> grid;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                State s(2);
                s << 0.1 + 0.1 * i, 0.3 + 0.1 * j;
                grid.push_back(s);
            }
        for (double x : {0.1, 0.3})
            for (double y : {0.9, 1.0}) {
                State s(2);
                s << x, y;
                grid.push_back(s);
            }
        return grid;
    }
    if (task == "single_pole")
        return hypercube_grid(PoleBalance::grid_bounds(1), {3, 3, 3, 3});
    if (task == "double_pole")
        // 81 states: three points along position, first-pole angle/velocity
        // and second-pole angle; cart and second-pole velocities start at 0
        return hypercube_grid(PoleBalance::grid_bounds(2), {3, 1, 3, 3, 3, 1});
    if (task == "triple_pole")
        return hypercube_grid(PoleBalance::grid_bounds(3), {2, 2, 2, 2, 2, 2, 2, 2});
    throw std::invalid_argument("test_state_grid: unknown task " + task);
}

std::unique_ptr<Environment> make_environment(const std::string& task, std::uint64_t seed) {
    if (task == "puddle") return std::make_unique<PuddleWorld>(seed);
    PoleBalanceConfig cfg;
    if (task == "single_pole") cfg.num_poles = 1;
    else if (task == "double_pole") cfg.num_poles = 2;
    else if (task == "triple_pole") cfg.num_poles = 3;
    else throw std::invalid_argument("make_environment: unknown task " + task);
    return std::make_unique<PoleBalance>(seed, cfg);
}

}  // namespace kbsf
