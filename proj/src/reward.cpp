#include "swarmplan/reward.hpp"

#include "swarmplan/assignment.hpp"

#include <cmath>

namespace swarmplan {

double agent_reward(double goal_distance, int collisions, const RewardParams& rp) {
    const double s = goal_distance / rp.length_scale;
    return std::exp(-s * s) - rp.collision_weight * collisions;
}

std::vector<double> reward(const WorldState& state_after, const GoalSet& goals, const SimParams& params,
                           const RewardParams& rp) {
    const Assignment a = lsap_assignment(state_after.positions, goals.positions);
    const std::vector<int> p = collision_counts(state_after, params);
    std::vector<double> r(state_after.positions.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double d = distance(state_after.positions[i], goals.positions[static_cast<std::size_t>(a.goal_of[i])]);
        r[i] = agent_reward(d, p[i], rp);
    }
    return r;
}

}  // namespace swarmplan
