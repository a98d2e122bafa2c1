#pragma once

#include "swarmplan/world.hpp"

#include <vector>

namespace swarmplan {

struct RewardParams {
    double collision_weight = 30.0;  ///< alpha
    double length_scale = 0.1;       ///< beta, meters
};

/// r = exp(-d^2 / beta^2) - alpha * p for one agent.
double agent_reward(double goal_distance, int collisions, const RewardParams& rp);

/// Per-agent rewards for the state reached after a step. d_i is the distance to
/// the goal assigned to agent i by a fresh LSAP solve on that state.
std::vector<double> reward(const WorldState& state_after, const GoalSet& goals, const SimParams& params,
                           const RewardParams& rp);

}  // namespace swarmplan
