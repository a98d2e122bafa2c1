#pragma once

#include "swarmplan/assignment.hpp"
#include "swarmplan/comm_graph.hpp"
#include "swarmplan/world.hpp"

#include <string>
#include <string_view>

namespace swarmplan {

/// Below this distance an agent counts as sitting on its target.
inline constexpr double kSnapDistance = 1e-9;

/// Velocity toward `target` at max_speed, shortened on the final step so the
/// agent lands exactly on the target instead of overshooting.
Vec2 seek(Vec2 position, Vec2 target, const SimParams& params);

/// Centralized LSAP policy; the assignment is recomputed from the current positions.
Controls lsap_policy(const WorldState& state, const GoalSet& goals, const SimParams& params);

struct CaptPlan {
    Assignment assignment;
    Positions start_positions;
    double arrival_time = 0.0;
    Controls velocities;
};

/// Squared-distance assignment with constant velocities chosen so that every
/// agent arrives at the same time T_f = max_i d_i / u_max.
CaptPlan capt_plan(const WorldState& initial, const GoalSet& goals, const SimParams& params);

/// Control at elapsed time t (seconds). The step that crosses T_f is scaled
/// so agents stop on their goals; afterwards the controls are zero.
Controls capt_policy(const CaptPlan& plan, double t, const SimParams& params);

/// Decentralized d-hop policy. d = 0 heads for the nearest observed goal;
/// d >= 1 solves a local LSAP over the d-hop view and follows the ego's goal.
Controls dhop_policy(const WorldState& state, const GoalSet& goals, const CommGraph& graph,
                     const SimParams& params, int d,
                     GoalSharing sharing = GoalSharing::InnerObservers);

struct PolicyKind {
    enum class Tag { Lsap, Capt, DHop, Gnn };

    Tag tag = Tag::Lsap;
    int hops = 0;
    std::string checkpoint;

    /// Accepts "lsap", "capt", "dhop:<d>" (alias "<d>-hop"), "gnn:<path>".
    static PolicyKind parse(std::string_view text);
    std::string name() const;
};

/// Controller factory for the non-learned policies. Throws for Tag::Gnn.
ControllerFactory make_baseline_controller(const PolicyKind& kind, const SimParams& params);

}  // namespace swarmplan
