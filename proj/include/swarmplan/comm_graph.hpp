#pragma once

#include "swarmplan/tensor.hpp"
#include "swarmplan/world.hpp"

#include <vector>

namespace swarmplan {

/// k-nearest-neighbor communication graph. neighbors[i] lists the agents
/// closest to i in ascending distance (ties by index); S(i, j) = 1 exactly
/// when j appears in neighbors[i]. Information flows from j to i.
struct CommGraph {
    std::vector<std::vector<int>> neighbors;

    int size() const { return static_cast<int>(neighbors.size()); }
    bool has_edge(int i, int j) const;
    Tensor2 dense() const;
    /// Binary S, or S / k when row_normalize is set.
    Adjacency adjacency(bool row_normalize = false) const;
};

/// Per-agent observation rows: [u_i(t-1), dx to k nearest agents, dg to k nearest goals].
using ObservationMatrix = Tensor2;

inline int observation_width(int k) { return 2 * (1 + 2 * k); }

/// Indices of the k entries of `candidates` nearest to `ego`, sorted by
/// (distance, index). `skip` is excluded when >= 0.
std::vector<int> nearest_indices(const Positions& candidates, Vec2 ego, int k, int skip = -1);

CommGraph knn_graph(const Positions& x, int k);

ObservationMatrix build_observations(const WorldState& state, const GoalSet& goals,
                                     const SimParams& params);

/// Same as build_observations, reusing an already built graph for the agent block.
ObservationMatrix build_observations(const WorldState& state, const GoalSet& goals,
                                     const SimParams& params, const CommGraph& graph);

struct DHopView {
    std::vector<int> agent_ids;  ///< ascending, always contains ego
    std::vector<int> goal_ids;   ///< ascending, deduplicated
    Positions known_agent_positions;  ///< relative to ego, same order as agent_ids
    Positions known_goal_positions;   ///< relative to ego, same order as goal_ids
};

/// Which agents of a d-hop view contribute their observed goals.
enum class GoalSharing {
    /// Agents within d - 1 hops: d - 1 exchanges deliver their observations to the ego.
    InnerObservers,
    /// Every agent in the view, including the ones d hops away.
    AllAgents,
};

/// Agents reachable from ego within d hops along information flow (j -> i
/// whenever j is a neighbor of i), plus the deduplicated k nearest goals of
/// the agents selected by `sharing`.
DHopView d_hop_view(const CommGraph& graph, const WorldState& state, const GoalSet& goals,
                    const SimParams& params, int d, int ego,
                    GoalSharing sharing = GoalSharing::InnerObservers);

}  // namespace swarmplan
