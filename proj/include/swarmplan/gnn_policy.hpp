#pragma once

#include "swarmplan/gnn.hpp"
#include "swarmplan/policies.hpp"
#include "swarmplan/world.hpp"

#include <memory>
#include <span>

namespace swarmplan {

/// Observation rows plus the kNN shift operator for one state.
struct GraphObservation {
    Tensor2 obs;
    Adjacency shift;
};

GraphObservation observe(const WorldState& state, const GoalSet& goals, const SimParams& params,
                         bool normalize_adjacency);

/// Several graphs stacked into one disconnected graph (rows concatenated,
/// block-diagonal shift).
GraphObservation stack_graphs(std::span<const GraphObservation* const> graphs);

Tensor2 to_tensor(const Controls& u);
Controls to_controls(const Tensor2& u);

/// Throws std::invalid_argument when the network's input width does not match
/// the observation width implied by params.k_neighbors.
void check_compatible(const GnnConfig& config, const SimParams& params);

Controls gnn_controls(const GnnParams& net, const WorldState& state, const GoalSet& goals,
                      const SimParams& params);

ControllerFactory make_gnn_controller(std::shared_ptr<const GnnParams> net, const SimParams& params);

/// Baselines plus the Gnn kind, whose checkpoint is loaded here.
ControllerFactory make_controller(const PolicyKind& kind, const SimParams& params);

}  // namespace swarmplan
