#include "swarmplan/gnn_policy.hpp"

#include "swarmplan/checkpoint.hpp"
#include "swarmplan/comm_graph.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace swarmplan {

GraphObservation observe(const WorldState& state, const GoalSet& goals, const SimParams& params,
                         bool normalize_adjacency) {
    const CommGraph graph = knn_graph(state.positions, params.k_neighbors);
    return {build_observations(state, goals, params, graph), graph.adjacency(normalize_adjacency)};
}

GraphObservation stack_graphs(std::span<const GraphObservation* const> graphs) {
    if (graphs.empty()) throw std::invalid_argument("stack_graphs: no graphs");
    Eigen::Index rows = 0;
    const Eigen::Index cols = graphs.front()->obs.cols();
    std::vector<Adjacency> blocks;
    blocks.reserve(graphs.size());
    for (const GraphObservation* g : graphs) {
        if (g->obs.cols() != cols) throw std::invalid_argument("stack_graphs: observation widths differ");
        rows += g->obs.rows();
        blocks.push_back(g->shift);
    }
    GraphObservation out;
    out.obs.resize(rows, cols);
    Eigen::Index r = 0;
    for (const GraphObservation* g : graphs) {
        out.obs.middleRows(r, g->obs.rows()) = g->obs;
        r += g->obs.rows();
    }
    out.shift = block_diagonal(blocks);
    return out;
}

Tensor2 to_tensor(const Controls& u) {
    Tensor2 t(static_cast<Eigen::Index>(u.size()), 2);
    for (std::size_t i = 0; i < u.size(); ++i) {
        t(static_cast<Eigen::Index>(i), 0) = u[i].x;
        t(static_cast<Eigen::Index>(i), 1) = u[i].y;
    }
    return t;
}

Controls to_controls(const Tensor2& u) {
    if (u.cols() != 2) throw std::invalid_argument("control tensor must have 2 columns");
    Controls out(static_cast<std::size_t>(u.rows()));
    for (Eigen::Index i = 0; i < u.rows(); ++i) out[static_cast<std::size_t>(i)] = {u(i, 0), u(i, 1)};
    return out;
}

void check_compatible(const GnnConfig& config, const SimParams& params) {
    const int width = observation_width(params.k_neighbors);
    if (config.input_dim != width) {
        throw std::invalid_argument("network expects " + std::to_string(config.input_dim) +
                                    " observation columns but k=" + std::to_string(params.k_neighbors) +
                                    " produces " + std::to_string(width));
    }
    if (config.output_dim != 2) throw std::invalid_argument("policy network must output 2 columns");
}

Controls gnn_controls(const GnnParams& net, const WorldState& state, const GoalSet& goals,
                      const SimParams& params) {
    const GraphObservation g = observe(state, goals, params, net.config.normalize_adjacency);
    return to_controls(gnn_infer(net, g.obs, g.shift));
}

ControllerFactory make_gnn_controller(std::shared_ptr<const GnnParams> net, const SimParams& params) {
    if (!net) throw std::invalid_argument("make_gnn_controller: null network");
    check_compatible(net->config, params);
    return [net, params](const WorldState&, const GoalSet&) -> Controller {
        return [net, params](const WorldState& s, const GoalSet& g) { return gnn_controls(*net, s, g, params); };
    };
}

ControllerFactory make_controller(const PolicyKind& kind, const SimParams& params) {
    if (kind.tag != PolicyKind::Tag::Gnn) return make_baseline_controller(kind, params);
    auto net = std::make_shared<const GnnParams>(load_checkpoint(kind.checkpoint));
    return make_gnn_controller(std::move(net), params);
}

}  // namespace swarmplan
