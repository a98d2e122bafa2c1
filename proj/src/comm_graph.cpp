#include "swarmplan/comm_graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace swarmplan {

bool CommGraph::has_edge(int i, int j) const {
    const auto& row = neighbors[static_cast<std::size_t>(i)];
    return std::find(row.begin(), row.end(), j) != row.end();
}

Tensor2 CommGraph::dense() const {
    const int n = size();
    Tensor2 s = Tensor2::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j : neighbors[static_cast<std::size_t>(i)]) s(i, j) = 1.0;
    return s;
}

Adjacency CommGraph::adjacency(bool row_normalize) const {
    const int n = size();
    std::vector<Eigen::Triplet<double>> triplets;
    for (int i = 0; i < n; ++i) {
        const auto& row = neighbors[static_cast<std::size_t>(i)];
        const double w = row_normalize && !row.empty() ? 1.0 / static_cast<double>(row.size()) : 1.0;
        for (int j : row) triplets.emplace_back(i, j, w);
    }
    Adjacency s(n, n);
    s.setFromTriplets(triplets.begin(), triplets.end());
    return s;
}

std::vector<int> nearest_indices(const Positions& candidates, Vec2 ego, int k, int skip) {
    std::vector<std::pair<double, int>> order;
    order.reserve(candidates.size());
    for (int j = 0; j < static_cast<int>(candidates.size()); ++j) {
        if (j == skip) continue;
        order.emplace_back(squared_distance(ego, candidates[static_cast<std::size_t>(j)]), j);
    }
    const std::size_t take = std::min(order.size(), static_cast<std::size_t>(std::max(k, 0)));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end());
    std::vector<int> out(take);
    for (std::size_t m = 0; m < take; ++m) out[m] = order[m].second;
    return out;
}

CommGraph knn_graph(const Positions& x, int k) {
    if (x.empty()) {
        throw std::invalid_argument("knn_graph needs at least one agent");
    }
    CommGraph g;
    g.neighbors.resize(x.size());
    for (int i = 0; i < static_cast<int>(x.size()); ++i) {
        g.neighbors[static_cast<std::size_t>(i)] = nearest_indices(x, x[static_cast<std::size_t>(i)], k, i);
    }
    return g;
}

ObservationMatrix build_observations(const WorldState& state, const GoalSet& goals,
                                     const SimParams& params) {
    return build_observations(state, goals, params, knn_graph(state.positions, params.k_neighbors));
}

ObservationMatrix build_observations(const WorldState& state, const GoalSet& goals,
                                     const SimParams& params, const CommGraph& graph) {
    const int n = static_cast<int>(state.positions.size());
    const int k = params.k_neighbors;
    ObservationMatrix obs = ObservationMatrix::Zero(n, observation_width(k));
    for (int i = 0; i < n; ++i) {
        const Vec2 ego = state.positions[static_cast<std::size_t>(i)];
        const Vec2 u = state.last_controls.empty() ? Vec2{} : state.last_controls[static_cast<std::size_t>(i)];
        obs(i, 0) = u.x;
        obs(i, 1) = u.y;
        const auto& nbrs = graph.neighbors[static_cast<std::size_t>(i)];
        for (std::size_t m = 0; m < nbrs.size() && static_cast<int>(m) < k; ++m) {
            const Vec2 d = state.positions[static_cast<std::size_t>(nbrs[m])] - ego;
            obs(i, 2 + 2 * static_cast<int>(m)) = d.x;
            obs(i, 3 + 2 * static_cast<int>(m)) = d.y;
        }
        const auto near_goals = nearest_indices(goals.positions, ego, k);
        const int goal_offset = 2 + 2 * k;
        for (std::size_t m = 0; m < near_goals.size(); ++m) {
            const Vec2 d = goals.positions[static_cast<std::size_t>(near_goals[m])] - ego;
            obs(i, goal_offset + 2 * static_cast<int>(m)) = d.x;
            obs(i, goal_offset + 1 + 2 * static_cast<int>(m)) = d.y;
        }
    }
    return obs;
}

DHopView d_hop_view(const CommGraph& graph, const WorldState& state, const GoalSet& goals,
                    const SimParams& params, int d, int ego, GoalSharing sharing) {
    if (d < 1) {
        throw std::invalid_argument("d_hop_view requires d >= 1");
    }
    const int n = graph.size();
    if (ego < 0 || ego >= n) {
        throw std::out_of_range("ego index out of range");
    }
    // known: within d hops. inner: within d - 1 hops.
    std::vector<char> known(static_cast<std::size_t>(n), 0);
    std::vector<char> inner(static_cast<std::size_t>(n), 0);
    known[static_cast<std::size_t>(ego)] = 1;
    std::vector<int> frontier{ego};
    for (int hop = 0; hop < d && !frontier.empty(); ++hop) {
        for (int i : frontier) inner[static_cast<std::size_t>(i)] = 1;
        std::vector<int> next;
        for (int i : frontier) {
            for (int j : graph.neighbors[static_cast<std::size_t>(i)]) {
                if (!known[static_cast<std::size_t>(j)]) {
                    known[static_cast<std::size_t>(j)] = 1;
                    next.push_back(j);
                }
            }
        }
        frontier = std::move(next);
    }

    DHopView view;
    std::vector<char> goal_known(goals.positions.size(), 0);
    const Vec2 origin = state.positions[static_cast<std::size_t>(ego)];
    for (int i = 0; i < n; ++i) {
        if (!known[static_cast<std::size_t>(i)]) continue;
        view.agent_ids.push_back(i);
        view.known_agent_positions.push_back(state.positions[static_cast<std::size_t>(i)] - origin);
        if (sharing == GoalSharing::InnerObservers && !inner[static_cast<std::size_t>(i)]) continue;
        for (int g : nearest_indices(goals.positions, state.positions[static_cast<std::size_t>(i)],
                                     params.k_neighbors)) {
            goal_known[static_cast<std::size_t>(g)] = 1;
        }
    }
    for (std::size_t g = 0; g < goal_known.size(); ++g) {
        if (!goal_known[g]) continue;
        view.goal_ids.push_back(static_cast<int>(g));
        view.known_goal_positions.push_back(goals.positions[g] - origin);
    }
    return view;
}

}  // namespace swarmplan
