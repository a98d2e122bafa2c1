#include "swarmplan/policies.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <memory>
#include <stdexcept>

namespace swarmplan {

Vec2 seek(Vec2 position, Vec2 target, const SimParams& params) {
    const Vec2 delta = target - position;
    const double dist = delta.norm();
    if (dist <= kSnapDistance) {
        return {};
    }
    const double reach = params.max_speed * params.dt;
    if (dist <= reach) {
        return (1.0 / params.dt) * delta;
    }
    return (params.max_speed / dist) * delta;
}

Controls lsap_policy(const WorldState& state, const GoalSet& goals, const SimParams& params) {
    const Assignment a = lsap_assignment(state.positions, goals.positions);
    Controls u(state.positions.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = seek(state.positions[i], goals.positions[static_cast<std::size_t>(a.goal_of[i])], params);
    }
    return u;
}

CaptPlan capt_plan(const WorldState& initial, const GoalSet& goals, const SimParams& params) {
    CaptPlan plan;
    plan.assignment = capt_assignment(initial.positions, goals.positions);
    plan.start_positions = initial.positions;
    const std::size_t n = initial.positions.size();
    double max_dist = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 g = goals.positions[static_cast<std::size_t>(plan.assignment.goal_of[i])];
        max_dist = std::max(max_dist, distance(initial.positions[i], g));
    }
    plan.arrival_time = max_dist / params.max_speed;
    plan.velocities.assign(n, Vec2{});
    if (plan.arrival_time > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 g = goals.positions[static_cast<std::size_t>(plan.assignment.goal_of[i])];
            plan.velocities[i] = (1.0 / plan.arrival_time) * (g - initial.positions[i]);
        }
    }
    return plan;
}

Controls capt_policy(const CaptPlan& plan, double t, const SimParams& params) {
    const double remaining = plan.arrival_time - t;
    if (remaining <= 0.0) {
        return Controls(plan.velocities.size());
    }
    const double scale = remaining >= params.dt ? 1.0 : remaining / params.dt;
    Controls u(plan.velocities.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = scale * plan.velocities[i];
    return u;
}

Controls dhop_policy(const WorldState& state, const GoalSet& goals, const CommGraph& graph,
                     const SimParams& params, int d, GoalSharing sharing) {
    if (d < 0) {
        throw std::invalid_argument("dhop_policy requires d >= 0");
    }
    const int n = static_cast<int>(state.positions.size());
    Controls u(static_cast<std::size_t>(n));
    if (d == 0) {
        for (int i = 0; i < n; ++i) {
            const Vec2 x = state.positions[static_cast<std::size_t>(i)];
            const auto nearest = nearest_indices(goals.positions, x, std::min(1, params.k_neighbors));
            if (!nearest.empty()) {
                u[static_cast<std::size_t>(i)] =
                    seek(x, goals.positions[static_cast<std::size_t>(nearest.front())], params);
            }
        }
        return u;
    }

    const double sentinel = 10.0 * params.width;
    for (int ego = 0; ego < n; ++ego) {
        const DHopView view = d_hop_view(graph, state, goals, params, d, ego, sharing);
        const int na = static_cast<int>(view.agent_ids.size());
        const int ng = static_cast<int>(view.goal_ids.size());
        if (ng == 0) continue;
        const int m = std::max(na, ng);
        CostMatrix cost(m, sentinel);
        for (int a = 0; a < na; ++a)
            for (int g = 0; g < ng; ++g)
                cost(a, g) = distance(view.known_agent_positions[static_cast<std::size_t>(a)],
                                      view.known_goal_positions[static_cast<std::size_t>(g)]);
        const Assignment local = hungarian(cost);
        const int ego_row = static_cast<int>(
            std::find(view.agent_ids.begin(), view.agent_ids.end(), ego) - view.agent_ids.begin());
        const int col = local.goal_of[static_cast<std::size_t>(ego_row)];
        if (col >= ng) continue;  // matched to padding: hold position
        const Vec2 x = state.positions[static_cast<std::size_t>(ego)];
        u[static_cast<std::size_t>(ego)] =
            seek(x, goals.positions[static_cast<std::size_t>(view.goal_ids[static_cast<std::size_t>(col)])], params);
    }
    return u;
}

namespace {

int parse_int(std::string_view s, std::string_view context) {
    int value = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || value < 0) {
        throw std::invalid_argument("invalid hop count in policy '" + std::string(context) + "'");
    }
    return value;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

PolicyKind PolicyKind::parse(std::string_view text) {
    PolicyKind kind;
    const std::string t = lower(text);
    if (t == "lsap") {
        kind.tag = Tag::Lsap;
    } else if (t == "capt") {
        kind.tag = Tag::Capt;
    } else if (t.rfind("dhop:", 0) == 0) {
        kind.tag = Tag::DHop;
        kind.hops = parse_int(std::string_view(t).substr(5), text);
    } else if (t.size() > 4 && t.compare(t.size() - 4, 4, "-hop") == 0) {
        kind.tag = Tag::DHop;
        kind.hops = parse_int(std::string_view(t).substr(0, t.size() - 4), text);
    } else if (t.rfind("gnn:", 0) == 0) {
        kind.tag = Tag::Gnn;
        kind.checkpoint = std::string(text.substr(4));
        if (kind.checkpoint.empty()) {
            throw std::invalid_argument("gnn policy needs a checkpoint path: gnn:<path>");
        }
    } else {
        throw std::invalid_argument("unknown policy '" + std::string(text) +
                                    "' (expected lsap, capt, dhop:<d>, gnn:<path>)");
    }
    return kind;
}

std::string PolicyKind::name() const {
    switch (tag) {
        case Tag::Lsap: return "lsap";
        case Tag::Capt: return "capt";
        case Tag::DHop: return "dhop:" + std::to_string(hops);
        case Tag::Gnn: return "gnn:" + checkpoint;
    }
    return "unknown";
}

ControllerFactory make_baseline_controller(const PolicyKind& kind, const SimParams& params) {
    switch (kind.tag) {
        case PolicyKind::Tag::Lsap:
            return [params](const WorldState&, const GoalSet&) -> Controller {
                return [params](const WorldState& s, const GoalSet& g) { return lsap_policy(s, g, params); };
            };
        case PolicyKind::Tag::Capt:
            return [params](const WorldState& init, const GoalSet& goals) -> Controller {
                auto plan = std::make_shared<const CaptPlan>(capt_plan(init, goals, params));
                return [plan, params](const WorldState& s, const GoalSet&) {
                    return capt_policy(*plan, s.step_index * params.dt, params);
                };
            };
        case PolicyKind::Tag::DHop:
            return [params, d = kind.hops](const WorldState&, const GoalSet&) -> Controller {
                return [params, d](const WorldState& s, const GoalSet& g) {
                    if (d == 0) {
                        return dhop_policy(s, g, CommGraph{}, params, 0);
                    }
                    return dhop_policy(s, g, knn_graph(s.positions, params.k_neighbors), params, d);
                };
            };
        case PolicyKind::Tag::Gnn:
            break;
    }
    throw std::invalid_argument("make_baseline_controller does not build GNN policies");
}

}  // namespace swarmplan
