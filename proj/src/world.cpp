#include "swarmplan/world.hpp"

#include "json.hpp"

#include <numbers>
#include <ostream>
#include <random>
#include <string>

namespace swarmplan {
namespace {

void require(bool ok, const char* message) {
    if (!ok) {
        throw std::invalid_argument(message);
    }
}

Positions sample_separated(std::mt19937_64& rng, int count, double width, double min_distance,
                           const char* what) {
    std::uniform_real_distribution<double> coord(0.0, width);
    const double min_sq = min_distance * min_distance;
    Positions out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxResamplesPerEntity && !placed; ++attempt) {
            const double x = coord(rng);
            const double y = coord(rng);
            const Vec2 p{x, y};
            placed = true;
            for (const Vec2& q : out) {
                if (squared_distance(p, q) < min_sq) {
                    placed = false;
                    break;
                }
            }
            if (placed) {
                out.push_back(p);
            }
        }
        if (!placed) {
            throw SamplingError(std::string("could not place ") + what + " " + std::to_string(i) +
                                " after " + std::to_string(kMaxResamplesPerEntity) + " attempts");
        }
    }
    return out;
}

std::vector<int> threshold_counts(const Positions& x, double threshold) {
    const std::size_t n = x.size();
    const double thr_sq = threshold * threshold;
    std::vector<int> counts(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (squared_distance(x[i], x[j]) < thr_sq) {
                ++counts[i];
                ++counts[j];
            }
        }
    }
    return counts;
}

template <class T>
long long nested_sum(const std::vector<std::vector<T>>& rows) {
    long long total = 0;
    for (const auto& row : rows) {
        for (T v : row) {
            total += v;
        }
    }
    return total;
}

}  // namespace

void SimParams::validate() const {
    require(n_agents >= 1, "n_agents must be >= 1");
    require(std::isfinite(width) && width > 0.0, "width must be > 0");
    require(std::isfinite(agent_radius) && agent_radius > 0.0, "agent_radius must be > 0");
    require(std::isfinite(coverage_radius) && coverage_radius > 0.0, "coverage_radius must be > 0");
    require(std::isfinite(max_speed) && max_speed > 0.0, "max_speed must be > 0");
    require(std::isfinite(dt) && dt > 0.0, "dt must be > 0");
    require(horizon_steps >= 0, "horizon_steps must be >= 0");
    require(k_neighbors >= 0, "k_neighbors must be >= 0");
    require(gamma > 0.0 && gamma <= 1.0, "gamma must be in (0, 1]");
    require(std::isfinite(near_collision_factor) && near_collision_factor > 0.0,
            "near_collision_factor must be > 0");
}

double SimParams::width_for_density(int n_agents, double density) {
    require(density > 0.0, "density must be > 0");
    return std::sqrt(static_cast<double>(n_agents) / density);
}

long long EpisodeTrace::total_step_pair_collisions() const { return nested_sum(collisions); }

long long EpisodeTrace::total_collision_pairs() const {
    long long total = 0;
    for (int v : collision_pairs) total += v;
    return total;
}

long long EpisodeTrace::total_contact_events() const {
    long long total = 0;
    for (int v : contact_events) total += v;
    return total;
}

long long EpisodeTrace::total_near_collisions() const { return nested_sum(near_collisions); }

std::pair<WorldState, GoalSet> sample_initial(const SimParams& params, std::uint64_t seed) {
    return sample_initial(params, seed, 2.0 * params.agent_radius);
}

std::pair<WorldState, GoalSet> sample_initial(const SimParams& params, std::uint64_t seed,
                                              double min_separation) {
    params.validate();
    if (!(min_separation >= 2.0 * params.agent_radius)) {
        throw std::invalid_argument("min_separation must be at least 2R");
    }
    const double r = 0.5 * min_separation;
    const double disc_area = 2.0 * params.n_agents * std::numbers::pi * r * r;
    if (disc_area > 0.5 * params.width * params.width) {
        throw SamplingError("configuration too dense: 2N*pi*R^2 exceeds half the arena area");
    }
    std::mt19937_64 rng(seed);
    WorldState state;
    state.positions = sample_separated(rng, params.n_agents, params.width, min_separation, "agent");
    state.last_controls.assign(static_cast<std::size_t>(params.n_agents), Vec2{});
    GoalSet goals;
    goals.positions = sample_separated(rng, params.n_agents, params.width, min_separation, "goal");
    return {std::move(state), std::move(goals)};
}

Controls clamp_controls(const Controls& raw, const SimParams& params) {
    Controls out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const Vec2 u = raw[i];
        if (!u.finite()) {
            throw std::invalid_argument("non-finite control for agent " + std::to_string(i));
        }
        const double n = u.norm();
        out[i] = n > params.max_speed ? (params.max_speed / n) * u : u;
    }
    return out;
}

WorldState step(const WorldState& state, const Controls& controls, const SimParams& params) {
    if (controls.size() != state.positions.size()) {
        throw std::invalid_argument("control count does not match agent count");
    }
    WorldState next;
    next.positions.resize(state.positions.size());
    for (std::size_t i = 0; i < controls.size(); ++i) {
        next.positions[i] = state.positions[i] + params.dt * controls[i];
    }
    next.last_controls = controls;
    next.step_index = state.step_index + 1;
    return next;
}

double coverage(const WorldState& state, const GoalSet& goals, const SimParams& params) {
    if (goals.positions.empty()) {
        return 0.0;
    }
    const double rc_sq = params.coverage_radius * params.coverage_radius;
    int covered = 0;
    for (const Vec2& g : goals.positions) {
        for (const Vec2& x : state.positions) {
            if (squared_distance(g, x) < rc_sq) {
                ++covered;
                break;
            }
        }
    }
    return static_cast<double>(covered) / static_cast<double>(goals.positions.size());
}

std::vector<int> collision_counts(const WorldState& state, const SimParams& params) {
    return threshold_counts(state.positions, 2.0 * params.agent_radius);
}

std::vector<int> near_collision_counts(const WorldState& state, const SimParams& params) {
    return threshold_counts(state.positions, params.near_collision_factor * params.agent_radius);
}

ContactTracker::ContactTracker(int n_agents)
    : n_(n_agents), in_contact_(static_cast<std::size_t>(n_agents) * n_agents, 0) {}

ContactTracker::StepCounts ContactTracker::update(const WorldState& state, const SimParams& params) {
    if (static_cast<int>(state.positions.size()) != n_) {
        throw std::invalid_argument("ContactTracker: agent count changed");
    }
    const double thr = 2.0 * params.agent_radius;
    const double thr_sq = thr * thr;
    StepCounts counts;
    for (int i = 0; i < n_; ++i) {
        for (int j = i + 1; j < n_; ++j) {
            const bool touching = squared_distance(state.positions[i], state.positions[j]) < thr_sq;
            auto& flag = in_contact_[static_cast<std::size_t>(i) * n_ + j];
            if (touching) {
                ++counts.pairs;
                if (!flag) {
                    ++counts.new_events;
                }
            }
            flag = touching ? 1 : 0;
        }
    }
    return counts;
}

double discounted_coverage(const std::vector<double>& coverage, double gamma) {
    double weighted = 0.0;
    double norm = 0.0;
    double w = 1.0;
    for (double c : coverage) {
        weighted += w * c;
        norm += w;
        w *= gamma;
    }
    return norm > 0.0 ? weighted / norm : 0.0;
}

double discounted_coverage(const EpisodeTrace& trace, const SimParams& params) {
    return discounted_coverage(trace.coverage, params.gamma);
}

EpisodeTrace simulate_episode(const SimParams& params, std::uint64_t seed,
                              const ControllerFactory& make_controller,
                              const RolloutOptions& options) {
    auto [state, goals] = sample_initial(params, seed);
    return simulate_episode(params, state, goals, make_controller, options);
}

EpisodeTrace simulate_episode(const SimParams& params, const WorldState& initial,
                              const GoalSet& goals, const ControllerFactory& make_controller,
                              const RolloutOptions& options) {
    params.validate();
    EpisodeTrace trace;
    const std::size_t len = static_cast<std::size_t>(params.horizon_steps) + 1;
    trace.coverage.reserve(len);
    trace.collisions.reserve(len);
    trace.near_collisions.reserve(len);

    ContactTracker contacts(params.n_agents);
    WorldState state = initial;
    Controller controller = make_controller(state, goals);

    auto record = [&](const WorldState& s) {
        trace.coverage.push_back(coverage(s, goals, params));
        trace.collisions.push_back(collision_counts(s, params));
        trace.near_collisions.push_back(near_collision_counts(s, params));
        const auto c = contacts.update(s, params);
        trace.collision_pairs.push_back(c.pairs);
        trace.contact_events.push_back(c.new_events);
        if (options.record_positions) {
            trace.positions.push_back(s.positions);
            trace.controls.push_back(s.last_controls);
        }
    };

    record(state);
    for (int t = 0; t < params.horizon_steps; ++t) {
        const Controls u = clamp_controls(controller(state, goals), params);
        state = step(state, u, params);
        record(state);
    }
    return trace;
}

void write_trace_jsonl(std::ostream& out, const EpisodeTrace& trace) {
    if (trace.positions.size() != trace.length()) {
        throw std::invalid_argument("trace was recorded without positions");
    }
    for (std::size_t t = 0; t < trace.length(); ++t) {
        nlohmann::json rec;
        rec["step"] = t;
        auto pts = nlohmann::json::array();
        for (const Vec2& p : trace.positions[t]) pts.push_back({p.x, p.y});
        rec["positions"] = std::move(pts);
        auto ctl = nlohmann::json::array();
        for (const Vec2& u : trace.controls[t]) ctl.push_back({u.x, u.y});
        rec["controls"] = std::move(ctl);
        rec["coverage"] = trace.coverage[t];
        long long step_pair = 0;
        for (int v : trace.collisions[t]) step_pair += v;
        long long near = 0;
        for (int v : trace.near_collisions[t]) near += v;
        rec["collisions_step_pair"] = step_pair;
        rec["collisions_events"] = trace.contact_events[t];
        rec["near_collisions"] = near;
        out << rec.dump() << '\n';
    }
}

}  // namespace swarmplan
