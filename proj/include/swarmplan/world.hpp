#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace swarmplan {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
    friend Vec2 operator*(Vec2 v, double s) { return {s * v.x, s * v.y}; }
    friend bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }

    double norm() const { return std::hypot(x, y); }
    double squared_norm() const { return x * x + y * y; }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }
inline double squared_distance(Vec2 a, Vec2 b) { return (a - b).squared_norm(); }

using Positions = std::vector<Vec2>;
using Controls = std::vector<Vec2>;

struct SimParams {
    int n_agents = 100;
    double width = 10.0;
    double agent_radius = 0.05;
    double coverage_radius = 0.2;
    double max_speed = 0.5;
    double dt = 0.1;
    int horizon_steps = 200;
    int k_neighbors = 3;
    double gamma = 0.99;
    double near_collision_factor = 4.0;

    /// Throws std::invalid_argument on the first violated invariant.
    void validate() const;

    /// Square arena side for N agents at density rho = N / w^2.
    static double width_for_density(int n_agents, double density);
};

struct WorldState {
    Positions positions;
    Controls last_controls;
    int step_index = 0;
};

struct GoalSet {
    Positions positions;
};

/// Per-step metrics for one episode. Index t covers t = 0..horizon_steps.
struct EpisodeTrace {
    std::vector<double> coverage;
    std::vector<std::vector<int>> collisions;
    std::vector<std::vector<int>> near_collisions;
    std::vector<int> collision_pairs;
    std::vector<int> contact_events;
    std::vector<Positions> positions;
    std::vector<Controls> controls;

    std::size_t length() const { return coverage.size(); }
    /// Literal sum over agents and steps of p_i(t); every colliding pair counts twice per step.
    long long total_step_pair_collisions() const;
    /// Pair-step count: each colliding pair once per step.
    long long total_collision_pairs() const;
    /// Contiguous contact intervals, each pair counted once per interval.
    long long total_contact_events() const;
    long long total_near_collisions() const;
};

class SamplingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kMaxResamplesPerEntity = 10000;

/// Uniform agents and goals in [0, w]^2 with pairwise agent-agent and
/// goal-goal distances >= 2R. Deterministic in seed.
std::pair<WorldState, GoalSet> sample_initial(const SimParams& params, std::uint64_t seed);

/// Same, with an explicit minimum separation (>= 2R) inside each set.
std::pair<WorldState, GoalSet> sample_initial(const SimParams& params, std::uint64_t seed,
                                              double min_separation);

Controls clamp_controls(const Controls& raw, const SimParams& params);

WorldState step(const WorldState& state, const Controls& controls, const SimParams& params);

double coverage(const WorldState& state, const GoalSet& goals, const SimParams& params);

/// p_i = #{j != i : |x_i - x_j| < 2R}.
std::vector<int> collision_counts(const WorldState& state, const SimParams& params);
/// Same as collision_counts with the threshold near_collision_factor * R.
std::vector<int> near_collision_counts(const WorldState& state, const SimParams& params);

/// Tracks which pairs are currently in contact (< 2R) so a contact that lasts
/// several steps is reported as one event.
class ContactTracker {
public:
    explicit ContactTracker(int n_agents);

    struct StepCounts {
        int pairs = 0;       ///< colliding pairs at this step
        int new_events = 0;  ///< pairs that were not in contact at the previous step
    };

    StepCounts update(const WorldState& state, const SimParams& params);

private:
    int n_;
    std::vector<std::uint8_t> in_contact_;
};

double discounted_coverage(const EpisodeTrace& trace, const SimParams& params);
double discounted_coverage(const std::vector<double>& coverage, double gamma);

/// Maps the current state to a control matrix. Controllers may keep internal
/// state for one episode.
using Controller = std::function<Controls(const WorldState&, const GoalSet&)>;
/// Builds a controller for one episode from its initial conditions.
using ControllerFactory = std::function<Controller(const WorldState&, const GoalSet&)>;

struct RolloutOptions {
    bool record_positions = false;
};

/// Runs one episode from sample_initial(params, seed). Controls are clamped
/// before integration.
EpisodeTrace simulate_episode(const SimParams& params, std::uint64_t seed,
                              const ControllerFactory& make_controller,
                              const RolloutOptions& options = {});

EpisodeTrace simulate_episode(const SimParams& params, const WorldState& initial,
                              const GoalSet& goals, const ControllerFactory& make_controller,
                              const RolloutOptions& options = {});

/// Writes one JSON object per step:
/// {step, positions, controls, coverage, collisions_step_pair, collisions_events, near_collisions}.
/// Requires a trace recorded with record_positions.
void write_trace_jsonl(std::ostream& out, const EpisodeTrace& trace);

}  // namespace swarmplan
