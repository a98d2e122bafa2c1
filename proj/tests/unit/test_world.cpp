#include "doctest.h"

#include "swarmplan/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

using namespace swarmplan;

namespace {

WorldState at(Positions p) {
    WorldState s;
    s.last_controls.assign(p.size(), Vec2{});
    s.positions = std::move(p);
    return s;
}

double min_pairwise(const Positions& p) {
    double best = INFINITY;
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = i + 1; j < p.size(); ++j) best = std::min(best, distance(p[i], p[j]));
    }
    return best;
}

ControllerFactory constant(Vec2 u) {
    return [u](const WorldState& s, const GoalSet&) -> Controller {
        const std::size_t n = s.positions.size();
        return [u, n](const WorldState&, const GoalSet&) { return Controls(n, u); };
    };
}

}  // namespace

TEST_CASE("params validation rejects each broken invariant") {
    SimParams ok;
    CHECK_NOTHROW(ok.validate());
    auto broken = [&](auto mutate) {
        SimParams p;
        mutate(p);
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    };
    broken([](SimParams& p) { p.n_agents = 0; });
    broken([](SimParams& p) { p.width = 0; });
    broken([](SimParams& p) { p.agent_radius = 0; });
    broken([](SimParams& p) { p.dt = 0; });
    broken([](SimParams& p) { p.gamma = 0; });
    broken([](SimParams& p) { p.gamma = 1.5; });
    broken([](SimParams& p) { p.k_neighbors = -1; });
    broken([](SimParams& p) { p.max_speed = 0; });
    CHECK(SimParams::width_for_density(100, 1.0) == doctest::Approx(10.0));
}

TEST_CASE("sample_initial: single agent lies inside the arena") {
    SimParams p;
    p.n_agents = 1;
    for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
        auto [s, g] = sample_initial(p, seed);
        REQUIRE(s.positions.size() == 1);
        REQUIRE(g.positions.size() == 1);
        for (Vec2 v : {s.positions[0], g.positions[0]}) {
            CHECK(v.x >= 0.0);
            CHECK(v.x <= 10.0);
            CHECK(v.y >= 0.0);
            CHECK(v.y <= 10.0);
        }
        CHECK(s.last_controls[0] == Vec2{});
        CHECK(s.step_index == 0);
    }
}

TEST_CASE("sample_initial: 2R separation within agents and within goals over 50 seeds") {
    SimParams p;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto [s, g] = sample_initial(p, seed);
        CHECK(s.positions.size() == 100);
        CHECK(min_pairwise(s.positions) >= 0.1);
        CHECK(min_pairwise(g.positions) >= 0.1);
    }
}

TEST_CASE("sample_initial: over-dense configuration is rejected") {
    SimParams p;
    p.n_agents = 200;
    p.width = 1.0;
    CHECK_THROWS_AS(sample_initial(p, 0), SamplingError);
}

TEST_CASE("sample_initial is deterministic in the seed") {
    SimParams p;
    auto a = sample_initial(p, 7);
    auto b = sample_initial(p, 7);
    auto c = sample_initial(p, 8);
    CHECK(a.first.positions == b.first.positions);
    CHECK(a.second.positions == b.second.positions);
    CHECK(a.first.positions != c.first.positions);
}

TEST_CASE("clamp_controls") {
    SimParams p;
    const Controls out = clamp_controls({{0, 0}, {3, 4}, {0.1, 0}}, p);
    CHECK(out[0] == Vec2{0, 0});
    CHECK(out[1].x == doctest::Approx(0.3));
    CHECK(out[1].y == doctest::Approx(0.4));
    CHECK(out[2] == Vec2{0.1, 0});
    CHECK_THROWS_AS(clamp_controls({{NAN, 0}}, p), std::invalid_argument);
    CHECK_THROWS_AS(clamp_controls({{INFINITY, 0}}, p), std::invalid_argument);
}

TEST_CASE("step: Euler update, fixed point and accumulated displacement") {
    SimParams p;
    WorldState s = at({{0, 0}});
    WorldState next = step(s, {{0.5, 0}}, p);
    CHECK(next.positions[0].x == doctest::Approx(0.05));
    CHECK(next.positions[0].y == 0.0);
    CHECK(next.last_controls[0] == Vec2{0.5, 0});
    CHECK(next.step_index == 1);

    WorldState still = at({{1, 2}, {3, 4}});
    CHECK(step(still, {{0, 0}, {0, 0}}, p).positions == still.positions);

    WorldState walk = s;
    for (int t = 0; t < 200; ++t) walk = step(walk, {{0.5, 0}}, p);
    CHECK(walk.positions[0].x == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(walk.positions[0].y == 0.0);

    CHECK_THROWS_AS(step(s, {{0, 0}, {0, 0}}, p), std::invalid_argument);
}

TEST_CASE("coverage examples") {
    SimParams p;
    GoalSet goals{{{0, 0}, {5, 5}}};
    CHECK(coverage(at({{0, 0}, {5, 5}}), goals, p) == 1.0);
    CHECK(coverage(at({{0.1, 0}, {5.5, 5}}), goals, p) == 0.5);
    // one agent covers two goals: no matching is enforced
    GoalSet pair{{{0, 0}, {0.38, 0}}};
    CHECK(coverage(at({{0.19, 0}}), pair, p) == 1.0);
    // strict inequality at exactly R_c
    CHECK(coverage(at({{0.2, 0}}), GoalSet{{{0, 0}}}, p) == 0.0);
}

TEST_CASE("collision counts") {
    SimParams p;
    CHECK(collision_counts(at({{0, 0}, {0.09, 0}}), p) == std::vector<int>{1, 1});
    CHECK(collision_counts(at({{0, 0}, {0.1, 0}}), p) == std::vector<int>{0, 0});
    CHECK(collision_counts(at({{1, 1}, {1, 1}, {1, 1}}), p) == std::vector<int>{2, 2, 2});
    CHECK(near_collision_counts(at({{0, 0}, {0.15, 0}}), p) == std::vector<int>{1, 1});
    CHECK(near_collision_counts(at({{0, 0}, {0.2, 0}}), p) == std::vector<int>{0, 0});
}

TEST_CASE("contact tracker counts a lasting contact once") {
    SimParams p;
    ContactTracker tracker(2);
    const double gaps[] = {0.2, 0.05, 0.06, 0.07, 0.3, 0.05};
    int events = 0, pairs = 0;
    for (double gap : gaps) {
        const auto c = tracker.update(at({{0, 0}, {gap, 0}}), p);
        events += c.new_events;
        pairs += c.pairs;
    }
    CHECK(pairs == 4);
    CHECK(events == 2);
}

TEST_CASE("discounted coverage") {
    CHECK(discounted_coverage(std::vector<double>(201, 1.0), 0.99) == doctest::Approx(1.0));
    CHECK(discounted_coverage(std::vector<double>(201, 0.5), 0.99) == doctest::Approx(0.5));
    CHECK(discounted_coverage(std::vector<double>{0.0, 1.0}, 0.5) == doctest::Approx(1.0 / 3.0));
    for (double gamma : {0.3, 0.9, 1.0}) {
        CHECK(discounted_coverage(std::vector<double>(17, 0.37), gamma) == doctest::Approx(0.37));
    }
}

TEST_CASE("property: coverage in [0,1] and invariant under relabeling") {
    SimParams p;
    p.n_agents = 30;
    p.width = 3.0;
    std::mt19937_64 rng(5);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto [s, g] = sample_initial(p, seed);
        const double c = coverage(s, g, p);
        CHECK(c >= 0.0);
        CHECK(c <= 1.0);
        std::shuffle(s.positions.begin(), s.positions.end(), rng);
        std::shuffle(g.positions.begin(), g.positions.end(), rng);
        CHECK(coverage(s, g, p) == c);
    }
}

TEST_CASE("property: clamped steps never move farther than u_max dt; collision sums are even") {
    SimParams p;
    p.n_agents = 25;
    p.width = 2.0;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd(0.0, 2.0);
    auto [s, g] = sample_initial(p, 3);
    for (int t = 0; t < 100; ++t) {
        Controls raw(s.positions.size());
        for (auto& u : raw) u = {nd(rng), nd(rng)};
        WorldState next = step(s, clamp_controls(raw, p), p);
        for (std::size_t i = 0; i < s.positions.size(); ++i) {
            CHECK(distance(next.positions[i], s.positions[i]) <= p.max_speed * p.dt + 1e-12);
        }
        const auto counts = collision_counts(next, p);
        CHECK(std::accumulate(counts.begin(), counts.end(), 0) % 2 == 0);
        s = next;
    }
}

TEST_CASE("simulate_episode: lengths, determinism and trace export") {
    SimParams p;
    p.n_agents = 10;
    p.width = 3.0;
    p.horizon_steps = 20;
    const auto a = simulate_episode(p, 4, constant({0.3, -0.2}), {true});
    const auto b = simulate_episode(p, 4, constant({0.3, -0.2}), {true});
    CHECK(a.length() == 21);
    CHECK(a.collisions.size() == 21);
    CHECK(a.positions.size() == 21);
    CHECK(a.coverage == b.coverage);
    CHECK(a.positions == b.positions);
    CHECK(a.total_step_pair_collisions() == 2 * a.total_collision_pairs());
    CHECK(a.total_contact_events() <= a.total_collision_pairs());

    std::ostringstream out;
    write_trace_jsonl(out, a);
    std::istringstream in(out.str());
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.at("step").get<int>() == lines);
        CHECK(j.at("positions").size() == 10);
        CHECK(j.at("controls").size() == 10);
        CHECK(j.at("coverage").get<double>() == a.coverage[static_cast<std::size_t>(lines)]);
        CHECK(j.contains("collisions_step_pair"));
        CHECK(j.contains("collisions_events"));
        CHECK(j.contains("near_collisions"));
        ++lines;
    }
    CHECK(lines == 21);
}
