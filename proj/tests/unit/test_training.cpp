#include "doctest.h"

#include "swarmplan/adamw.hpp"
#include "swarmplan/comm_graph.hpp"
#include "swarmplan/evaluation.hpp"
#include "swarmplan/gnn_policy.hpp"
#include "swarmplan/imitation.hpp"
#include "swarmplan/replay_buffer.hpp"
#include "swarmplan/reward.hpp"
#include "swarmplan/td3.hpp"

#include <cmath>
#include <random>
#include <set>

using namespace swarmplan;

namespace {

SimParams tiny_sim() {
    SimParams p;
    p.n_agents = 4;
    p.width = 2.0;
    p.horizon_steps = 12;
    p.k_neighbors = 2;
    return p;
}

GnnConfig tiny_net(const SimParams& p) {
    GnnConfig c;
    c.num_layers = 1;
    c.taps = 2;
    c.features = 8;
    c.mlp_hidden = 8;
    c.mlp_depth = 2;
    c.input_dim = observation_width(p.k_neighbors);
    c.max_speed = p.max_speed;
    return c;
}

bool same_params(const GnnParams& a, const GnnParams& b) {
    const auto x = a.tensors();
    const auto y = b.tensors();
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(*x[i] == *y[i])) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("AdamW examples") {
    AdamWOptions o;
    o.lr = 0.1;
    o.weight_decay = 0.0;
    Tensor2 p = Tensor2::Constant(2, 2, 3.0);
    Tensor2 g = Tensor2::Zero(2, 2);
    std::vector<Tensor2*> ps{&p};
    std::vector<const Tensor2*> gs{&g};
    AdamWState s(std::span<const Tensor2* const>(gs), o);
    adamw_step(ps, gs, s);
    CHECK(p == Tensor2::Constant(2, 2, 3.0));

    // with bias correction the first step moves each entry by lr * g / (|g| + eps)
    g << 2.0, -0.5, 1e-3, 0.0;
    AdamWState fresh(std::span<const Tensor2* const>(gs), o);
    p.setConstant(1.0);
    adamw_step(ps, gs, fresh);
    CHECK(p(0, 0) == doctest::Approx(0.9).epsilon(1e-9));
    CHECK(p(0, 1) == doctest::Approx(1.1).epsilon(1e-9));
    CHECK(p(1, 0) == doctest::Approx(1.0 - 0.1 * 1e-3 / (1e-3 + 1e-8)).epsilon(1e-12));
    CHECK(p(1, 1) == 1.0);

    // decoupled weight decay alone shrinks by (1 - lr * wd)
    o.weight_decay = 0.5;
    g.setZero();
    p.setConstant(2.0);
    AdamWState decay(std::span<const Tensor2* const>(gs), o);
    adamw_step(ps, gs, decay);
    CHECK(p(0, 0) == doctest::Approx(2.0 * (1.0 - 0.1 * 0.5)));

    Tensor2 wrong = Tensor2::Zero(3, 2);
    std::vector<const Tensor2*> bad{&wrong};
    CHECK_THROWS_AS(adamw_step(ps, bad, decay), std::invalid_argument);
    std::vector<const Tensor2*> none;
    CHECK_THROWS_AS(adamw_step(ps, none, decay), std::invalid_argument);
}

TEST_CASE("replay buffer: FIFO eviction and sampling") {
    ReplayBuffer<int> buf(3);
    CHECK_THROWS_AS(ReplayBuffer<int>(0), std::invalid_argument);
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(buf.sample_indices(2, rng), std::logic_error);
    for (int i = 0; i < 5; ++i) {
        buf.push(i);
        CHECK(buf.size() <= buf.capacity());
    }
    CHECK(buf.size() == 3);
    CHECK(buf.at(0) == 2);
    CHECK(buf.at(1) == 3);
    CHECK(buf.at(2) == 4);
    CHECK_THROWS_AS(buf.at(3), std::out_of_range);
    CHECK(buf.sample_indices(10, rng).size() == 3);

    ReplayBuffer<int> big(50);
    for (int i = 0; i < 50; ++i) big.push(i);
    for (int trial = 0; trial < 100; ++trial) {
        const auto idx = big.sample_indices(20, rng);
        CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 20);
    }
}

TEST_CASE("replay buffer: sampling is uniform (chi-square)") {
    const std::size_t n = 20;
    ReplayBuffer<int> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf.push(static_cast<int>(i));
    std::mt19937_64 rng(42);
    std::vector<double> hits(n, 0.0);
    const int trials = 20000;
    const std::size_t batch = 5;
    for (int t = 0; t < trials; ++t) {
        for (std::size_t i : buf.sample_indices(batch, rng)) hits[i] += 1.0;
    }
    const double expected = trials * static_cast<double>(batch) / n;
    double chi2 = 0.0;
    for (double h : hits) chi2 += (h - expected) * (h - expected) / expected;
    // 19 degrees of freedom; 43.8 is the 0.999 quantile
    CHECK(chi2 < 43.8);
}

TEST_CASE("reward examples and bounds") {
    const RewardParams rp;
    CHECK(agent_reward(0.0, 0, rp) == 1.0);
    CHECK(agent_reward(0.1, 0, rp) == doctest::Approx(std::exp(-1.0)));
    CHECK(agent_reward(0.0, 1, rp) == -29.0);
    double prev = 1.0;
    for (double d = 0.01; d < 2.0; d += 0.01) {
        const double r = agent_reward(d, 0, rp);
        CHECK(r <= prev);
        CHECK(r > 0.0);
        prev = r;
    }

    SimParams sp = tiny_sim();
    WorldState s;
    s.positions = {{0.5, 0.5}, {1.5, 1.5}, {0.5, 1.5}, {1.5, 0.5}};
    GoalSet g{{{1.5, 0.5}, {0.5, 1.5}, {1.5, 1.5}, {0.5, 0.5}}};
    for (double r : reward(s, g, sp, rp)) CHECK(r == 1.0);
    s.positions[1] = {0.55, 0.5};
    const auto r = reward(s, g, sp, rp);
    CHECK(r[0] < -28.0);
    CHECK(r[1] < -28.0);
    CHECK(r[2] == 1.0);
}

TEST_CASE("IL episode collection") {
    const SimParams sp = tiny_sim();
    const auto expert = collect_il_episode(nullptr, 0.5, sp, 7);
    REQUIRE(expert.size() == static_cast<std::size_t>(sp.horizon_steps));
    for (const IlSample& s : expert) {
        CHECK(s.graph.obs.rows() == sp.n_agents);
        CHECK(s.graph.obs.cols() == observation_width(sp.k_neighbors));
        for (Eigen::Index i = 0; i < s.expert.rows(); ++i) CHECK(s.expert.row(i).norm() <= sp.max_speed + 1e-12);
    }

    const GnnParams zero = GnnParams::zeros(tiny_net(sp));
    const auto mixed_all_expert = collect_il_episode(&zero, 1.0, sp, 7);
    for (std::size_t t = 0; t < expert.size(); ++t) CHECK(mixed_all_expert[t].graph.obs == expert[t].graph.obs);

    // a zero actor never moves the swarm, so every visited state is the first
    const auto stuck = collect_il_episode(&zero, 0.0, sp, 7);
    for (const IlSample& s : stuck) {
        CHECK(s.graph.obs == expert.front().graph.obs);
        CHECK(s.expert == expert.front().expert);
    }
    CHECK_THROWS_AS(collect_il_episode(&zero, 1.5, sp, 7), std::invalid_argument);
    CHECK_THROWS_AS(collect_il_episode(&zero, -0.1, sp, 7), std::invalid_argument);
}

TEST_CASE("IL batch loss gradient matches finite differences") {
    const SimParams sp = tiny_sim();
    GnnParams net = GnnParams::init(tiny_net(sp), 3);
    const auto samples = collect_il_episode(nullptr, 1.0, sp, 11);
    std::vector<const IlSample*> batch{&samples[0], &samples[5], &samples[9]};
    GnnParams grads = GnnParams::zeros(net.config);
    const double loss = il_batch_loss(net, batch, &grads);
    CHECK(loss == doctest::Approx(il_batch_loss(net, batch)));

    const double h = 1e-6;
    auto pt = net.tensors();
    const auto gt = grads.tensors();
    double worst = 0.0;
    for (std::size_t t = 0; t < pt.size(); ++t) {
        for (Eigen::Index e = 0; e < pt[t]->size(); e += 3) {
            const double orig = pt[t]->data()[e];
            pt[t]->data()[e] = orig + h;
            const double up = il_batch_loss(net, batch);
            pt[t]->data()[e] = orig - h;
            const double down = il_batch_loss(net, batch);
            pt[t]->data()[e] = orig;
            const double fd = (up - down) / (2 * h);
            const double an = gt[t]->data()[e];
            worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6}));
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("IL smoke: a tiny network overfits a handful of states") {
    const SimParams sp = tiny_sim();
    GnnConfig c = tiny_net(sp);
    c.features = 16;
    c.mlp_hidden = 16;
    GnnParams net = GnnParams::init(c, 5);
    const auto samples = collect_il_episode(nullptr, 1.0, sp, 2);
    std::vector<const IlSample*> batch{&samples[0], &samples[4]};
    AdamWOptions o;
    o.lr = 3e-3;
    AdamWState opt(net, o);
    const double initial = il_batch_loss(net, batch);
    double loss = initial;
    for (int step = 0; step < 2000 && loss >= 1e-3; ++step) {
        GnnParams g = GnnParams::zeros(c);
        loss = il_batch_loss(net, batch, &g);
        adamw_step(net, g, opt);
    }
    CHECK(loss < 1e-3);
    CHECK(loss < initial);
}

TEST_CASE("polyak averaging endpoints") {
    const GnnConfig c = tiny_net(tiny_sim());
    const GnnParams src = GnnParams::init(c, 1);
    GnnParams tgt = GnnParams::init(c, 2);
    const GnnParams before = tgt;
    polyak_update(tgt, src, 0.0);
    CHECK(same_params(tgt, before));
    polyak_update(tgt, src, 1.0);
    CHECK(same_params(tgt, src));

    GnnParams half = before;
    polyak_update(half, src, 0.5);
    CHECK((*half.tensors()[0] - 0.5 * (*src.tensors()[0] + *before.tensors()[0])).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("critic targets on a toy transition") {
    const SimParams sp = tiny_sim();
    const GnnParams actor = GnnParams::init(tiny_net(sp), 4);
    Td3Networks nets = make_td3_networks(actor, 9);
    CHECK(nets.critic1.config.input_dim == actor.config.input_dim + 2);
    CHECK(nets.critic1.config.output_dim == 1);
    CHECK_FALSE(nets.critic1.config.action_squash);
    CHECK(same_params(nets.actor_target, nets.actor));
    CHECK(same_params(nets.critic1_target, nets.critic1));

    // constant target critics: Q1' = 2, Q2' = -3 for every input
    for (auto [q, value] : {std::pair{&nets.critic1_target, 2.0}, std::pair{&nets.critic2_target, -3.0}}) {
        q->set_zero();
        q->read_out.back().bias.setConstant(value);
    }

    Td3Config cfg = Td3Config::for_max_speed(sp.max_speed);
    cfg.target_noise_sigma = 0.0;
    cfg.rl_gamma = 0.9;
    auto traj = collect_rl_episode(actor, sp, cfg, 3);
    RlTransition a = traj[0];
    RlTransition b = traj[1];
    b.done = true;
    const std::vector<const RlTransition*> batch{&a, &b};
    std::mt19937_64 rng(0);
    const Tensor2 y = critic_targets(nets, batch, cfg, sp.max_speed, rng);
    REQUIRE(y.rows() == 2 * sp.n_agents);
    for (int i = 0; i < sp.n_agents; ++i) {
        CHECK(y(i, 0) == doctest::Approx(a.reward(i, 0) + 0.9 * -3.0).epsilon(1e-12));
        CHECK(y(sp.n_agents + i, 0) == doctest::Approx(b.reward(i, 0)).epsilon(1e-12));
    }
}

TEST_CASE("RL episode collection") {
    const SimParams sp = tiny_sim();
    const GnnParams actor = GnnParams::init(tiny_net(sp), 4);
    Td3Config cfg = Td3Config::for_max_speed(sp.max_speed);
    const auto traj = collect_rl_episode(actor, sp, cfg, 5);
    REQUIRE(traj.size() == static_cast<std::size_t>(sp.horizon_steps));
    for (std::size_t t = 0; t < traj.size(); ++t) {
        CHECK_FALSE(traj[t].done);
        CHECK(traj[t].reward.rows() == sp.n_agents);
        for (Eigen::Index i = 0; i < traj[t].action.rows(); ++i) {
            CHECK(traj[t].action.row(i).norm() <= sp.max_speed + 1e-12);
        }
        if (t + 1 < traj.size()) CHECK(traj[t].next.obs == traj[t + 1].current.obs);
    }
    const auto again = collect_rl_episode(actor, sp, cfg, 5);
    CHECK(again.back().action == traj.back().action);
}

TEST_CASE("learning-rate schedule") {
    LrSchedule s;
    CHECK(s.actor_frozen(0));
    CHECK(s.actor_frozen(99));
    CHECK_FALSE(s.actor_frozen(100));
    CHECK(s.actor_lr(50) == 0.0);
    CHECK(s.critic_lr(50) == 1e-4);
    CHECK(s.actor_lr(100) == doctest::Approx(1e-5 / 50));
    CHECK(s.actor_lr(149) == doctest::Approx(1e-5));
    CHECK(s.actor_lr(400) == 1e-5);
    CHECK(s.critic_lr(124) == doctest::Approx(1e-4 + 0.5 * (5e-5 - 1e-4)));
    CHECK(s.critic_lr(400) == 5e-5);
}

TEST_CASE("TD3: actor is untouched while frozen, training is deterministic") {
    const SimParams sp = tiny_sim();
    const GnnParams actor = GnnParams::init(tiny_net(sp), 4);
    Td3Config cfg = Td3Config::for_max_speed(sp.max_speed);
    cfg.epochs = 2;
    cfg.episodes_per_epoch = 2;
    cfg.batch_size = 4;
    cfg.grad_steps_per_epoch = 4;
    cfg.eval_episodes = 2;
    cfg.buffer_capacity = 100;
    cfg.schedule.actor_freeze_epochs = 5;
    cfg.seed = 17;
    const Td3Result frozen = td3_train(cfg, sp, actor);
    CHECK(same_params(frozen.networks.actor, actor));
    CHECK(same_params(frozen.networks.actor_target, actor));
    CHECK_FALSE(same_params(frozen.networks.critic1, make_td3_networks(actor, cfg.seed).critic1));
    REQUIRE(frozen.history.size() == 2);

    cfg.schedule.actor_freeze_epochs = 0;
    cfg.schedule.ramp_epochs = 1;
    cfg.schedule.actor_lr_final = 1e-3;
    const Td3Result a = td3_train(cfg, sp, actor);
    CHECK_FALSE(same_params(a.networks.actor, actor));
    cfg.threads = 2;
    const Td3Result b = td3_train(cfg, sp, actor);
    CHECK(same_params(a.networks.actor, b.networks.actor));
    CHECK(same_params(a.networks.critic2_target, b.networks.critic2_target));
    CHECK(a.history.back().loss == b.history.back().loss);

    cfg.policy_delay = 0;
    CHECK_THROWS_AS(td3_train(cfg, sp, actor), std::invalid_argument);
}

TEST_CASE("IL training is deterministic across thread counts") {
    const SimParams sp = tiny_sim();
    IlConfig cfg;
    cfg.epochs = 2;
    cfg.episodes_per_epoch = 3;
    cfg.batch_size = 8;
    cfg.eval_episodes = 2;
    cfg.seed = 5;
    const GnnParams init = GnnParams::init(tiny_net(sp), 8);
    int calls = 0;
    const IlResult one = il_train(cfg, sp, init, [&](const EpochMetrics& m, const GnnParams&) {
        CHECK(m.epoch == calls);
        ++calls;
    });
    CHECK(calls == 2);
    cfg.threads = 3;
    const IlResult three = il_train(cfg, sp, init);
    CHECK(same_params(one.params, three.params));
    CHECK(one.history.back().loss == three.history.back().loss);
    CHECK(one.history.back().discounted_coverage == three.history.back().discounted_coverage);
    CHECK_FALSE(same_params(one.params, init));
}

TEST_CASE("seed derivation") {
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 4; ++s) {
        for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(7, s, i));
    }
    CHECK(seen.size() == 400);
    const auto r = seed_range(10, 3);
    CHECK(r == std::vector<std::uint64_t>{10, 11, 12});
}

TEST_CASE("actor update ascends the critic") {
    const SimParams sp = tiny_sim();
    const GnnParams actor = GnnParams::init(tiny_net(sp), 12);
    Td3Config cfg = Td3Config::for_max_speed(sp.max_speed);
    const auto traj = collect_rl_episode(actor, sp, cfg, 4);
    std::vector<const RlTransition*> batch;
    for (const auto& t : traj) batch.push_back(&t);
    auto mean_q = [&](const Td3Networks& n) {
        std::vector<const GraphObservation*> obs;
        for (const RlTransition* t : batch) obs.push_back(&t->current);
        const GraphObservation g = stack_graphs(obs);
        Tensor2 in(g.obs.rows(), g.obs.cols() + 2);
        in << g.obs, gnn_infer(n.actor, g.obs, g.shift);
        return gnn_infer(n.critic1, in, g.shift).mean();
    };
    for (std::uint64_t seed : {1, 2, 3}) {
        Td3Networks nets = make_td3_networks(actor, seed);
        AdamWOptions o;
        o.lr = 1e-6;
        o.weight_decay = 0.0;
        AdamWState opt(nets.actor, o);
        const double before = mean_q(nets);
        CHECK(actor_update(nets, opt, batch) == doctest::Approx(before).epsilon(1e-12));
        CHECK(mean_q(nets) > before);
        CHECK(same_params(nets.critic1, make_td3_networks(actor, seed).critic1));
    }
}
