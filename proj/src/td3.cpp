#include "swarmplan/td3.hpp"

#include "swarmplan/evaluation.hpp"
#include "swarmplan/replay_buffer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace swarmplan {
namespace {

constexpr std::uint64_t kExploreStream = 11;
constexpr std::uint64_t kUpdateStream = 12;
constexpr std::uint64_t kCriticInitStream = 13;

Tensor2 with_actions(const Tensor2& obs, const Tensor2& actions) {
    Tensor2 out(obs.rows(), obs.cols() + actions.cols());
    out << obs, actions;
    return out;
}

struct StackedBatch {
    GraphObservation current;
    GraphObservation next;
    Tensor2 actions;
    Tensor2 rewards;
    std::vector<char> done_rows;
};

StackedBatch stack_batch(std::span<const RlTransition* const> batch) {
    std::vector<const GraphObservation*> cur, nxt;
    Eigen::Index rows = 0;
    for (const RlTransition* t : batch) {
        cur.push_back(&t->current);
        nxt.push_back(&t->next);
        rows += t->action.rows();
    }
    StackedBatch s;
    s.current = stack_graphs(cur);
    s.next = stack_graphs(nxt);
    s.actions.resize(rows, 2);
    s.rewards.resize(rows, 1);
    s.done_rows.reserve(static_cast<std::size_t>(rows));
    Eigen::Index r = 0;
    for (const RlTransition* t : batch) {
        const Eigen::Index n = t->action.rows();
        s.actions.middleRows(r, n) = t->action;
        s.rewards.middleRows(r, n) = t->reward;
        s.done_rows.insert(s.done_rows.end(), static_cast<std::size_t>(n), t->done ? 1 : 0);
        r += n;
    }
    return s;
}

Tensor2 targets_for(const Td3Networks& nets, const StackedBatch& b, const Td3Config& config, double max_speed,
                    std::mt19937_64& rng) {
    Tensor2 next_actions = gnn_infer(nets.actor_target, b.next.obs, b.next.shift);
    if (config.target_noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, config.target_noise_sigma);
        for (Eigen::Index i = 0; i < next_actions.size(); ++i) {
            next_actions.data()[i] +=
                std::clamp(noise(rng), -config.target_noise_clip, config.target_noise_clip);
        }
    }
    next_actions = clamp_rows(std::move(next_actions), max_speed);
    const Tensor2 critic_in = with_actions(b.next.obs, next_actions);
    const Tensor2 q1 = gnn_infer(nets.critic1_target, critic_in, b.next.shift);
    const Tensor2 q2 = gnn_infer(nets.critic2_target, critic_in, b.next.shift);
    Tensor2 y = b.rewards;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        if (!b.done_rows[static_cast<std::size_t>(i)]) y(i, 0) += config.rl_gamma * std::min(q1(i, 0), q2(i, 0));
    }
    return y;
}

}  // namespace

double LrSchedule::actor_lr(int epoch) const {
    if (epoch < actor_freeze_epochs) return 0.0;
    if (ramp_epochs <= 0) return actor_lr_final;
    const double f = std::min(1.0, static_cast<double>(epoch - actor_freeze_epochs + 1) / ramp_epochs);
    return f * actor_lr_final;
}

double LrSchedule::critic_lr(int epoch) const {
    if (epoch < actor_freeze_epochs) return critic_lr_initial;
    if (ramp_epochs <= 0) return critic_lr_final;
    const double f = std::min(1.0, static_cast<double>(epoch - actor_freeze_epochs + 1) / ramp_epochs);
    return critic_lr_initial + f * (critic_lr_final - critic_lr_initial);
}

Td3Config Td3Config::for_max_speed(double max_speed) {
    Td3Config c;
    c.target_noise_sigma = 0.2 * max_speed;
    c.target_noise_clip = 0.5 * max_speed;
    c.exploration_sigma = 0.1 * max_speed;
    return c;
}

void Td3Config::validate() const {
    if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in (0, 1]");
    if (policy_delay < 1) throw std::invalid_argument("policy_delay must be >= 1");
    if (target_noise_sigma < 0.0 || target_noise_clip < 0.0 || exploration_sigma < 0.0) {
        throw std::invalid_argument("noise scales must be nonnegative");
    }
    if (!(rl_gamma >= 0.0 && rl_gamma <= 1.0)) throw std::invalid_argument("rl_gamma must lie in [0, 1]");
    if (batch_size < 1 || epochs < 0 || episodes_per_epoch < 0 || buffer_capacity == 0) {
        throw std::invalid_argument("batch size and buffer capacity must be positive, counts nonnegative");
    }
    if (schedule.actor_freeze_epochs < 0 || schedule.ramp_epochs < 0) {
        throw std::invalid_argument("schedule epochs must be nonnegative");
    }
}

GnnConfig critic_config(const GnnConfig& actor) {
    GnnConfig c = actor;
    c.input_dim = actor.input_dim + actor.output_dim;
    c.output_dim = 1;
    c.action_squash = false;
    return c;
}

Td3Networks make_td3_networks(const GnnParams& actor, std::uint64_t seed) {
    const GnnConfig cc = critic_config(actor.config);
    Td3Networks n{actor, actor,
                  GnnParams::init(cc, derive_seed(seed, kCriticInitStream, 1)), {},
                  GnnParams::init(cc, derive_seed(seed, kCriticInitStream, 2)), {}};
    n.critic1_target = n.critic1;
    n.critic2_target = n.critic2;
    return n;
}

void polyak_update(GnnParams& target, const GnnParams& source, double tau) {
    const auto t = target.tensors();
    const auto s = source.tensors();
    if (t.size() != s.size()) throw std::invalid_argument("polyak_update: networks differ in structure");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i]->rows() != s[i]->rows() || t[i]->cols() != s[i]->cols()) {
            throw std::invalid_argument("polyak_update: shape mismatch");
        }
        if (tau == 1.0) {
            *t[i] = *s[i];
        } else if (tau != 0.0) {
            *t[i] = tau * *s[i] + (1.0 - tau) * *t[i];
        }
    }
}

Tensor2 clamp_rows(Tensor2 u, double max_speed) {
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        const double n = u.row(i).norm();
        if (n > max_speed) u.row(i) *= max_speed / n;
    }
    return u;
}

Tensor2 critic_targets(const Td3Networks& nets, std::span<const RlTransition* const> batch,
                       const Td3Config& config, double max_speed, std::mt19937_64& rng) {
    return targets_for(nets, stack_batch(batch), config, max_speed, rng);
}

CriticStep critic_update(Td3Networks& nets, AdamWState& critic1_opt, AdamWState& critic2_opt,
                         std::span<const RlTransition* const> batch, const Td3Config& config, double max_speed,
                         std::mt19937_64& rng) {
    const StackedBatch b = stack_batch(batch);
    const Tensor2 y = targets_for(nets, b, config, max_speed, rng);
    const Tensor2 critic_in = with_actions(b.current.obs, b.actions);
    const double rows = static_cast<double>(y.rows());

    CriticStep out;
    int idx = 0;
    for (auto [critic, opt] : {std::pair{&nets.critic1, &critic1_opt}, std::pair{&nets.critic2, &critic2_opt}}) {
        GnnForward f = gnn_forward(*critic, critic_in, b.current.shift);
        const Tensor2 err = f.output - y;
        const double loss = err.squaredNorm() / rows;
        if (!std::isfinite(loss)) throw TrainingDiverged("critic loss became non-finite");
        out.loss += 0.5 * loss;
        out.q_max_abs = std::max(out.q_max_abs, f.output.cwiseAbs().maxCoeff());
        if (idx++ == 0) out.q_mean = f.output.mean();
        const GnnGradients g = gnn_backward(f.tape, *critic, err * (2.0 / rows));
        adamw_step(*critic, g.params, *opt);
    }
    return out;
}

double actor_update(Td3Networks& nets, AdamWState& actor_opt, std::span<const RlTransition* const> batch) {
    std::vector<const GraphObservation*> cur;
    for (const RlTransition* t : batch) cur.push_back(&t->current);
    const GraphObservation g = stack_graphs(cur);

    GnnForward act = gnn_forward(nets.actor, g.obs, g.shift);
    GnnForward q = gnn_forward(nets.critic1, with_actions(g.obs, act.output), g.shift);
    const double rows = static_cast<double>(q.output.rows());
    const double q_mean = q.output.mean();
    const Tensor2 dq = Tensor2::Constant(q.output.rows(), 1, -1.0 / rows);
    const GnnGradients critic_grads = gnn_backward(q.tape, nets.critic1, dq);
    const Tensor2 d_action = critic_grads.input.rightCols(act.output.cols());
    const GnnGradients actor_grads = gnn_backward(act.tape, nets.actor, d_action);
    adamw_step(nets.actor, actor_grads.params, actor_opt);
    return q_mean;
}

std::vector<RlTransition> collect_rl_episode(const GnnParams& actor, const SimParams& params,
                                             const Td3Config& config, std::uint64_t seed) {
    auto [state, goals] = sample_initial(params, seed);
    std::mt19937_64 rng(derive_seed(seed, kExploreStream, 0));
    std::normal_distribution<double> noise(0.0, config.exploration_sigma);
    const bool normalize = actor.config.normalize_adjacency;

    std::vector<RlTransition> out;
    out.reserve(static_cast<std::size_t>(params.horizon_steps));
    GraphObservation obs = observe(state, goals, params, normalize);
    for (int t = 0; t < params.horizon_steps; ++t) {
        Tensor2 action = gnn_infer(actor, obs.obs, obs.shift);
        if (config.exploration_sigma > 0.0) {
            for (Eigen::Index i = 0; i < action.size(); ++i) action.data()[i] += noise(rng);
        }
        action = clamp_rows(std::move(action), params.max_speed);
        state = step(state, to_controls(action), params);
        const std::vector<double> r = reward(state, goals, params, config.reward);
        RlTransition tr;
        tr.current = std::move(obs);
        tr.action = std::move(action);
        tr.reward = Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
        obs = observe(state, goals, params, normalize);
        tr.next = obs;
        tr.done = false;
        out.push_back(std::move(tr));
    }
    return out;
}

Td3Result td3_train(const Td3Config& config, const SimParams& params, const GnnParams& pretrained_actor,
                    const Td3EpochCallback& on_epoch) {
    config.validate();
    params.validate();
    check_compatible(pretrained_actor.config, params);

    Td3Result result{make_td3_networks(pretrained_actor, config.seed), {}};
    Td3Networks& nets = result.networks;
    AdamWOptions opt{};
    opt.weight_decay = config.weight_decay;
    AdamWState actor_opt(nets.actor, opt);
    AdamWState critic1_opt(nets.critic1, opt);
    AdamWState critic2_opt(nets.critic2, opt);
    ReplayBuffer<RlTransition> buffer(config.buffer_capacity);
    std::mt19937_64 update_rng(derive_seed(config.seed, kUpdateStream, 0));

    const int steps = config.grad_steps_per_epoch > 0
                          ? config.grad_steps_per_epoch
                          : static_cast<int>((static_cast<long long>(config.episodes_per_epoch) * params.horizon_steps +
                                              config.batch_size - 1) /
                                             config.batch_size);
    long long critic_steps = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const bool frozen = config.schedule.actor_frozen(epoch);
        actor_opt.options.lr = config.schedule.actor_lr(epoch);
        critic1_opt.options.lr = config.schedule.critic_lr(epoch);
        critic2_opt.options.lr = critic1_opt.options.lr;

        std::vector<std::vector<RlTransition>> episodes(static_cast<std::size_t>(config.episodes_per_epoch));
        parallel_for(episodes.size(), config.threads, [&](std::size_t e) {
            episodes[e] = collect_rl_episode(
                nets.actor, params, config,
                derive_seed(config.seed, kExploreStream, static_cast<std::uint64_t>(epoch) * 100003ULL + e));
        });
        for (auto& episode : episodes) {
            for (auto& t : episode) buffer.push(std::move(t));
        }

        double loss_sum = 0.0;
        double q_sum = 0.0;
        int count = 0;
        for (int k = 0; k < steps && !buffer.empty(); ++k) {
            const auto batch = buffer.sample(static_cast<std::size_t>(config.batch_size), update_rng);
            const CriticStep cs = critic_update(nets, critic1_opt, critic2_opt, batch, config, params.max_speed,
                                                update_rng);
            if (!(cs.q_max_abs <= config.q_limit)) {
                throw TrainingDiverged("critic values exceeded " + std::to_string(config.q_limit) + " at epoch " +
                                       std::to_string(epoch));
            }
            loss_sum += cs.loss;
            q_sum += cs.q_mean;
            ++count;
            if (++critic_steps % config.policy_delay == 0) {
                if (!frozen) {
                    actor_update(nets, actor_opt, batch);
                    polyak_update(nets.actor_target, nets.actor, config.tau);
                }
                polyak_update(nets.critic1_target, nets.critic1, config.tau);
                polyak_update(nets.critic2_target, nets.critic2, config.tau);
            }
        }

        EpochMetrics m = evaluate_actor(nets.actor, params, config.eval_episodes, config.seed, epoch, config.threads);
        m.loss = count > 0 ? loss_sum / count : 0.0;
        m.q_mean = count > 0 ? q_sum / count : 0.0;
        result.history.push_back(m);
        if (on_epoch) on_epoch(m, nets);
    }
    return result;
}

}  // namespace swarmplan
