#pragma once

#include "swarmplan/adamw.hpp"
#include "swarmplan/gnn.hpp"
#include "swarmplan/gnn_policy.hpp"
#include "swarmplan/imitation.hpp"
#include "swarmplan/reward.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace swarmplan {

struct RlTransition {
    GraphObservation current;
    Tensor2 action;  ///< N x 2, as applied
    Tensor2 reward;  ///< N x 1
    GraphObservation next;
    bool done = false;  ///< horizon truncation keeps this false
};

/// Critic-only phase, then a linear ramp of both learning rates, then constant.
struct LrSchedule {
    int actor_freeze_epochs = 100;
    int ramp_epochs = 50;
    double critic_lr_initial = 1e-4;
    double critic_lr_final = 5e-5;
    double actor_lr_final = 1e-5;

    bool actor_frozen(int epoch) const { return epoch < actor_freeze_epochs; }
    double actor_lr(int epoch) const;
    double critic_lr(int epoch) const;
};

struct Td3Config {
    double tau = 0.005;
    int policy_delay = 2;
    double target_noise_sigma = 0.1;  ///< 0.2 u_max at u_max = 0.5
    double target_noise_clip = 0.25;  ///< 0.5 u_max
    double exploration_sigma = 0.05;  ///< 0.1 u_max
    double rl_gamma = 0.99;
    RewardParams reward{};
    LrSchedule schedule{};
    int epochs = 500;
    int episodes_per_epoch = 100;
    int batch_size = 512;
    int grad_steps_per_epoch = 0;  ///< 0: ceil(episodes_per_epoch * T / batch_size)
    std::size_t buffer_capacity = 100000;
    int eval_episodes = 10;
    double weight_decay = 1e-8;
    double q_limit = 1e6;  ///< divergence guard on |Q|
    std::uint64_t seed = 0;
    int threads = 1;

    /// Noise scales expressed as the default fractions of max_speed.
    static Td3Config for_max_speed(double max_speed);
    void validate() const;
};

/// The critic shares the actor's trunk shape; its input rows are [o_i, u_i] and
/// its read-out is one unsquashed value per node.
GnnConfig critic_config(const GnnConfig& actor);

struct Td3Networks {
    GnnParams actor, actor_target;
    GnnParams critic1, critic1_target;
    GnnParams critic2, critic2_target;
};

Td3Networks make_td3_networks(const GnnParams& actor, std::uint64_t seed);

/// target <- tau * source + (1 - tau) * target.
void polyak_update(GnnParams& target, const GnnParams& source, double tau);

/// Rows with norm above max_speed are rescaled onto the circle.
Tensor2 clamp_rows(Tensor2 u, double max_speed);

/// y = r + gamma * min(Q1', Q2')(o', a') for non-terminal transitions, with
/// a' = clamp(target_actor(o') + clip(noise)). Rows are stacked in batch order.
Tensor2 critic_targets(const Td3Networks& nets, std::span<const RlTransition* const> batch,
                       const Td3Config& config, double max_speed, std::mt19937_64& rng);

struct CriticStep {
    double loss = 0.0;    ///< mean of both critics' mean squared TD errors
    double q_mean = 0.0;  ///< mean Q1 over batch rows
    double q_max_abs = 0.0;
};

CriticStep critic_update(Td3Networks& nets, AdamWState& critic1_opt, AdamWState& critic2_opt,
                         std::span<const RlTransition* const> batch, const Td3Config& config, double max_speed,
                         std::mt19937_64& rng);

/// Ascends mean Q1(o, actor(o)); returns that mean before the step.
double actor_update(Td3Networks& nets, AdamWState& actor_opt, std::span<const RlTransition* const> batch);

/// One exploratory episode: actor output plus Gaussian noise, clamped.
std::vector<RlTransition> collect_rl_episode(const GnnParams& actor, const SimParams& params,
                                             const Td3Config& config, std::uint64_t seed);

using Td3EpochCallback = std::function<void(const EpochMetrics&, const Td3Networks&)>;

struct Td3Result {
    Td3Networks networks;
    std::vector<EpochMetrics> history;
};

/// Throws TrainingDiverged on non-finite losses or |Q| above q_limit.
Td3Result td3_train(const Td3Config& config, const SimParams& params, const GnnParams& pretrained_actor,
                    const Td3EpochCallback& on_epoch = {});

}  // namespace swarmplan
