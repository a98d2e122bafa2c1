#pragma once

#include "swarmplan/adamw.hpp"
#include "swarmplan/gnn.hpp"
#include "swarmplan/gnn_policy.hpp"
#include "swarmplan/world.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace swarmplan {

/// One visited state with the LSAP expert's controls as the label.
struct IlSample {
    GraphObservation graph;
    Tensor2 expert;  ///< N x 2
};

/// Evaluation and optimization figures recorded after every training epoch.
struct EpochMetrics {
    int epoch = 0;
    double coverage = 0.0;             ///< mean over eval episodes of the time-averaged c(t)
    double discounted_coverage = 0.0;  ///< mean over eval episodes
    double collisions_step_pair = 0.0;
    double collisions_events = 0.0;
    double collisions_per_agent = 0.0;  ///< step-pair total / N, averaged over eval episodes
    double loss = 0.0;                  ///< mean training loss (IL: MSE, RL: critic TD loss)
    double q_mean = 0.0;                ///< RL only
};

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rolls out one episode. At each step the applied control is the expert's with
/// probability mix_ratio, else the actor's; the label is always the expert's.
/// A null actor means a pure expert rollout.
std::vector<IlSample> collect_il_episode(const GnnParams* actor, double mix_ratio, const SimParams& params,
                                         std::uint64_t seed);

struct IlConfig {
    int epochs = 161;
    int episodes_per_epoch = 100;
    int batch_size = 512;          ///< graphs per gradient step
    int grad_steps_per_epoch = 0;  ///< 0: ceil(episodes_per_epoch * T / batch_size)
    std::size_t buffer_capacity = 100000;
    double mix_ratio = 0.5;
    int eval_episodes = 10;
    AdamWOptions optimizer{};
    /// When set, the learning rate follows a cosine from optimizer.lr at the
    /// first epoch down to this value at the last; otherwise it stays constant.
    std::optional<double> lr_final;
    std::uint64_t seed = 0;
    int threads = 1;
};

/// Mean over rows of |u - u*|^2 for the stacked batch. When `grads` is given,
/// it receives the parameter gradient of that loss.
double il_batch_loss(const GnnParams& net, std::span<const IlSample* const> batch, GnnParams* grads = nullptr);

/// Called after each epoch with its metrics and the current parameters.
/// Learning rate used during `epoch` under config's schedule.
double il_learning_rate(const IlConfig& config, int epoch);

using IlEpochCallback = std::function<void(const EpochMetrics&, const GnnParams&)>;

struct IlResult {
    GnnParams params;  ///< after the last epoch
    std::vector<EpochMetrics> history;
    GnnParams best_params;  ///< epoch with the highest evaluation discounted coverage
    int best_epoch = -1;
};

/// Throws TrainingDiverged if the loss turns non-finite.
IlResult il_train(const IlConfig& config, const SimParams& params, GnnParams init,
                  const IlEpochCallback& on_epoch = {});

/// Evaluation protocol shared by both trainers: eval_episodes episodes with
/// seeds derived from (seed, epoch), metrics averaged.
EpochMetrics evaluate_actor(const GnnParams& actor, const SimParams& params, int eval_episodes,
                            std::uint64_t seed, int epoch, int threads);

}  // namespace swarmplan
