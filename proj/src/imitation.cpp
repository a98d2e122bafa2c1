#include "swarmplan/imitation.hpp"

#include "swarmplan/evaluation.hpp"
#include "swarmplan/policies.hpp"
#include "swarmplan/replay_buffer.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <string>

namespace swarmplan {
namespace {

constexpr std::uint64_t kCollectStream = 1;
constexpr std::uint64_t kEvalStream = 2;
constexpr std::uint64_t kBatchStream = 3;

}  // namespace

std::vector<IlSample> collect_il_episode(const GnnParams* actor, double mix_ratio, const SimParams& params,
                                         std::uint64_t seed) {
    if (!(mix_ratio >= 0.0 && mix_ratio <= 1.0)) throw std::invalid_argument("mix_ratio must lie in [0, 1]");
    auto [state, goals] = sample_initial(params, seed);
    std::mt19937_64 coin_rng(derive_seed(seed, 0xC0, 0));
    std::bernoulli_distribution use_expert(mix_ratio);
    const bool normalize = actor != nullptr && actor->config.normalize_adjacency;

    std::vector<IlSample> samples;
    samples.reserve(static_cast<std::size_t>(params.horizon_steps));
    for (int t = 0; t < params.horizon_steps; ++t) {
        IlSample s;
        s.graph = observe(state, goals, params, normalize);
        const Controls expert = lsap_policy(state, goals, params);
        s.expert = to_tensor(expert);
        const bool expert_turn = use_expert(coin_rng) || actor == nullptr;
        const Controls applied = expert_turn ? expert : to_controls(gnn_infer(*actor, s.graph.obs, s.graph.shift));
        samples.push_back(std::move(s));
        state = step(state, clamp_controls(applied, params), params);
    }
    return samples;
}

double il_batch_loss(const GnnParams& net, std::span<const IlSample* const> batch, GnnParams* grads) {
    std::vector<const GraphObservation*> graphs;
    graphs.reserve(batch.size());
    Eigen::Index rows = 0;
    for (const IlSample* s : batch) {
        graphs.push_back(&s->graph);
        rows += s->expert.rows();
    }
    const GraphObservation stacked = stack_graphs(graphs);
    Tensor2 target(rows, 2);
    Eigen::Index r = 0;
    for (const IlSample* s : batch) {
        target.middleRows(r, s->expert.rows()) = s->expert;
        r += s->expert.rows();
    }
    GnnForward fwd = gnn_forward(net, stacked.obs, stacked.shift);
    const Tensor2 diff = fwd.output - target;
    const double loss = diff.squaredNorm() / static_cast<double>(rows);
    if (grads != nullptr) {
        const Tensor2 d_out = diff * (2.0 / static_cast<double>(rows));
        *grads = gnn_backward(fwd.tape, net, d_out).params;
    }
    return loss;
}

EpochMetrics evaluate_actor(const GnnParams& actor, const SimParams& params, int eval_episodes,
                            std::uint64_t seed, int epoch, int threads) {
    std::vector<std::uint64_t> seeds;
    for (int e = 0; e < eval_episodes; ++e) {
        seeds.push_back(derive_seed(seed, kEvalStream, static_cast<std::uint64_t>(epoch) * 100003ULL + e));
    }
    auto snapshot = std::make_shared<const GnnParams>(actor);
    const auto runs = run_episodes(make_gnn_controller(snapshot, params), params, seeds, threads);
    EpochMetrics m;
    m.epoch = epoch;
    for (const auto& s : runs) {
        m.coverage += s.mean_coverage;
        m.discounted_coverage += s.discounted_coverage;
        m.collisions_step_pair += static_cast<double>(s.collisions_step_pair);
        m.collisions_events += static_cast<double>(s.collisions_events);
    }
    const double n = std::max<double>(1.0, static_cast<double>(runs.size()));
    m.coverage /= n;
    m.discounted_coverage /= n;
    m.collisions_step_pair /= n;
    m.collisions_events /= n;
    m.collisions_per_agent = m.collisions_step_pair / params.n_agents;
    return m;
}

double il_learning_rate(const IlConfig& config, int epoch) {
    if (!config.lr_final || config.epochs <= 1) return config.optimizer.lr;
    const double progress = static_cast<double>(epoch) / (config.epochs - 1);
    return *config.lr_final + 0.5 * (config.optimizer.lr - *config.lr_final) * (1.0 + std::cos(std::numbers::pi * progress));
}

IlResult il_train(const IlConfig& config, const SimParams& params, GnnParams init,
                  const IlEpochCallback& on_epoch) {
    params.validate();
    init.config.validate();
    check_compatible(init.config, params);
    if (config.batch_size < 1 || config.epochs < 0 || config.episodes_per_epoch < 0) {
        throw std::invalid_argument("il_train: batch_size must be >= 1 and counts nonnegative");
    }

    IlResult result;
    result.params = std::move(init);
    GnnParams& net = result.params;
    AdamWState opt(net, config.optimizer);
    ReplayBuffer<IlSample> buffer(config.buffer_capacity);
    std::mt19937_64 batch_rng(derive_seed(config.seed, kBatchStream, 0));

    const int steps = config.grad_steps_per_epoch > 0
                          ? config.grad_steps_per_epoch
                          : static_cast<int>((static_cast<long long>(config.episodes_per_epoch) * params.horizon_steps +
                                              config.batch_size - 1) /
                                             config.batch_size);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        opt.options.lr = il_learning_rate(config, epoch);
        std::vector<std::vector<IlSample>> episodes(static_cast<std::size_t>(config.episodes_per_epoch));
        parallel_for(episodes.size(), config.threads, [&](std::size_t e) {
            const std::uint64_t ep_seed =
                derive_seed(config.seed, kCollectStream, static_cast<std::uint64_t>(epoch) * 100003ULL + e);
            episodes[e] = collect_il_episode(&net, config.mix_ratio, params, ep_seed);
        });
        for (auto& episode : episodes) {
            for (auto& s : episode) buffer.push(std::move(s));
        }
        double loss_sum = 0.0;
        int loss_count = 0;
        if (!buffer.empty()) {
            for (int k = 0; k < steps; ++k) {
                const auto batch = buffer.sample(static_cast<std::size_t>(config.batch_size), batch_rng);
                GnnParams grads;
                const double loss = il_batch_loss(net, batch, &grads);
                if (!std::isfinite(loss)) {
                    throw TrainingDiverged("imitation loss became non-finite at epoch " + std::to_string(epoch));
                }
                adamw_step(net, grads, opt);
                loss_sum += loss;
                ++loss_count;
            }
        }
        EpochMetrics m = evaluate_actor(net, params, config.eval_episodes, config.seed, epoch, config.threads);
        m.loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
        if (result.best_epoch < 0 ||
            m.discounted_coverage > result.history[static_cast<std::size_t>(result.best_epoch)].discounted_coverage) {
            result.best_epoch = epoch;
            result.best_params = net;
        }
        result.history.push_back(m);
        if (on_epoch) on_epoch(m, net);
    }
    return result;
}

}  // namespace swarmplan
