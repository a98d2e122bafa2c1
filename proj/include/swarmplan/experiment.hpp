#pragma once

#include "swarmplan/config.hpp"
#include "swarmplan/evaluation.hpp"
#include "swarmplan/imitation.hpp"
#include "swarmplan/td3.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace swarmplan {

/// One policy's aggregate over a set of episodes. Collision figures are per
/// episode; std is the population standard deviation across episodes.
struct ResultsRow {
    std::string policy;
    int n_agents = 0;
    double width = 0.0;
    double density = 0.0;
    int episodes = 0;
    MeanStd discounted_coverage;
    MeanStd collisions_step_pair;  ///< sum over steps and agents of p_i(t)
    MeanStd collision_pairs;       ///< colliding pairs counted once per step
    MeanStd collisions_events;     ///< contiguous contact intervals
    MeanStd near_collisions;       ///< step-pair convention at the near threshold
    long long collisions_step_pair_total = 0;  ///< summed over all episodes
};

ResultsRow make_results_row(const std::string& policy, const SimParams& params,
                            const std::vector<EpisodeSummary>& episodes);

void write_summary_csv(std::ostream& out, const std::vector<ResultsRow>& rows);

/// step, mean, std of c(t) across episodes.
void write_coverage_curve_csv(std::ostream& out, const std::vector<EpisodeSummary>& episodes);

/// Trailing moving average; the first window - 1 points average what is available.
std::vector<double> rolling_mean(const std::vector<double>& values, int window = 9);

/// epoch, coverage, discounted_coverage, collisions_step_pair, collisions_events,
/// collisions_per_agent, loss, q_mean.
void write_metrics_csv(std::ostream& out, const std::vector<EpochMetrics>& history);

/// epoch, coverage, collisions_per_agent, both smoothed with rolling_mean.
void write_curves_csv(std::ostream& out, const std::vector<EpochMetrics>& history, int window = 9);

struct SimulateOutput {
    ResultsRow row;
    std::vector<EpisodeSummary> episodes;
};

/// Runs config.episodes seeded episodes of config.policy and writes
/// summary.csv, coverage_vs_time.csv and (optionally) traces/episode_<seed>.jsonl
/// under config.output_dir.
SimulateOutput cmd_simulate(const ExperimentConfig& config);

struct SweepOutput {
    std::vector<int> agents;
    std::vector<double> densities;
    std::vector<std::vector<double>> coverage;             ///< [agents][densities], mean discounted coverage
    std::vector<std::vector<double>> collisions_events;     ///< mean per episode, raw
    std::vector<std::vector<double>> collisions_per_100;    ///< collisions_events * 100 / N
};

/// Grid over sweep_agents x sweep_densities; writes sweep.csv (long form),
/// sweep_coverage.csv, sweep_collisions_per100.csv and two heatmap SVGs.
SweepOutput cmd_sweep(const ExperimentConfig& config);

/// Writes config.toml, metadata.json, metrics.csv, curves.csv,
/// checkpoints/epoch_<e>.ckpt and actor.ckpt under config.output_dir.
IlResult cmd_train_il(const ExperimentConfig& config);

/// Loads config.pretrained and fine-tunes it. Per epoch writes
/// checkpoints/epoch_<e>/{actor,critic1,critic2}.ckpt; final networks go to the
/// run directory root.
Td3Result cmd_train_rl(const ExperimentConfig& config);

/// Renders each CSV to an SVG in out_dir; several coverage curves are also
/// overlaid into coverage_comparison.svg. Returns the files written.
std::vector<std::filesystem::path> cmd_plot(const std::vector<std::filesystem::path>& inputs,
                                            const std::filesystem::path& out_dir);

}  // namespace swarmplan
