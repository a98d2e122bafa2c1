#include "swarmplan/checkpoint.hpp"
#include "swarmplan/config.hpp"
#include "swarmplan/csv.hpp"
#include "swarmplan/experiment.hpp"
#include "swarmplan/svg_plot.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace swarmplan;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> episodes;
    std::optional<std::string> policy;
    std::optional<std::string> out;
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "TOML configuration file");
    cmd->add_option("--seed", f.seed, "base seed (episode i uses seed + i)");
    cmd->add_option("--episodes", f.episodes, "episodes per evaluation cell");
    cmd->add_option("--policy", f.policy, "lsap | capt | dhop:<d> | gnn:<checkpoint>");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--threads", f.threads, "worker threads");
}

ExperimentConfig resolve(const CommonFlags& f) {
    ExperimentConfig c = f.config_path.empty() ? parse_config("") : load_config(f.config_path);
    if (f.seed) c.seed = *f.seed;
    if (f.episodes) c.episodes = *f.episodes;
    if (f.policy) c.policy = PolicyKind::parse(*f.policy);
    if (f.out) c.output_dir = *f.out;
    if (f.threads) c.threads = *f.threads;
    c.finalize();
    return c;
}

void print_row(const ResultsRow& r) {
    std::cout << r.policy << "  N=" << r.n_agents << "  episodes=" << r.episodes
              << "  discounted_coverage=" << format_number(r.discounted_coverage.mean) << " +/- "
              << format_number(r.discounted_coverage.std)
              << "  collisions(step-pair)=" << format_number(r.collisions_step_pair.mean)
              << "  collisions(events)=" << format_number(r.collisions_events.mean)
              << "  near=" << format_number(r.near_collisions.mean) << '\n';
}

void print_epoch(const char* tag, const EpochMetrics& m) {
    std::cout << tag << " epoch " << m.epoch << "  loss=" << format_number(m.loss)
              << "  coverage=" << format_number(m.discounted_coverage)
              << "  collisions(events)=" << format_number(m.collisions_events) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unlabeled multi-agent motion planning: baselines, GNN training and sweeps"};
    app.require_subcommand(1);

    CommonFlags sim_flags, il_flags, rl_flags, sweep_flags;
    bool no_traces = false;
    std::string pretrained;
    std::vector<std::string> plot_inputs;
    std::string plot_out = "plots";

    auto* simulate = app.add_subcommand("simulate", "run seeded episodes of one policy");
    add_common(simulate, sim_flags);
    simulate->add_flag("--no-traces", no_traces, "skip the per-episode JSONL traces");

    auto* train_il = app.add_subcommand("train-il", "imitation learning against the LSAP expert");
    add_common(train_il, il_flags);

    auto* train_rl = app.add_subcommand("train-rl", "TD3 fine-tuning of a pretrained actor");
    add_common(train_rl, rl_flags);
    train_rl->add_option("--pretrained", pretrained, "actor checkpoint to fine-tune");

    auto* sweep = app.add_subcommand("sweep", "evaluate a policy over agent counts and densities");
    add_common(sweep, sweep_flags);

    auto* plot = app.add_subcommand("plot", "render CSV outputs as SVG");
    plot->add_option("inputs", plot_inputs, "CSV files")->required();
    plot->add_option("--out", plot_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            ExperimentConfig c = resolve(sim_flags);
            if (no_traces) c.write_traces = false;
            print_row(cmd_simulate(c).row);
        } else if (*train_il) {
            const ExperimentConfig c = resolve(il_flags);
            const auto r = cmd_train_il(c);
            for (const auto& m : r.history) print_epoch("il", m);
            std::cout << "wrote " << (c.output_dir / "actor.ckpt").string() << '\n';
        } else if (*train_rl) {
            ExperimentConfig c = resolve(rl_flags);
            if (!pretrained.empty()) c.pretrained = pretrained;
            const auto r = cmd_train_rl(c);
            for (const auto& m : r.history) print_epoch("rl", m);
            std::cout << "wrote " << (c.output_dir / "actor.ckpt").string() << '\n';
        } else if (*sweep) {
            const ExperimentConfig c = resolve(sweep_flags);
            const SweepOutput s = cmd_sweep(c);
            for (std::size_t i = 0; i < s.agents.size(); ++i) {
                for (std::size_t j = 0; j < s.densities.size(); ++j) {
                    std::cout << "N=" << s.agents[i] << " rho=" << format_number(s.densities[j])
                              << "  coverage=" << format_number(s.coverage[i][j])
                              << "  collisions/100 agents=" << format_number(s.collisions_per_100[i][j]) << '\n';
                }
            }
        } else if (*plot) {
            std::vector<std::filesystem::path> inputs(plot_inputs.begin(), plot_inputs.end());
            for (const auto& p : cmd_plot(inputs, plot_out)) std::cout << "wrote " << p.string() << '\n';
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
