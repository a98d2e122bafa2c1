#include "swarmplan/experiment.hpp"

#include "swarmplan/checkpoint.hpp"
#include "swarmplan/csv.hpp"
#include "swarmplan/gnn_policy.hpp"
#include "swarmplan/svg_plot.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>

namespace swarmplan {
namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
    std::ofstream out = open_out(path);
    fn(out);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string epoch_tag(int epoch) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", epoch);
    return buf;
}

MeanStd stat_of(const std::vector<EpisodeSummary>& eps, long long EpisodeSummary::*field) {
    std::vector<double> v;
    for (const auto& e : eps) v.push_back(static_cast<double>(e.*field));
    return mean_std(v);
}

void write_run_metadata(const ExperimentConfig& config, const std::string& command) {
    nlohmann::json meta{{"command", command},
                        {"seed", config.seed},
                        {"threads", config.threads},
                        {"checkpoint_format", kCheckpointFormat}};
    open_out(config.output_dir / "metadata.json") << meta.dump(2) << '\n';
    open_out(config.output_dir / "config.toml") << to_toml(config);
}

bool is_curve_table(const CsvTable& t) {
    return t.header.size() == 3 && t.header[0] == "step" && t.header[1] == "mean" && t.header[2] == "std";
}

bool is_matrix_table(const CsvTable& t) { return !t.header.empty() && t.header[0] == "n_agents"; }

Series curve_series(const CsvTable& t, const std::string& label) {
    if (t.rows.empty()) throw PlotError(label + ": no data rows");
    return Series{label, t.numeric_column(0), t.numeric_column(1), t.numeric_column(2)};
}

void write_text(const fs::path& path, const std::string& text, std::vector<fs::path>& written) {
    open_out(path) << text;
    written.push_back(path);
}

}  // namespace

ResultsRow make_results_row(const std::string& policy, const SimParams& params,
                            const std::vector<EpisodeSummary>& episodes) {
    ResultsRow r;
    r.policy = policy;
    r.n_agents = params.n_agents;
    r.width = params.width;
    r.density = params.n_agents / (params.width * params.width);
    r.episodes = static_cast<int>(episodes.size());
    std::vector<double> cov;
    for (const auto& e : episodes) {
        cov.push_back(e.discounted_coverage);
        r.collisions_step_pair_total += e.collisions_step_pair;
    }
    r.discounted_coverage = mean_std(cov);
    r.collisions_step_pair = stat_of(episodes, &EpisodeSummary::collisions_step_pair);
    r.collision_pairs = stat_of(episodes, &EpisodeSummary::collision_pairs);
    r.collisions_events = stat_of(episodes, &EpisodeSummary::collisions_events);
    r.near_collisions = stat_of(episodes, &EpisodeSummary::near_collisions);
    return r;
}

void write_summary_csv(std::ostream& out, const std::vector<ResultsRow>& rows) {
    CsvWriter w(out);
    w.header({"policy", "n_agents", "width", "density", "episodes", "discounted_coverage_mean",
              "discounted_coverage_std", "collisions_step_pair_mean", "collisions_step_pair_std",
              "collisions_step_pair_total", "collision_pairs_mean", "collision_pairs_std",
              "collisions_events_mean", "collisions_events_std", "near_collisions_mean", "near_collisions_std"});
    for (const ResultsRow& r : rows) {
        w.row({r.policy, std::to_string(r.n_agents), format_number(r.width), format_number(r.density),
               std::to_string(r.episodes), format_number(r.discounted_coverage.mean),
               format_number(r.discounted_coverage.std), format_number(r.collisions_step_pair.mean),
               format_number(r.collisions_step_pair.std), std::to_string(r.collisions_step_pair_total),
               format_number(r.collision_pairs.mean), format_number(r.collision_pairs.std),
               format_number(r.collisions_events.mean), format_number(r.collisions_events.std),
               format_number(r.near_collisions.mean), format_number(r.near_collisions.std)});
    }
}

void write_coverage_curve_csv(std::ostream& out, const std::vector<EpisodeSummary>& episodes) {
    CsvWriter w(out);
    w.header({"step", "mean", "std"});
    if (episodes.empty()) return;
    const std::size_t steps = episodes.front().coverage.size();
    for (std::size_t t = 0; t < steps; ++t) {
        std::vector<double> v;
        for (const auto& e : episodes) v.push_back(e.coverage.at(t));
        const MeanStd ms = mean_std(v);
        w.row({std::to_string(t), format_number(ms.mean), format_number(ms.std)});
    }
}

std::vector<double> rolling_mean(const std::vector<double>& values, int window) {
    if (window < 1) throw std::invalid_argument("smoothing window must be >= 1");
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::size_t n = std::min<std::size_t>(i + 1, static_cast<std::size_t>(window));
        double s = 0.0;
        for (std::size_t j = i + 1 - n; j <= i; ++j) s += values[j];
        out[i] = s / static_cast<double>(n);
    }
    return out;
}

void write_metrics_csv(std::ostream& out, const std::vector<EpochMetrics>& history) {
    CsvWriter w(out);
    w.header({"epoch", "coverage", "discounted_coverage", "collisions_step_pair", "collisions_events",
              "collisions_per_agent", "loss", "q_mean"});
    for (const EpochMetrics& m : history) {
        w.row({std::to_string(m.epoch), format_number(m.coverage), format_number(m.discounted_coverage),
               format_number(m.collisions_step_pair), format_number(m.collisions_events),
               format_number(m.collisions_per_agent), format_number(m.loss), format_number(m.q_mean)});
    }
}

void write_curves_csv(std::ostream& out, const std::vector<EpochMetrics>& history, int window) {
    std::vector<double> cov, coll;
    for (const EpochMetrics& m : history) {
        cov.push_back(m.coverage);
        coll.push_back(m.collisions_per_agent);
    }
    cov = rolling_mean(cov, window);
    coll = rolling_mean(coll, window);
    CsvWriter w(out);
    w.header({"epoch", "coverage", "collisions_per_agent"});
    for (std::size_t i = 0; i < history.size(); ++i) {
        w.row({std::to_string(history[i].epoch), format_number(cov[i]), format_number(coll[i])});
    }
}

SimulateOutput cmd_simulate(const ExperimentConfig& config) {
    const ControllerFactory factory = make_controller(config.policy, config.sim);
    const auto seeds = config.episode_seeds();
    SimulateOutput out;
    out.episodes.resize(seeds.size());
    std::vector<EpisodeTrace> traces(config.write_traces ? seeds.size() : 0);
    parallel_for(seeds.size(), config.threads, [&](std::size_t i) {
        EpisodeTrace trace = simulate_episode(config.sim, seeds[i], factory, {config.write_traces});
        out.episodes[i] = summarize(trace, config.sim, seeds[i]);
        if (config.write_traces) traces[i] = std::move(trace);
    });
    out.row = make_results_row(config.policy.name(), config.sim, out.episodes);

    write_file(config.output_dir / "summary.csv", [&](std::ostream& o) { write_summary_csv(o, {out.row}); });
    write_file(config.output_dir / "coverage_vs_time.csv", [&](std::ostream& o) { write_coverage_curve_csv(o, out.episodes); });
    for (std::size_t i = 0; i < traces.size(); ++i) {
        auto f = open_out(config.output_dir / "traces" / ("episode_" + std::to_string(seeds[i]) + ".jsonl"));
        write_trace_jsonl(f, traces[i]);
    }
    return out;
}

SweepOutput cmd_sweep(const ExperimentConfig& config) {
    SweepOutput s;
    s.agents = config.sweep_agents;
    s.densities = config.sweep_densities;
    auto long_csv = open_out(config.output_dir / "sweep.csv");
    std::vector<ResultsRow> rows;
    for (int n : s.agents) {
        auto& cov_row = s.coverage.emplace_back();
        auto& ev_row = s.collisions_events.emplace_back();
        auto& norm_row = s.collisions_per_100.emplace_back();
        for (double rho : s.densities) {
            SimParams sim = config.sim;
            sim.n_agents = n;
            sim.width = SimParams::width_for_density(n, rho);
            const auto eps = run_episodes(make_controller(config.policy, sim), sim, config.episode_seeds(),
                                          config.threads);
            rows.push_back(make_results_row(config.policy.name(), sim, eps));
            cov_row.push_back(rows.back().discounted_coverage.mean);
            ev_row.push_back(rows.back().collisions_events.mean);
            norm_row.push_back(rows.back().collisions_events.mean * 100.0 / n);
        }
    }
    write_summary_csv(long_csv, rows);

    auto write_matrix = [&](const std::string& file, const std::vector<std::vector<double>>& m) {
        std::ofstream f = open_out(config.output_dir / file);
        CsvWriter w(f);
        std::vector<std::string> header{"n_agents"};
        for (double d : s.densities) header.push_back("rho=" + format_number(d));
        w.header(header);
        for (std::size_t i = 0; i < s.agents.size(); ++i) {
            std::vector<std::string> cells{std::to_string(s.agents[i])};
            for (double v : m[i]) cells.push_back(format_number(v));
            w.row(cells);
        }
    };
    write_matrix("sweep_coverage.csv", s.coverage);
    write_matrix("sweep_collisions_per100.csv", s.collisions_per_100);

    std::vector<std::string> row_names, col_names;
    for (int n : s.agents) row_names.push_back(std::to_string(n));
    for (double d : s.densities) col_names.push_back(format_number(d));
    open_out(config.output_dir / "sweep_coverage.svg")
        << render_heatmap({"Discounted coverage", "agents N", "density rho", row_names, col_names, s.coverage});
    open_out(config.output_dir / "sweep_collisions_per100.svg")
        << render_heatmap({"Collisions per 100 agents", "agents N", "density rho", row_names, col_names,
                           s.collisions_per_100});
    return s;
}

IlResult cmd_train_il(const ExperimentConfig& config) {
    write_run_metadata(config, "train-il");
    const fs::path dir = config.output_dir;
    std::vector<EpochMetrics> seen;
    auto result = il_train(config.il, config.sim, GnnParams::init(config.network, config.seed),
                           [&](const EpochMetrics& m, const GnnParams& net) {
                               seen.push_back(m);
                               save_checkpoint(net, dir / "checkpoints" / ("epoch_" + epoch_tag(m.epoch) + ".ckpt"));
                               write_file(dir / "metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, seen); });
                           });
    save_checkpoint(result.params, dir / "actor.ckpt");
    if (result.best_epoch >= 0) save_checkpoint(result.best_params, dir / "best.ckpt");
    write_file(dir / "metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, result.history); });
    write_file(dir / "curves.csv", [&](std::ostream& o) { write_curves_csv(o, result.history); });
    return result;
}

Td3Result cmd_train_rl(const ExperimentConfig& config) {
    if (config.pretrained.empty()) throw ConfigError("rl.pretrained must name an actor checkpoint");
    const GnnParams actor = load_checkpoint(config.pretrained);
    check_compatible(actor.config, config.sim);
    write_run_metadata(config, "train-rl");
    const fs::path dir = config.output_dir;
    std::vector<EpochMetrics> seen;
    auto result = td3_train(config.rl, config.sim, actor, [&](const EpochMetrics& m, const Td3Networks& nets) {
        seen.push_back(m);
        const fs::path ep = dir / "checkpoints" / ("epoch_" + epoch_tag(m.epoch));
        save_checkpoint(nets.actor, ep / "actor.ckpt");
        save_checkpoint(nets.critic1, ep / "critic1.ckpt");
        save_checkpoint(nets.critic2, ep / "critic2.ckpt");
        write_file(dir / "metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, seen); });
    });
    save_checkpoint(result.networks.actor, dir / "actor.ckpt");
    save_checkpoint(result.networks.critic1, dir / "critic1.ckpt");
    save_checkpoint(result.networks.critic2, dir / "critic2.ckpt");
    write_file(dir / "metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, result.history); });
    write_file(dir / "curves.csv", [&](std::ostream& o) { write_curves_csv(o, result.history); });
    return result;
}

std::vector<fs::path> cmd_plot(const std::vector<fs::path>& inputs, const fs::path& out_dir) {
    if (inputs.empty()) throw PlotError("no input files");
    std::vector<fs::path> written;
    LineChart comparison{"Coverage over time", "step", "coverage", {}};
    for (const fs::path& in : inputs) {
        const CsvTable t = read_csv(in);
        const std::string stem = in.stem().string();
        if (t.rows.empty()) throw PlotError(in.string() + ": no data rows");
        if (is_curve_table(t)) {
            Series s = curve_series(t, stem);
            comparison.series.push_back(s);
            write_text(out_dir / (stem + ".svg"), render_line_chart({stem, "step", "coverage", {s}}), written);
        } else if (is_matrix_table(t)) {
            Heatmap h{stem, "agents N", t.header.size() > 1 ? "density" : "", {}, {}, {}};
            for (std::size_t c = 1; c < t.header.size(); ++c) h.col_names.push_back(t.header[c]);
            for (const auto& r : t.rows) h.row_names.push_back(r[0]);
            h.values.assign(t.rows.size(), {});
            for (std::size_t c = 1; c < t.header.size(); ++c) {
                const auto col = t.numeric_column(c);
                for (std::size_t r = 0; r < col.size(); ++r) h.values[r].push_back(col[r]);
            }
            write_text(out_dir / (stem + ".svg"), render_heatmap(h), written);
        } else {
            if (t.header.size() < 2) throw CsvError(in.string() + ": need an x column and at least one y column");
            const auto x = t.numeric_column(0);
            for (std::size_t c = 1; c < t.header.size(); ++c) {
                LineChart chart{stem + ": " + t.header[c], t.header[0], t.header[c],
                                {Series{t.header[c], x, t.numeric_column(c), {}}}};
                write_text(out_dir / (stem + "_" + t.header[c] + ".svg"), render_line_chart(chart), written);
            }
        }
    }
    if (comparison.series.size() > 1) {
        write_text(out_dir / "coverage_comparison.svg", render_line_chart(comparison), written);
    }
    return written;
}

}  // namespace swarmplan
