#pragma once

#include "swarmplan/gnn.hpp"
#include "swarmplan/imitation.hpp"
#include "swarmplan/policies.hpp"
#include "swarmplan/td3.hpp"
#include "swarmplan/world.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace swarmplan {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Everything one CLI invocation needs. Loaded from TOML with the sections
/// [sim], [policy], [train], [rl], [sweep] plus top-level run keys.
struct ExperimentConfig {
    SimParams sim;
    std::optional<double> density;  ///< agents per m^2; when set, width = sqrt(N / density)
    PolicyKind policy;
    int episodes = 50;
    std::uint64_t seed = 0;
    int threads = 1;
    std::filesystem::path output_dir = "out";
    bool write_traces = true;

    GnnConfig network;  ///< architecture trained by train-il
    IlConfig il;
    Td3Config rl = Td3Config::for_max_speed(SimParams{}.max_speed);
    std::filesystem::path pretrained;  ///< actor checkpoint for train-rl

    std::vector<int> sweep_agents{20, 50, 100, 200, 500};
    std::vector<double> sweep_densities{0.2, 0.5, 1.0, 2.0, 5.0};

    /// Derives width from density, aligns the network's input width and speed
    /// with the simulator, and validates every section.
    void finalize();

    /// Seeds seed, seed + 1, ..., one per episode.
    std::vector<std::uint64_t> episode_seeds() const;
};

ExperimentConfig parse_config(std::string_view text, const std::string& source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Round-trippable TOML snapshot of the effective configuration.
std::string to_toml(const ExperimentConfig& config);

}  // namespace swarmplan
