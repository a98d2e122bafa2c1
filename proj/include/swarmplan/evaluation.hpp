#pragma once

#include "swarmplan/world.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace swarmplan {

/// Scalar outcomes of one episode.
struct EpisodeSummary {
    std::uint64_t seed = 0;
    double discounted_coverage = 0.0;
    double mean_coverage = 0.0;  ///< plain average of c(t) over t = 0..T
    long long collisions_step_pair = 0;
    long long collision_pairs = 0;
    long long collisions_events = 0;
    long long near_collisions = 0;
    std::vector<double> coverage;  ///< c(t), t = 0..T
};

EpisodeSummary summarize(const EpisodeTrace& trace, const SimParams& params, std::uint64_t seed);

/// One episode per seed, results in seed-list order. Work is split across
/// `threads` workers; the output does not depend on the thread count.
std::vector<EpisodeSummary> run_episodes(const ControllerFactory& make_controller, const SimParams& params,
                                         const std::vector<std::uint64_t>& seeds, int threads = 1);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  ///< population standard deviation
};

MeanStd mean_std(const std::vector<double>& values);

/// Mixes (base, stream, index) into a well-spread 64-bit seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

std::vector<std::uint64_t> seed_range(std::uint64_t first, int count);

/// Calls body(i) for i in [0, count) on up to `threads` workers (strided
/// split). The first exception thrown by any call is rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace swarmplan
