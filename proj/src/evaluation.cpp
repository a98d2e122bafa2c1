#include "swarmplan/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace swarmplan {

EpisodeSummary summarize(const EpisodeTrace& trace, const SimParams& params, std::uint64_t seed) {
    EpisodeSummary s;
    s.seed = seed;
    s.discounted_coverage = discounted_coverage(trace, params);
    s.coverage = trace.coverage;
    s.mean_coverage = trace.coverage.empty()
                          ? 0.0
                          : std::accumulate(trace.coverage.begin(), trace.coverage.end(), 0.0) /
                                static_cast<double>(trace.coverage.size());
    s.collisions_step_pair = trace.total_step_pair_collisions();
    s.collision_pairs = trace.total_collision_pairs();
    s.collisions_events = trace.total_contact_events();
    s.near_collisions = trace.total_near_collisions();
    return s;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
    if (threads < 1) throw std::invalid_argument("thread count must be >= 1");
    std::vector<std::exception_ptr> errors(count);
    auto work = [&](std::size_t worker, std::size_t stride) {
        for (std::size_t i = worker; i < count; i += stride) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
    if (n_workers <= 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work, w, n_workers);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::vector<EpisodeSummary> run_episodes(const ControllerFactory& make_controller, const SimParams& params,
                                         const std::vector<std::uint64_t>& seeds, int threads) {
    std::vector<EpisodeSummary> out(seeds.size());
    parallel_for(seeds.size(), threads, [&](std::size_t i) {
        out[i] = summarize(simulate_episode(params, seeds[i], make_controller), params, seeds[i]);
    });
    return out;
}

MeanStd mean_std(const std::vector<double>& values) {
    if (values.empty()) return {};
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / n)};
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(base) ^ stream) ^ index);
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, int count) {
    std::vector<std::uint64_t> s(static_cast<std::size_t>(std::max(count, 0)));
    std::iota(s.begin(), s.end(), first);
    return s;
}

}  // namespace swarmplan
