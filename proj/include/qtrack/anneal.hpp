#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qtrack/qubo.hpp"

namespace qtrack {

struct SaConfig {
    std::size_t sweeps = 0;   // 0 resolves to 1000 * (1 + n/100)
    double t_start = 0.0;     // 0 resolves to 5 * max|coefficient| (1.0 for a zero model)
    double t_end = 0.01;
    std::uint64_t seed = 0;
    std::size_t restarts = 1;

    void validate() const;
    // concrete (sweeps, t_start, t_end) for a given model
    std::pair<std::size_t, std::pair<double, double>> resolve(const QuboModel& model) const;
};

// Optional per-run instrumentation for property tests.
struct AnnealTrace {
    std::vector<double> accepted_deltas;
    std::vector<double> energies;  // energy after every accepted flip
};

// Single-bit-flip Metropolis dynamics under a geometric temperature ramp.
// Each sweep visits all n variables in a seeded random permutation. Returns
// the best assignment ever visited, energy recomputed from scratch.
BitSolution anneal(const QuboModel& model, const SaConfig& config,
                   const Bits* start = nullptr, AnnealTrace* trace = nullptr);

// Best of config.restarts independent runs with derived seeds.
BitSolution anneal_best(const QuboModel& model, const SaConfig& config);

// Ranked set of candidate full-QUBO solutions (ascending energy, then bits).
struct SolutionPool {
    std::size_t n = 0;  // owning model's variable count
    std::vector<BitSolution> entries;

    const BitSolution& best() const { return entries.front(); }
    void sort_entries();
};

// pool_size independent anneal runs with seeds derived from config.seed.
// Duplicates are kept: they carry the variability signal.
SolutionPool build_pool(const QuboModel& model, std::size_t pool_size, const SaConfig& config);

}  // namespace qtrack
