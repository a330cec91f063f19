#pragma once

#include <cstdint>
#include <vector>

#include "qtrack/event_io.hpp"
#include "qtrack/qaoa.hpp"
#include "qtrack/qubo.hpp"
#include "qtrack/subqubo.hpp"
#include "qtrack/tracking.hpp"

namespace qtrack {

// A generated event with its candidate triplets and assembled QUBO.
struct TrackingProblem {
    std::vector<Hit> hits;
    std::vector<Doublet> doublets;
    std::vector<Triplet> triplets;
    QuboModel model;
};

TrackingProblem build_tracking_problem(const DetectorGeometry& geometry,
                                       const GeneratorConfig& generator,
                                       const QuboBuildConfig& build);

// Fixed 6-variable instance cut out of a small tracking QUBO: the first
// generator seed whose event yields a connected 6-variable sub-block with a
// unique, non-trivial ground state and both chain and conflict couplings.
// The scan is deterministic, so every caller sees the same instance.
struct ReferenceInstance {
    QuboModel model;  // 6 variables
    Bits optimum;
    double optimum_energy = 0.0;
    double spectral_gap = 0.0;   // E_1 - E_0
    std::uint64_t event_seed = 0;
};

const ReferenceInstance& reference_tracking_qubo();

struct LayerSweepPoint {
    std::size_t layers = 0;
    std::size_t jobs = 0;
    double prob_mean = 0.0;      // mean probability of the optimum over jobs
    double accuracy = 0.0;       // fraction of jobs whose modal bits hit the optimum
    double accuracy_err = 0.0;   // binomial standard error
};

// Runs `jobs` independent QAOA jobs per layer count on the given instance.
// Job seeds derive from (seed, layer count, job index).
std::vector<LayerSweepPoint> sweep_layers(const QuboModel& model, const Bits& optimum,
                                          const std::vector<std::size_t>& layer_counts,
                                          std::size_t jobs, const QaoaConfig& base,
                                          std::uint64_t seed);

}  // namespace qtrack
