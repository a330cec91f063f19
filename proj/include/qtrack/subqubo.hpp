#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qtrack/anneal.hpp"
#include "qtrack/qaoa.hpp"
#include "qtrack/qubo.hpp"
#include "qtrack/rng.hpp"

namespace qtrack {

enum class SubSolverKind { Qaoa, Anneal, Exact };

struct SubQuboParams {
    std::size_t pool_size = 20;    // N_I quasi-optimal full solutions
    std::size_t extractions = 10;  // N_E sub-QUBOs per round
    std::size_t sample_count = 5;  // N_S instances ranked per extraction
    std::size_t sub_size = 6;      // d free variables per sub-QUBO
    std::size_t outer_rounds = 5;
    SubSolverKind subsolver = SubSolverKind::Qaoa;
    QaoaConfig qaoa;       // Qaoa subsolver settings (seed is derived per sub-job)
    SaConfig sub_sa;       // Anneal subsolver settings
    SaConfig pool_sa;      // pool initialization runs
    bool clamp_to_random_member = false;  // fix bits from a random pool entry instead of the best

    void validate() const;
};

struct SubJobRecord {
    std::size_t round = 0;
    std::size_t sub = 0;
    std::vector<std::size_t> free_indices;
    double sub_energy = 0.0;        // clamped-model energy of the sub-solution
    double candidate_energy = 0.0;  // full-model energy of the patched solution
    bool accepted = false;
    bool skipped = false;
};

struct SubQuboDiagnostics {
    double initial_best = 0.0;
    std::vector<double> round_best;
    std::vector<SubJobRecord> jobs;
    std::size_t skipped = 0;
};

struct SubQuboResult {
    BitSolution best;
    SolutionPool pool;
    SubQuboDiagnostics diagnostics;
};

// Restrict the model to `free_indices`, folding every fixed variable of
// `assignment` into the linear terms and offset. Returns the sub-model and
// the sub-position -> original-index mapping. For any sub-assignment y,
// sub energy == full energy of (assignment patched with y on the free set).
std::pair<QuboModel, std::vector<std::size_t>> clamp(
    const QuboModel& model, const Bits& assignment,
    const std::vector<std::size_t>& free_indices);

// Variables ordered by Bernoulli variance p(1-p) of their bit values across
// the selected pool entries, descending. Tied groups (converged pools have
// many all-zero-variance ties) are permuted by the supplied generator so
// successive extractions explore different blocks.
std::vector<std::size_t> rank_variability(const SolutionPool& pool,
                                          const std::vector<std::size_t>& entry_indices,
                                          Rng& tie_rng);

// Multiple-solution-instance sub-QUBO search: anneal an initial pool of
// pool_size full solutions, then for each round extract `extractions`
// sub-QUBOs over the currently most variable bits, solve them with the
// configured subsolver against the round-start snapshot, and merge improved
// candidates back (evict-worst, no exact duplicates). Pool-best energy never
// increases.
SubQuboResult solve_subqubo(const QuboModel& model, const SubQuboParams& params,
                            std::uint64_t seed);

// Line-delimited JSON rendering of the diagnostics.
void write_diagnostics(const SubQuboDiagnostics& diag, std::ostream& out);

}  // namespace qtrack
