#include "qtrack/subqubo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

#include <json.hpp>

namespace qtrack {

void SubQuboParams::validate() const {
    if (pool_size < 2) throw std::invalid_argument("pool_size (N_I) must be >= 2");
    if (sample_count < 2) throw std::invalid_argument("sample_count (N_S) must be >= 2");
    if (sample_count > pool_size)
        throw std::invalid_argument("sample_count (N_S) must not exceed pool_size (N_I)");
    if (extractions < 1) throw std::invalid_argument("extractions (N_E) must be >= 1");
    if (sub_size < 1) throw std::invalid_argument("sub_size must be >= 1");
    if (outer_rounds < 1) throw std::invalid_argument("outer_rounds must be >= 1");
}

std::pair<QuboModel, std::vector<std::size_t>> clamp(
    const QuboModel& model, const Bits& assignment,
    const std::vector<std::size_t>& free_indices) {
    const std::size_t n = model.size();
    if (assignment.size() != n) throw std::invalid_argument("assignment length mismatch");

    std::vector<std::size_t> pos(n, SIZE_MAX);
    for (std::size_t k = 0; k < free_indices.size(); ++k) {
        const std::size_t i = free_indices[k];
        if (i >= n) throw std::invalid_argument("free index out of range");
        if (pos[i] != SIZE_MAX) throw std::invalid_argument("duplicate free index");
        pos[i] = k;
    }

    QuboModel sub(free_indices.size(), model.offset());
    const auto& lin = model.linear_terms();
    for (std::size_t i = 0; i < n; ++i) {
        if (lin[i] == 0.0) continue;
        if (pos[i] != SIZE_MAX)
            sub.add_linear(pos[i], lin[i]);
        else if (assignment[i])
            sub.set_offset(sub.offset() + lin[i]);
    }
    for (const auto& [key, b] : model.quadratic_terms()) {
        const auto [i, j] = key;
        const bool fi = pos[i] != SIZE_MAX;
        const bool fj = pos[j] != SIZE_MAX;
        if (fi && fj) {
            sub.add_quadratic(pos[i], pos[j], b);
        } else if (fi) {
            if (assignment[j]) sub.add_linear(pos[i], b);
        } else if (fj) {
            if (assignment[i]) sub.add_linear(pos[j], b);
        } else if (assignment[i] && assignment[j]) {
            sub.set_offset(sub.offset() + b);
        }
    }
    return {std::move(sub), free_indices};
}

std::vector<std::size_t> rank_variability(const SolutionPool& pool,
                                          const std::vector<std::size_t>& entry_indices,
                                          Rng& tie_rng) {
    if (entry_indices.size() < 2)
        throw std::invalid_argument("variability ranking needs >= 2 instances");
    const std::size_t n = pool.n;
    std::vector<double> variability(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t ones = 0;
        for (const std::size_t e : entry_indices) {
            if (e >= pool.entries.size()) throw std::invalid_argument("pool entry out of range");
            ones += pool.entries[e].bits[i];
        }
        const double p = static_cast<double>(ones) / static_cast<double>(entry_indices.size());
        variability[i] = p * (1.0 - p);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return variability[a] > variability[b];
    });
    // shuffle within tied groups
    std::size_t start = 0;
    while (start < n) {
        std::size_t end = start + 1;
        while (end < n && variability[order[end]] == variability[order[start]]) ++end;
        if (end - start > 1) tie_rng.shuffle(order.begin() + start, order.begin() + end);
        start = end;
    }
    return order;
}

namespace {

Bits solve_sub_instance(const QuboModel& sub, const SubQuboParams& params,
                        std::uint64_t job_seed) {
    switch (params.subsolver) {
        case SubSolverKind::Exact:
            return brute_force(sub).best.bits;
        case SubSolverKind::Anneal: {
            SaConfig cfg = params.sub_sa;
            cfg.seed = job_seed;
            return anneal(sub, cfg).bits;
        }
        case SubSolverKind::Qaoa: {
            QaoaConfig cfg = params.qaoa;
            cfg.seed = job_seed;
            return run_qaoa(to_ising(sub), cfg).modal_bits;
        }
    }
    throw std::logic_error("unknown subsolver");
}

}  // namespace

SubQuboResult solve_subqubo(const QuboModel& model, const SubQuboParams& params,
                            std::uint64_t seed) {
    params.validate();
    const std::size_t n = model.size();
    if (n < params.sub_size)
        throw std::invalid_argument("model smaller than the configured sub-QUBO size");

    SubQuboResult result;
    SaConfig pool_cfg = params.pool_sa;
    pool_cfg.seed = derive_seed(seed, "subqubo-pool");
    result.pool = build_pool(model, params.pool_size, pool_cfg);
    result.diagnostics.initial_best = result.pool.best().energy;

    struct Candidate {
        Bits bits;
        double energy;
        std::size_t job;
    };

    for (std::size_t round = 0; round < params.outer_rounds; ++round) {
        const SolutionPool snapshot = result.pool;  // extraction sees a frozen pool
        std::vector<Candidate> candidates;

        for (std::size_t e = 0; e < params.extractions; ++e) {
            const std::size_t gidx = round * params.extractions + e;
            Rng rng(derive_seed(seed, "subqubo-job", gidx));

            std::vector<std::size_t> ids(snapshot.entries.size());
            std::iota(ids.begin(), ids.end(), 0);
            rng.shuffle(ids.begin(), ids.end());
            ids.resize(params.sample_count);

            const auto ranked = rank_variability(snapshot, ids, rng);
            std::vector<std::size_t> free(ranked.begin(), ranked.begin() + params.sub_size);
            std::sort(free.begin(), free.end());

            const Bits& base = params.clamp_to_random_member
                                   ? snapshot.entries[rng.below(snapshot.entries.size())].bits
                                   : snapshot.best().bits;

            SubJobRecord record;
            record.round = round;
            record.sub = e;
            record.free_indices = free;

            try {
                auto [sub, mapping] = clamp(model, base, free);
                const Bits sub_bits =
                    solve_sub_instance(sub, params, derive_seed(seed, "subqubo-solve", gidx));
                record.sub_energy = energy(sub, sub_bits);
                Bits cand = base;
                for (std::size_t k = 0; k < mapping.size(); ++k) cand[mapping[k]] = sub_bits[k];
                record.candidate_energy = energy(model, cand);
                candidates.push_back({std::move(cand), record.candidate_energy,
                                      result.diagnostics.jobs.size()});
            } catch (const std::exception&) {
                record.skipped = true;
                ++result.diagnostics.skipped;
            }
            result.diagnostics.jobs.push_back(std::move(record));
        }

        // serialize insertions at round end, in sub-job order
        for (const Candidate& cand : candidates) {
            auto& entries = result.pool.entries;
            if (cand.energy >= entries.back().energy) continue;
            const bool duplicate =
                std::any_of(entries.begin(), entries.end(),
                            [&](const BitSolution& s) { return s.bits == cand.bits; });
            if (duplicate) continue;
            entries.pop_back();
            BitSolution sol{cand.bits, cand.energy};
            const auto it = std::lower_bound(
                entries.begin(), entries.end(), sol, [](const BitSolution& a, const BitSolution& b) {
                    return a.energy != b.energy ? a.energy < b.energy : a.bits < b.bits;
                });
            entries.insert(it, std::move(sol));
            result.diagnostics.jobs[cand.job].accepted = true;
        }
        result.diagnostics.round_best.push_back(result.pool.best().energy);
    }

    result.best = result.pool.best();
    return result;
}

void write_diagnostics(const SubQuboDiagnostics& diag, std::ostream& out) {
    using nlohmann::json;
    out << json{{"record", "init"}, {"best_energy", diag.initial_best}}.dump() << "\n";
    for (const auto& job : diag.jobs) {
        json j{{"record", "sub_job"},
               {"round", job.round},
               {"sub", job.sub},
               {"free", job.free_indices},
               {"accepted", job.accepted},
               {"skipped", job.skipped}};
        if (!job.skipped) {
            j["sub_energy"] = job.sub_energy;
            j["candidate_energy"] = job.candidate_energy;
        }
        out << j.dump() << "\n";
    }
    for (std::size_t r = 0; r < diag.round_best.size(); ++r) {
        out << json{{"record", "round"}, {"round", r}, {"best_energy", diag.round_best[r]}}.dump()
            << "\n";
    }
}

}  // namespace qtrack
