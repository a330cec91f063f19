#include "qtrack/anneal.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "qtrack/rng.hpp"

namespace qtrack {

void SaConfig::validate() const {
    if (t_start < 0.0 || t_end < 0.0) throw std::invalid_argument("temperatures must be >= 0");
    if (t_start > 0.0 && t_end > t_start)
        throw std::invalid_argument("t_end must not exceed t_start");
    if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
}

std::pair<std::size_t, std::pair<double, double>> SaConfig::resolve(
    const QuboModel& model) const {
    const std::size_t n = model.size();
    std::size_t sw = sweeps > 0 ? sweeps : 1000 * (1 + n / 100);
    double ts = t_start;
    if (ts <= 0.0) {
        const double scale = model.max_abs_coefficient();
        ts = scale > 0.0 ? 5.0 * scale : 1.0;
    }
    double te = std::min(t_end > 0.0 ? t_end : 0.01, ts);
    return {sw, {ts, te}};
}

BitSolution anneal(const QuboModel& model, const SaConfig& config, const Bits* start,
                   AnnealTrace* trace) {
    config.validate();
    const std::size_t n = model.size();
    if (n == 0) return {Bits{}, model.offset()};
    if (start && start->size() != n)
        throw std::invalid_argument("start assignment length mismatch");

    const auto [sweeps, temps] = config.resolve(model);
    const auto [t_start, t_end] = temps;
    const QuboAdjacency adj = build_adjacency(model);

    Rng rng(config.seed);
    Bits x(n);
    if (start) {
        x = *start;
    } else {
        for (auto& b : x) b = rng.u01() < 0.5;
    }

    // local fields keep flip costs O(1) for rejected moves:
    //   field[i] = a_i + sum_j b_ij x_j, so a flip of x_i changes the energy
    //   by +field[i] (off -> on) or -field[i] (on -> off)
    const auto& lin = model.linear_terms();
    std::vector<double> field(lin.begin(), lin.end());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = adj.offsets[i]; k < adj.offsets[i + 1]; ++k)
            if (x[adj.neighbor[k]]) field[i] += adj.coeff[k];

    double e = energy(model, x);
    Bits best_bits = x;
    double best_e = e;

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);

    const double ratio = t_end / t_start;
    for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
        const double frac =
            sweeps > 1 ? static_cast<double>(sweep) / static_cast<double>(sweeps - 1) : 0.0;
        const double temp = t_start * std::pow(ratio, frac);
        rng.shuffle(perm.begin(), perm.end());
        for (const std::size_t i : perm) {
            const double delta = x[i] ? -field[i] : field[i];
            bool accept = delta <= 0.0;
            if (!accept && temp > 0.0 && delta < 40.0 * temp)
                accept = rng.u01() < std::exp(-delta / temp);
            if (!accept) continue;
            x[i] ^= 1u;
            e += delta;
            const double sign = x[i] ? 1.0 : -1.0;
            for (std::size_t k = adj.offsets[i]; k < adj.offsets[i + 1]; ++k)
                field[adj.neighbor[k]] += sign * adj.coeff[k];
            if (trace) {
                trace->accepted_deltas.push_back(delta);
                trace->energies.push_back(e);
            }
            if (e < best_e) {
                best_e = e;
                best_bits = x;
            }
        }
    }
    return {best_bits, energy(model, best_bits)};
}

BitSolution anneal_best(const QuboModel& model, const SaConfig& config) {
    config.validate();
    BitSolution best;
    for (std::size_t r = 0; r < config.restarts; ++r) {
        SaConfig run = config;
        run.seed = derive_seed(config.seed, "sa-restart", r);
        BitSolution sol = anneal(model, run);
        if (r == 0 || sol.energy < best.energy ||
            (sol.energy == best.energy && sol.bits < best.bits)) {
            best = std::move(sol);
        }
    }
    return best;
}

void SolutionPool::sort_entries() {
    std::sort(entries.begin(), entries.end(), [](const BitSolution& a, const BitSolution& b) {
        return a.energy != b.energy ? a.energy < b.energy : a.bits < b.bits;
    });
}

SolutionPool build_pool(const QuboModel& model, std::size_t pool_size, const SaConfig& config) {
    if (pool_size < 2) throw std::invalid_argument("pool size must be >= 2");
    SolutionPool pool;
    pool.n = model.size();
    pool.entries.resize(pool_size);

    // independent runs with derived seeds; order-deterministic because every
    // result lands at its own index and the pool is sorted afterwards
    const std::size_t workers =
        std::min<std::size_t>(pool_size, std::max(1u, std::thread::hardware_concurrency()));
    std::size_t next = 0;
    while (next < pool_size) {
        const std::size_t batch = std::min(workers, pool_size - next);
        std::vector<std::future<BitSolution>> futures;
        futures.reserve(batch);
        for (std::size_t k = 0; k < batch; ++k) {
            SaConfig run = config;
            run.seed = derive_seed(config.seed, "pool", next + k);
            futures.push_back(std::async(std::launch::async,
                                         [&model, run] { return anneal(model, run); }));
        }
        for (std::size_t k = 0; k < batch; ++k) pool.entries[next + k] = futures[k].get();
        next += batch;
    }
    pool.sort_entries();
    return pool;
}

}  // namespace qtrack
