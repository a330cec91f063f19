#include "qtrack/qaoa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qtrack/rng.hpp"

namespace qtrack {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kPi = 3.14159265358979323846;

void check_qubits(std::size_t n) {
    if (n < 1 || n > kMaxQubits)
        throw CapacityError("statevector supports 1.." + std::to_string(kMaxQubits) +
                            " qubits, got " + std::to_string(n));
}

// Ising energies of every basis state, offset included.
std::vector<double> energy_table(const IsingModel& ising) {
    const std::size_t n = ising.n;
    const std::uint64_t dim = 1ull << n;
    std::vector<double> e(dim, ising.offset);
    for (std::size_t i = 0; i < n; ++i) {
        const double hi = ising.h[i];
        if (hi == 0.0) continue;
        const std::uint64_t mask = 1ull << i;
        for (std::uint64_t k = 0; k < dim; ++k) e[k] += (k & mask) ? -hi : hi;
    }
    for (const auto& [key, j] : ising.J) {
        if (j == 0.0) continue;
        const std::uint64_t mi = 1ull << key.first;
        const std::uint64_t mj = 1ull << key.second;
        for (std::uint64_t k = 0; k < dim; ++k) {
            const bool same = static_cast<bool>(k & mi) == static_cast<bool>(k & mj);
            e[k] += same ? j : -j;
        }
    }
    return e;
}

void phase_multiply(Statevector& state, const std::vector<double>& energies, double gamma) {
    for (std::uint64_t k = 0; k < state.amplitudes.size(); ++k) {
        const double phi = -gamma * energies[k];
        state.amplitudes[k] *= std::complex<double>(std::cos(phi), std::sin(phi));
    }
}

void mixer_multiply(Statevector& state, double beta) {
    const double c = std::cos(beta);
    const double s = std::sin(beta);
    const std::complex<double> mis(0.0, -s);
    const std::uint64_t dim = state.amplitudes.size();
    for (std::size_t q = 0; q < state.n_qubits; ++q) {
        const std::uint64_t step = 1ull << q;
        for (std::uint64_t base = 0; base < dim; base += 2 * step) {
            for (std::uint64_t off = 0; off < step; ++off) {
                auto& a0 = state.amplitudes[base + off];
                auto& a1 = state.amplitudes[base + off + step];
                const auto t0 = c * a0 + mis * a1;
                const auto t1 = mis * a0 + c * a1;
                a0 = t0;
                a1 = t1;
            }
        }
    }
}

Bits bits_of_index(std::uint64_t k, std::size_t n) {
    Bits b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = (k >> i) & 1;
    return b;
}

std::uint64_t index_of_bits(const Bits& b) {
    std::uint64_t k = 0;
    for (std::size_t i = 0; i < b.size(); ++i)
        if (b[i]) k |= 1ull << i;
    return k;
}

// argmax probability with ties to the lexicographically smallest bitstring
std::pair<Bits, double> modal_of_state(const Statevector& state) {
    const std::size_t n = state.n_qubits;
    std::uint64_t best_k = 0;
    double best_p = std::norm(state.amplitudes[0]);
    Bits best_bits = bits_of_index(0, n);
    for (std::uint64_t k = 1; k < state.amplitudes.size(); ++k) {
        const double p = std::norm(state.amplitudes[k]);
        if (p > best_p + 1e-15) {
            best_p = p;
            best_k = k;
            best_bits = bits_of_index(k, n);
        } else if (std::abs(p - best_p) <= 1e-15) {
            Bits cand = bits_of_index(k, n);
            if (cand < best_bits) {
                best_k = k;
                best_bits = std::move(cand);
            }
        }
    }
    return {best_bits, std::norm(state.amplitudes[best_k])};
}

}  // namespace

double Statevector::norm_sq() const {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return s;
}

void QaoaConfig::validate() const {
    if (layers < 1) throw std::invalid_argument("layers must be >= 1");
    if (loss == LossKind::CVaR && (cvar_alpha <= 0.0 || cvar_alpha > 1.0))
        throw std::invalid_argument("cvar_alpha must be in (0, 1]");
    if (loss == LossKind::Gibbs && gibbs_eta <= 0.0)
        throw std::invalid_argument("gibbs_eta must be > 0");
    if (mode == SampleMode::Shots && shots < 1)
        throw std::invalid_argument("shots must be >= 1");
    if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
    if (!angle_bounds.lower.empty() && angle_bounds.dim() != 2 * layers)
        throw std::invalid_argument("angle_bounds dimension must equal 2*layers");
}

BoxBounds QaoaConfig::resolved_bounds() const {
    if (!angle_bounds.lower.empty()) return angle_bounds;
    BoxBounds b;
    b.lower.assign(2 * layers, 0.0);
    b.upper.assign(2 * layers, 0.0);
    for (std::size_t k = 0; k < layers; ++k) {
        b.upper[k] = kTwoPi;           // gamma
        b.upper[layers + k] = kPi;     // beta
    }
    return b;
}

Statevector prepare_plus_state(std::size_t n) {
    check_qubits(n);
    Statevector state;
    state.n_qubits = n;
    const std::uint64_t dim = 1ull << n;
    state.amplitudes.assign(dim, std::complex<double>(std::pow(2.0, -0.5 * n), 0.0));
    return state;
}

Statevector apply_cost_layer(Statevector state, const IsingModel& ising, double gamma) {
    if (ising.n != state.n_qubits) throw std::invalid_argument("qubit count mismatch");
    const auto energies = energy_table(ising);
    phase_multiply(state, energies, gamma);
    return state;
}

Statevector apply_mixer_layer(Statevector state, double beta) {
    mixer_multiply(state, beta);
    return state;
}

Statevector simulate(const IsingModel& ising, const std::vector<double>& params) {
    if (params.size() % 2 != 0) throw std::invalid_argument("params length must be even");
    const std::size_t p = params.size() / 2;
    Statevector state = prepare_plus_state(ising.n);
    const auto energies = energy_table(ising);
    for (std::size_t k = 0; k < p; ++k) {
        phase_multiply(state, energies, params[k]);
        mixer_multiply(state, params[p + k]);
    }
    return state;
}

SampleDistribution sample(const Statevector& state, std::uint64_t shots, std::uint64_t seed) {
    if (shots < 1) throw std::invalid_argument("shots must be >= 1");
    const std::uint64_t dim = state.amplitudes.size();
    std::vector<double> cdf(dim);
    double acc = 0.0;
    for (std::uint64_t k = 0; k < dim; ++k) {
        acc += std::norm(state.amplitudes[k]);
        cdf[k] = acc;
    }
    // guard the tail against rounding below 1
    cdf[dim - 1] = std::max(cdf[dim - 1], 1.0);

    Rng rng(seed);
    std::vector<std::uint64_t> hits(dim, 0);
    for (std::uint64_t s = 0; s < shots; ++s) {
        const double u = rng.u01() * cdf[dim - 1];
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        hits[static_cast<std::uint64_t>(it - cdf.begin())]++;
    }
    SampleDistribution dist;
    dist.total = shots;
    for (std::uint64_t k = 0; k < dim; ++k)
        if (hits[k] > 0)
            dist.counts.emplace(bits_to_string(bits_of_index(k, state.n_qubits)), hits[k]);
    return dist;
}

double probability_of(const Statevector& state, const Bits& bits) {
    if (bits.size() != state.n_qubits) throw std::invalid_argument("bit vector length mismatch");
    return std::norm(state.amplitudes[index_of_bits(bits)]);
}

double loss_cvar(const std::vector<std::pair<double, std::uint64_t>>& energies, double alpha) {
    if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("alpha must be in (0, 1]");
    std::uint64_t total = 0;
    for (const auto& [e, c] : energies) total += c;
    if (total == 0) throw std::invalid_argument("empty sample set");

    auto sorted = energies;
    std::sort(sorted.begin(), sorted.end());
    // ceiling with a nudge against cases like 0.1*10 landing just above 1.0
    std::uint64_t take = static_cast<std::uint64_t>(
        std::ceil(alpha * static_cast<double>(total) - 1e-9));
    take = std::clamp<std::uint64_t>(take, 1, total);

    double sum = 0.0;
    std::uint64_t used = 0;
    for (const auto& [e, c] : sorted) {
        const std::uint64_t u = std::min<std::uint64_t>(c, take - used);
        sum += e * static_cast<double>(u);
        used += u;
        if (used == take) break;
    }
    return sum / static_cast<double>(take);
}

double loss_gibbs(const std::vector<std::pair<double, std::uint64_t>>& energies, double eta) {
    if (eta <= 0.0) throw std::invalid_argument("eta must be > 0");
    std::uint64_t total = 0;
    double e_min = INFINITY;
    for (const auto& [e, c] : energies) {
        if (c == 0) continue;
        total += c;
        e_min = std::min(e_min, e);
    }
    if (total == 0) throw std::invalid_argument("empty sample set");
    double s = 0.0;
    for (const auto& [e, c] : energies)
        s += static_cast<double>(c) * std::exp(-eta * (e - e_min));
    return eta * e_min - std::log(s / static_cast<double>(total));
}

double loss_cvar_weighted(const std::vector<std::pair<double, double>>& energy_weight,
                          double alpha) {
    if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("alpha must be in (0, 1]");
    if (energy_weight.empty()) throw std::invalid_argument("empty distribution");
    auto sorted = energy_weight;
    std::sort(sorted.begin(), sorted.end());
    double mass = 0.0, sum = 0.0;
    for (const auto& [e, w] : sorted) {
        if (w <= 0.0) continue;
        const double u = std::min(w, alpha - mass);
        sum += e * u;
        mass += u;
        if (mass >= alpha - 1e-15) break;
    }
    if (mass <= 0.0) throw std::invalid_argument("distribution has no mass");
    return sum / mass;
}

double loss_gibbs_weighted(const std::vector<std::pair<double, double>>& energy_weight,
                           double eta) {
    if (eta <= 0.0) throw std::invalid_argument("eta must be > 0");
    if (energy_weight.empty()) throw std::invalid_argument("empty distribution");
    double e_min = INFINITY;
    for (const auto& [e, w] : energy_weight)
        if (w > 0.0) e_min = std::min(e_min, e);
    if (!std::isfinite(e_min)) throw std::invalid_argument("distribution has no mass");
    double s = 0.0, mass = 0.0;
    for (const auto& [e, w] : energy_weight) {
        if (w <= 0.0) continue;
        s += w * std::exp(-eta * (e - e_min));
        mass += w;
    }
    return eta * e_min - std::log(s / mass);
}

QaoaOutcome run_qaoa(const IsingModel& ising, const QaoaConfig& config) {
    config.validate();
    check_qubits(ising.n);
    const std::size_t p = config.layers;
    const BoxBounds bounds = config.resolved_bounds();
    const auto energies = energy_table(ising);
    const std::uint64_t dim = 1ull << ising.n;

    // energy-ascending basis order makes both exact losses a single pass
    std::vector<std::uint64_t> order(dim);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint64_t a, std::uint64_t b) { return energies[a] < energies[b]; });

    const auto evolve = [&](const std::vector<double>& params) {
        Statevector state = prepare_plus_state(ising.n);
        for (std::size_t k = 0; k < p; ++k) {
            phase_multiply(state, energies, params[k]);
            mixer_multiply(state, params[p + k]);
        }
        return state;
    };

    const auto exact_loss = [&](const Statevector& state) {
        if (config.loss == LossKind::CVaR) {
            double mass = 0.0, sum = 0.0;
            for (std::uint64_t k : order) {
                const double w = std::norm(state.amplitudes[k]);
                if (w <= 0.0) continue;
                const double u = std::min(w, config.cvar_alpha - mass);
                sum += energies[k] * u;
                mass += u;
                if (mass >= config.cvar_alpha - 1e-15) break;
            }
            return sum / std::max(mass, 1e-300);
        }
        double s = 0.0;
        const double e_min = energies[order.front()];
        for (std::uint64_t k = 0; k < dim; ++k)
            s += std::norm(state.amplitudes[k]) * std::exp(-config.gibbs_eta * (energies[k] - e_min));
        return config.gibbs_eta * e_min - std::log(std::max(s, 1e-300));
    };

    const auto sampled_loss = [&](const Statevector& state, std::uint64_t seed) {
        const SampleDistribution dist = sample(state, config.shots, seed);
        std::vector<std::pair<double, std::uint64_t>> es;
        es.reserve(dist.counts.size());
        for (const auto& [bs, c] : dist.counts)
            es.emplace_back(energies[index_of_bits(bits_from_string(bs))], c);
        return config.loss == LossKind::CVaR ? loss_cvar(es, config.cvar_alpha)
                                             : loss_gibbs(es, config.gibbs_eta);
    };

    QaoaOutcome best;
    bool have_best = false;

    for (std::size_t r = 0; r < config.restarts; ++r) {
        Rng init_rng(derive_seed(config.seed, "qaoa-init", r));
        std::vector<double> x0(2 * p);
        for (std::size_t k = 0; k < 2 * p; ++k)
            x0[k] = init_rng.uniform(bounds.lower[k], bounds.upper[k]);
        const std::uint64_t shot_seed = derive_seed(config.seed, "qaoa-shots", r);

        const Objective objective = [&](const std::vector<double>& params) {
            const Statevector state = evolve(params);
            return config.mode == SampleMode::Exact ? exact_loss(state)
                                                    : sampled_loss(state, shot_seed);
        };

        OptimResult res;
        try {
            res = minimize(objective, x0, bounds, config.optimizer, config.tolerances);
        } catch (const OptimizationError& e) {
            res = e.last_good();
            res.converged = false;
            if (res.x.empty()) continue;
        }
        if (!have_best || res.f < best.final_loss) {
            best.final_loss = res.f;
            best.best_params = res.x;
            best.loss_trace = res.trace;
            best.converged = res.converged;
            best.evaluations = res.evaluations;
            have_best = true;
        }
    }
    if (!have_best)
        throw std::runtime_error("every QAOA restart failed before producing an iterate");

    const Statevector final_state = evolve(best.best_params);
    const std::uint64_t report_seed = derive_seed(config.seed, "qaoa-report");
    best.distribution = sample(final_state, std::max<std::uint64_t>(config.shots, 1), report_seed);

    if (config.mode == SampleMode::Exact) {
        auto [bits, prob] = modal_of_state(final_state);
        best.modal_bits = std::move(bits);
        best.modal_probability = prob;
    } else {
        // highest count, ties to the lexicographically smallest bitstring;
        // map order already yields the smallest key first among equals
        std::uint64_t best_count = 0;
        std::string best_key;
        for (const auto& [bs, c] : best.distribution.counts) {
            if (c > best_count) {
                best_count = c;
                best_key = bs;
            }
        }
        best.modal_bits = bits_from_string(best_key);
        best.modal_probability =
            static_cast<double>(best_count) / static_cast<double>(best.distribution.total);
    }
    return best;
}

}  // namespace qtrack
