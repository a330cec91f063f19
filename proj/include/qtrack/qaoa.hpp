#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qtrack/optim.hpp"
#include "qtrack/qubo.hpp"

namespace qtrack {

inline constexpr std::size_t kMaxQubits = 20;

// Dense amplitude vector over 2^n computational basis states. Basis index k
// encodes variable i as bit i of k, i.e. x_i = (k >> i) & 1.
struct Statevector {
    std::size_t n_qubits = 0;
    std::vector<std::complex<double>> amplitudes;

    double norm_sq() const;
};

struct SampleDistribution {
    std::map<std::string, std::uint64_t> counts;  // bitstring -> count
    std::uint64_t total = 0;
};

enum class LossKind { CVaR, Gibbs };

enum class SampleMode { Exact, Shots };

struct QaoaConfig {
    std::size_t layers = 7;
    SampleMode mode = SampleMode::Exact;
    std::uint64_t shots = 1024;  // used when mode == Shots, and for the reported distribution
    LossKind loss = LossKind::CVaR;
    double cvar_alpha = 0.25;
    double gibbs_eta = 1.0;
    OptimMethod optimizer = OptimMethod::QuasiNewtonBounded;
    BoxBounds angle_bounds;  // dimension 2p, (gamma_1..gamma_p, beta_1..beta_p); empty = default
    std::size_t restarts = 5;
    std::uint64_t seed = 0;
    Tolerances tolerances;

    void validate() const;
    // gamma_k in [0, 2pi), beta_k in [0, pi)
    BoxBounds resolved_bounds() const;
};

struct QaoaOutcome {
    Bits modal_bits;
    double modal_probability = 0.0;
    std::vector<double> best_params;  // 2p angles of the winning restart
    double final_loss = 0.0;
    SampleDistribution distribution;
    std::vector<std::pair<std::size_t, double>> loss_trace;
    bool converged = false;
    std::size_t evaluations = 0;
};

Statevector prepare_plus_state(std::size_t n);

// Diagonal phase evolution: amplitude of |x> gains e^{-i gamma E(x)} where
// E(x) is the full Ising energy of the spin image of x (offset included; it
// only contributes a global phase).
Statevector apply_cost_layer(Statevector state, const IsingModel& ising, double gamma);

// Transverse mixer: R_X(2 beta) on every qubit.
Statevector apply_mixer_layer(Statevector state, double beta);

// Plus state followed by p alternating cost/mixer layers. params holds
// (gamma_1..gamma_p, beta_1..beta_p).
Statevector simulate(const IsingModel& ising, const std::vector<double>& params);

SampleDistribution sample(const Statevector& state, std::uint64_t shots, std::uint64_t seed);

double probability_of(const Statevector& state, const Bits& bits);

// Mean of the ceil(alpha K) lowest-energy samples, counting multiplicity.
double loss_cvar(const std::vector<std::pair<double, std::uint64_t>>& energies, double alpha);

// -ln( (1/K) sum_k e^{-eta E_k} ), computed with a max shift.
double loss_gibbs(const std::vector<std::pair<double, std::uint64_t>>& energies, double eta);

// Distribution-weighted counterparts used in exact mode. Weights must be
// non-negative and sum to ~1; CVaR averages the lowest-energy alpha mass
// (fractional tail weight at the boundary).
double loss_cvar_weighted(const std::vector<std::pair<double, double>>& energy_weight,
                          double alpha);
double loss_gibbs_weighted(const std::vector<std::pair<double, double>>& energy_weight,
                           double eta);

// Full pipeline: seeded multi-restart angle optimization of the configured
// loss, then modal-bitstring extraction from the winning parameters. In exact
// mode the modal bitstring maximizes |amplitude|^2 (ties to the
// lexicographically smallest bitstring) and the attached distribution is a
// seeded sample for reporting; in shots mode the modal bitstring is the
// highest-count sampled outcome.
QaoaOutcome run_qaoa(const IsingModel& ising, const QaoaConfig& config);

}  // namespace qtrack
