#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qtrack {

using Bits = std::vector<std::uint8_t>;
using Spins = std::vector<std::int8_t>;

std::string bits_to_string(const Bits& bits);
Bits bits_from_string(const std::string& s);

// spin convention: s = 1 - 2x, so x=0 <-> s=+1
Spins spins_from_bits(const Bits& bits);
Bits bits_from_spins(const Spins& spins);

// Sparse quadratic binary objective
//   E(x) = sum_i a_i x_i + sum_{j<i} b_ij x_i x_j + offset,   x_i in {0,1}.
//
// Quadratic keys are stored strictly lower-triangular (j < i); adding a
// mirrored or repeated entry folds into the existing coefficient. Absent
// keys mean coefficient zero. All coefficients must be finite.
class QuboModel {
public:
    using QuadKey = std::pair<std::size_t, std::size_t>;  // (i, j) with j < i
    using QuadMap = std::map<QuadKey, double>;

    explicit QuboModel(std::size_t n = 0, double offset = 0.0);

    std::size_t size() const { return n_; }
    double offset() const { return offset_; }
    void set_offset(double v);

    void add_linear(std::size_t i, double v);
    double linear(std::size_t i) const;
    const std::vector<double>& linear_terms() const { return linear_; }

    void add_quadratic(std::size_t i, std::size_t j, double v);
    double quadratic(std::size_t i, std::size_t j) const;
    const QuadMap& quadratic_terms() const { return quad_; }

    // largest |coefficient| over linear and quadratic terms (0 for empty)
    double max_abs_coefficient() const;

private:
    std::size_t n_;
    double offset_;
    std::vector<double> linear_;
    QuadMap quad_;
};

struct BitSolution {
    Bits bits;
    double energy = 0.0;
};

// Spin-form equivalent of a QUBO:
//   E(s) = sum_i h_i s_i + sum_{j<i} J_ij s_i s_j + offset,   s_i in {-1,+1}.
struct IsingModel {
    std::size_t n = 0;
    std::vector<double> h;
    std::map<std::pair<std::size_t, std::size_t>, double> J;  // (i, j), j < i
    double offset = 0.0;
};

double energy(const QuboModel& model, const Bits& bits);
double ising_energy(const IsingModel& model, const Spins& spins);

IsingModel to_ising(const QuboModel& model);

// Flat adjacency view of the quadratic terms, for incremental energy updates.
struct QuboAdjacency {
    std::vector<std::size_t> offsets;         // size n+1
    std::vector<std::size_t> neighbor;        // concatenated neighbor lists
    std::vector<double> coeff;                // matching b_ij
};

QuboAdjacency build_adjacency(const QuboModel& model);

// Energy change of flipping bit i in x, using the sparse adjacency.
double flip_delta(const QuboModel& model, const QuboAdjacency& adj,
                  const Bits& x, std::size_t i);

struct BruteForceResult {
    BitSolution best;
    // lowest `max_spectrum` assignments, ascending by (energy, bits)
    std::vector<std::pair<Bits, double>> spectrum;
};

inline constexpr std::size_t kBruteForceMaxVars = 24;

// Exhaustive scan over all 2^n assignments (n <= 24). Ties on the optimum are
// broken by the lexicographically smallest bitstring.
BruteForceResult brute_force(const QuboModel& model, std::size_t max_spectrum = 0);

class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Text serialization. Header line `n <count> offset <real>`, then `lin <i> <v>`
// and `quad <i> <j> <v>` lines (j < i), `#` comments. Values are printed with
// 17 significant digits so a round trip is value-exact. Companion `triplet`
// lines (written by the tracking layer) are skipped by the QUBO reader.
void save_qubo(const QuboModel& model, std::ostream& out);
void save_qubo(const QuboModel& model, const std::string& path);
QuboModel load_qubo(std::istream& in);
QuboModel load_qubo(const std::string& path);

void save_solution(const BitSolution& sol, const std::string& path,
                   const std::string& solver_tag = "");
BitSolution load_solution(const std::string& path);
std::string load_solution_solver_tag(const std::string& path);  // "" when absent

// "%.17g" rendering used by every text emitter
std::string format_g17(double v);

}  // namespace qtrack
