#include "qtrack/qubo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>
#include <sstream>

namespace qtrack {

namespace {

void check_finite(double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("coefficient must be finite");
}

}  // namespace

std::string bits_to_string(const Bits& bits) {
    std::string s(bits.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i) s[i] = bits[i] ? '1' : '0';
    return s;
}

Bits bits_from_string(const std::string& s) {
    Bits bits(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '0' && s[i] != '1') throw std::invalid_argument("bitstring must be 0/1");
        bits[i] = s[i] == '1';
    }
    return bits;
}

Spins spins_from_bits(const Bits& bits) {
    Spins s(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i)
        s[i] = static_cast<std::int8_t>(1 - 2 * static_cast<int>(bits[i]));
    return s;
}

Bits bits_from_spins(const Spins& spins) {
    Bits b(spins.size());
    for (std::size_t i = 0; i < spins.size(); ++i) {
        if (spins[i] != 1 && spins[i] != -1)
            throw std::invalid_argument("spin values must be +1 or -1");
        b[i] = spins[i] == -1;
    }
    return b;
}

QuboModel::QuboModel(std::size_t n, double offset) : n_(n), offset_(offset), linear_(n, 0.0) {
    check_finite(offset);
}

void QuboModel::set_offset(double v) {
    check_finite(v);
    offset_ = v;
}

void QuboModel::add_linear(std::size_t i, double v) {
    if (i >= n_) throw std::invalid_argument("linear index out of range");
    check_finite(v);
    linear_[i] += v;
}

double QuboModel::linear(std::size_t i) const {
    if (i >= n_) throw std::invalid_argument("linear index out of range");
    return linear_[i];
}

void QuboModel::add_quadratic(std::size_t i, std::size_t j, double v) {
    if (i >= n_ || j >= n_) throw std::invalid_argument("quadratic index out of range");
    if (i == j) throw std::invalid_argument("quadratic terms require i != j");
    check_finite(v);
    if (i < j) std::swap(i, j);
    quad_[{i, j}] += v;
}

double QuboModel::quadratic(std::size_t i, std::size_t j) const {
    if (i >= n_ || j >= n_) throw std::invalid_argument("quadratic index out of range");
    if (i < j) std::swap(i, j);
    auto it = quad_.find({i, j});
    return it == quad_.end() ? 0.0 : it->second;
}

double QuboModel::max_abs_coefficient() const {
    double m = 0.0;
    for (double v : linear_) m = std::max(m, std::abs(v));
    for (const auto& [k, v] : quad_) m = std::max(m, std::abs(v));
    return m;
}

double energy(const QuboModel& model, const Bits& bits) {
    if (bits.size() != model.size()) throw std::invalid_argument("bit vector length mismatch");
    double e = model.offset();
    const auto& lin = model.linear_terms();
    for (std::size_t i = 0; i < lin.size(); ++i)
        if (bits[i]) e += lin[i];
    for (const auto& [key, v] : model.quadratic_terms())
        if (bits[key.first] && bits[key.second]) e += v;
    return e;
}

double ising_energy(const IsingModel& model, const Spins& spins) {
    if (spins.size() != model.n) throw std::invalid_argument("spin vector length mismatch");
    for (auto s : spins)
        if (s != 1 && s != -1) throw std::invalid_argument("spin values must be +1 or -1");
    double e = model.offset;
    for (std::size_t i = 0; i < model.n; ++i) e += model.h[i] * spins[i];
    for (const auto& [key, v] : model.J) e += v * spins[key.first] * spins[key.second];
    return e;
}

IsingModel to_ising(const QuboModel& model) {
    IsingModel ising;
    ising.n = model.size();
    ising.h.assign(ising.n, 0.0);
    ising.offset = model.offset();
    // x_i = (1 - s_i)/2
    const auto& lin = model.linear_terms();
    for (std::size_t i = 0; i < lin.size(); ++i) {
        ising.h[i] -= lin[i] / 2.0;
        ising.offset += lin[i] / 2.0;
    }
    for (const auto& [key, b] : model.quadratic_terms()) {
        const auto [i, j] = key;
        ising.offset += b / 4.0;
        ising.h[i] -= b / 4.0;
        ising.h[j] -= b / 4.0;
        ising.J[{i, j}] += b / 4.0;
    }
    return ising;
}

QuboAdjacency build_adjacency(const QuboModel& model) {
    const std::size_t n = model.size();
    QuboAdjacency adj;
    std::vector<std::size_t> degree(n, 0);
    for (const auto& [key, v] : model.quadratic_terms()) {
        ++degree[key.first];
        ++degree[key.second];
    }
    adj.offsets.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) adj.offsets[i + 1] = adj.offsets[i] + degree[i];
    adj.neighbor.resize(adj.offsets[n]);
    adj.coeff.resize(adj.offsets[n]);
    std::vector<std::size_t> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
    for (const auto& [key, v] : model.quadratic_terms()) {
        const auto [i, j] = key;
        adj.neighbor[cursor[i]] = j;
        adj.coeff[cursor[i]++] = v;
        adj.neighbor[cursor[j]] = i;
        adj.coeff[cursor[j]++] = v;
    }
    return adj;
}

double flip_delta(const QuboModel& model, const QuboAdjacency& adj,
                  const Bits& x, std::size_t i) {
    double slope = model.linear_terms()[i];
    for (std::size_t k = adj.offsets[i]; k < adj.offsets[i + 1]; ++k)
        if (x[adj.neighbor[k]]) slope += adj.coeff[k];
    return x[i] ? -slope : slope;
}

BruteForceResult brute_force(const QuboModel& model, std::size_t max_spectrum) {
    const std::size_t n = model.size();
    if (n > kBruteForceMaxVars)
        throw CapacityError("brute_force limited to " + std::to_string(kBruteForceMaxVars) +
                            " variables, got " + std::to_string(n));

    BruteForceResult result;
    if (n == 0) {
        result.best = {Bits{}, model.offset()};
        if (max_spectrum > 0) result.spectrum.push_back({Bits{}, model.offset()});
        return result;
    }

    const QuboAdjacency adj = build_adjacency(model);
    Bits x(n, 0);
    double e = model.offset();

    // candidates within a tolerance window of the running minimum; exact
    // energies are recomputed afterwards so drift in the incremental scan
    // cannot affect tie-breaking
    double best_e = e;
    std::vector<Bits> near_best{x};
    constexpr double kWindow = 1e-9;
    constexpr std::size_t kNearCap = 4096;

    // bounded max-heap on (energy, bits) for the spectrum
    using SpecEntry = std::pair<double, Bits>;
    std::priority_queue<SpecEntry> heap;
    if (max_spectrum > 0) heap.push({e, x});

    const std::uint64_t total = 1ull << n;
    for (std::uint64_t g = 1; g < total; ++g) {
        // Gray-code order: exactly one bit flips per step
        const unsigned i = static_cast<unsigned>(__builtin_ctzll(g));
        e += flip_delta(model, adj, x, i);
        x[i] ^= 1u;
        if (e < best_e - kWindow) {
            best_e = e;
            near_best.clear();
            near_best.push_back(x);
        } else if (e <= best_e + kWindow && near_best.size() < kNearCap) {
            near_best.push_back(x);
        }
        if (max_spectrum > 0) {
            if (heap.size() < max_spectrum) {
                heap.push({e, x});
            } else if (e < heap.top().first) {
                heap.pop();
                heap.push({e, x});
            }
        }
    }

    // exact re-evaluation of the candidates, then (energy, bits) order
    result.best.bits = near_best.front();
    result.best.energy = energy(model, near_best.front());
    for (const Bits& cand : near_best) {
        const double ce = energy(model, cand);
        if (ce < result.best.energy ||
            (ce == result.best.energy && cand < result.best.bits)) {
            result.best = {cand, ce};
        }
    }

    while (!heap.empty()) {
        result.spectrum.push_back({heap.top().second, energy(model, heap.top().second)});
        heap.pop();
    }
    std::sort(result.spectrum.begin(), result.spectrum.end(),
              [](const auto& a, const auto& b) {
                  return a.second != b.second ? a.second < b.second : a.first < b.first;
              });
    return result;
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

double parse_double(const std::string& tok, std::size_t line) {
    double v = 0.0;
    const char* begin = tok.data();
    const char* end = begin + tok.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end)
        throw ParseError(line, "expected a number, got '" + tok + "'");
    return v;
}

std::size_t parse_index(const std::string& tok, std::size_t line) {
    std::size_t v = 0;
    const char* begin = tok.data();
    const char* end = begin + tok.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end)
        throw ParseError(line, "expected an index, got '" + tok + "'");
    return v;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

}  // namespace

void save_qubo(const QuboModel& model, std::ostream& out) {
    out << "n " << model.size() << " offset " << format_g17(model.offset()) << "\n";
    const auto& lin = model.linear_terms();
    for (std::size_t i = 0; i < lin.size(); ++i)
        if (lin[i] != 0.0) out << "lin " << i << " " << format_g17(lin[i]) << "\n";
    for (const auto& [key, v] : model.quadratic_terms())
        if (v != 0.0)
            out << "quad " << key.first << " " << key.second << " " << format_g17(v) << "\n";
}

void save_qubo(const QuboModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    save_qubo(model, out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

QuboModel load_qubo(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    QuboModel model;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto toks = split_ws(line);
        if (toks.empty()) continue;
        if (!have_header) {
            if (toks.size() != 4 || toks[0] != "n" || toks[2] != "offset")
                throw ParseError(lineno, "expected header 'n <count> offset <real>'");
            model = QuboModel(parse_index(toks[1], lineno), parse_double(toks[3], lineno));
            have_header = true;
            continue;
        }
        if (toks[0] == "lin") {
            if (toks.size() != 3) throw ParseError(lineno, "expected 'lin <i> <value>'");
            const std::size_t i = parse_index(toks[1], lineno);
            if (i >= model.size()) throw ParseError(lineno, "linear index out of range");
            model.add_linear(i, parse_double(toks[2], lineno));
        } else if (toks[0] == "quad") {
            if (toks.size() != 4) throw ParseError(lineno, "expected 'quad <i> <j> <value>'");
            const std::size_t i = parse_index(toks[1], lineno);
            const std::size_t j = parse_index(toks[2], lineno);
            if (i >= model.size() || j >= model.size())
                throw ParseError(lineno, "quadratic index out of range");
            if (j >= i) throw ParseError(lineno, "quad lines require j < i");
            model.add_quadratic(i, j, parse_double(toks[3], lineno));
        } else if (toks[0] == "triplet") {
            continue;  // companion record owned by the tracking layer
        } else {
            throw ParseError(lineno, "unknown directive '" + toks[0] + "'");
        }
    }
    if (!have_header) throw ParseError(lineno, "missing 'n ... offset ...' header");
    return model;
}

QuboModel load_qubo(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return load_qubo(in);
}

void save_solution(const BitSolution& sol, const std::string& path,
                   const std::string& solver_tag) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "n " << sol.bits.size() << "\n";
    if (!sol.bits.empty()) out << "bits " << bits_to_string(sol.bits) << "\n";
    out << "energy " << format_g17(sol.energy) << "\n";
    if (!solver_tag.empty()) out << "solver " << solver_tag << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

BitSolution load_solution(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    std::size_t lineno = 0;
    BitSolution sol;
    bool have_n = false, have_bits = false, have_energy = false;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto toks = split_ws(line);
        if (toks.empty()) continue;
        if (toks[0] == "n" && toks.size() == 2) {
            n = parse_index(toks[1], lineno);
            have_n = true;
        } else if (toks[0] == "bits" && toks.size() == 2) {
            try {
                sol.bits = bits_from_string(toks[1]);
            } catch (const std::invalid_argument& e) {
                throw ParseError(lineno, e.what());
            }
            have_bits = true;
        } else if (toks[0] == "energy" && toks.size() == 2) {
            sol.energy = parse_double(toks[1], lineno);
            have_energy = true;
        } else if (toks[0] == "solver" && toks.size() == 2) {
            continue;
        } else {
            throw ParseError(lineno, "unknown directive '" + toks[0] + "'");
        }
    }
    if (!have_n) throw ParseError(lineno, "missing 'n' line");
    if (!have_energy) throw ParseError(lineno, "missing 'energy' line");
    if (n > 0 && !have_bits) throw ParseError(lineno, "missing 'bits' line");
    if (sol.bits.size() != n) throw ParseError(lineno, "bits length does not match n");
    return sol;
}

std::string load_solution_solver_tag(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    while (std::getline(in, line)) {
        const auto toks = split_ws(line);
        if (toks.size() == 2 && toks[0] == "solver") return toks[1];
    }
    return "";
}

}  // namespace qtrack
