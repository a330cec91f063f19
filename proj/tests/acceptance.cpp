// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Invoked as: acceptance <path-to-qtrack-cli> <scratch-dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "qtrack/experiments.hpp"
#include "qtrack/rng.hpp"
#include "qtrack/run_config.hpp"

namespace fs = std::filesystem;
using namespace qtrack;

namespace {

int g_failures = 0;
std::string g_cli;
fs::path g_scratch;

void report(int criterion, bool ok, const std::string& description, double seconds,
            const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%.1fs%s%s)\n", ok ? "PASS" : "FAIL", criterion,
                description.c_str(), seconds, detail.empty() ? "" : "; ",
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

void run_criterion(int criterion, const std::string& description, double budget_s,
                   const std::function<bool(std::string&)>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
        ok = false;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (seconds > budget_s) {
        ok = false;
        detail += (detail.empty() ? "" : "; ") + std::string("runtime budget exceeded");
    }
    report(criterion, ok, description, seconds, detail);
}

QuboModel random_sparse(std::size_t n, Rng& rng, double density = 0.5, double range = 2.0) {
    QuboModel m(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rng.u01() < density) m.add_linear(i, rng.uniform(-range, range));
        for (std::size_t j = 0; j < i; ++j)
            if (rng.u01() < density) m.add_quadratic(i, j, rng.uniform(-range, range));
    }
    return m;
}

Bits random_bits(std::size_t n, Rng& rng) {
    Bits x(n);
    for (auto& b : x) b = rng.u01() < 0.5;
    return x;
}

int shell(const std::string& cmd) {
    const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    return status == -1 ? -1 : WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// shared sweep over the reference instance for criteria 2 and 3
const std::vector<LayerSweepPoint>& reference_sweep() {
    static std::vector<LayerSweepPoint> points = [] {
        const ReferenceInstance& ref = reference_tracking_qubo();
        QaoaConfig base;  // CVaR, exact distribution, bounded quasi-Newton
        return sweep_layers(ref.model, ref.optimum, {1, 2, 3, 4, 5, 6, 7, 8}, 20, base,
                            424242);
    }();
    return points;
}

bool criterion1(std::string& detail) {
    Rng rng(derive_seed(20260809, "acc1"));
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 1 + rng.below(10);
        const QuboModel m = random_sparse(n, rng);
        const IsingModel ising = to_ising(m);
        for (std::uint64_t k = 0; k < (1ull << n); ++k) {
            Bits x(n);
            for (std::size_t i = 0; i < n; ++i) x[i] = (k >> i) & 1;
            const double eq = energy(m, x);
            const double ei = ising_energy(ising, spins_from_bits(x));
            if (std::abs(eq - ei) > 1e-9) {
                detail = "mismatch at model " + std::to_string(rep);
                return false;
            }
        }
    }
    detail = "100 models, exhaustive";
    return true;
}

bool criterion2(std::string& detail) {
    const auto& points = reference_sweep();
    std::ostringstream ss;
    bool ok = true;
    for (const auto& p : points) {
        if (p.layers == 7 && p.accuracy != 1.0) ok = false;
        if (p.layers >= 5 && p.layers <= 8 && p.accuracy < 0.9) ok = false;
        ss << "p" << p.layers << "=" << p.accuracy << " ";
    }
    detail = ss.str();
    return ok;
}

bool criterion3(std::string& detail) {
    const auto& points = reference_sweep();
    const double p1 = points.front().prob_mean;
    const double p7 = points[6].prob_mean;
    detail = "P(opt): p1=" + std::to_string(p1) + " p7=" + std::to_string(p7);
    return p7 - p1 >= 0.1;
}

bool criterion4(std::string& detail) {
    Rng rng(derive_seed(20260809, "acc4"));
    for (int rep = 0; rep < 1000; ++rep) {
        // dyadic energies keep every partial sum exact, so CVaR_1 == mean holds
        // bit-for-bit independent of summation order
        std::vector<std::pair<double, std::uint64_t>> es;
        const int m = 1 + static_cast<int>(rng.below(10));
        double weighted_sum = 0.0;
        std::uint64_t total = 0;
        for (int i = 0; i < m; ++i) {
            const double e = static_cast<double>(static_cast<int>(rng.below(64)) - 32) / 4.0;
            const std::uint64_t c = 1 + rng.below(4);
            es.push_back({e, c});
            weighted_sum += e * static_cast<double>(c);
            total += c;
        }
        if (loss_cvar(es, 1.0) != weighted_sum / static_cast<double>(total)) {
            detail = "CVaR_1 != mean at set " + std::to_string(rep);
            return false;
        }
        double prev = -INFINITY;
        for (const double alpha : {0.05, 0.15, 0.3, 0.5, 0.8, 1.0}) {
            const double v = loss_cvar(es, alpha);
            if (v < prev - 1e-12) {
                detail = "monotonicity violated at set " + std::to_string(rep);
                return false;
            }
            prev = v;
        }
    }
    detail = "1000 sets";
    return true;
}

bool criterion5(std::string& detail) {
    // d0/z0 bias runs in the damped form here; see the decisions ledger:
    // the printed positive exponent rewards arbitrarily displaced fakes and
    // pins every solver to the overflow clip, which voids this comparison
    int wins = 0;
    double worst_excess = 0.0;
    std::ostringstream sizes;
    for (int i = 0; i < 10; ++i) {
        DetectorGeometry geom;
        GeneratorConfig gen;
        gen.n_particles = 8 + i;
        gen.noise_fraction = 0.1;
        gen.seed = derive_seed(20260809, "acc5-event", i);
        QuboBuildConfig build;
        build.exponent_sign = QuboBuildConfig::ExponentSign::Damped;
        const TrackingProblem problem = build_tracking_problem(geom, gen, build);
        const std::size_t n = problem.model.size();
        sizes << n << " ";
        if (n < 200 || n > 800) {
            detail = "instance size " + std::to_string(n) + " outside 200..800";
            return false;
        }

        SaConfig sa_cfg;  // budget-class defaults
        sa_cfg.seed = derive_seed(20260809, "acc5-sa", i);
        const BitSolution sa_sol = anneal(problem.model, sa_cfg);

        SubQuboParams params;  // (N_I, N_E, N_S) = (20, 10, 5), d = 6, QAOA p=7 CVaR
        const SubQuboResult sub =
            solve_subqubo(problem.model, params, derive_seed(20260809, "acc5-sub", i));

        if (sub.best.energy <= sa_sol.energy) ++wins;
        const double excess = (sub.best.energy - sa_sol.energy) / std::abs(sa_sol.energy);
        worst_excess = std::max(worst_excess, excess);
    }
    detail = "wins=" + std::to_string(wins) + "/10, worst excess=" +
             std::to_string(worst_excess) + ", sizes: " + sizes.str();
    return wins >= 8 && worst_excess <= 0.01;
}

bool criterion6(std::string& detail) {
    Rng rng(derive_seed(20260809, "acc6"));
    int hits = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 8 + rng.below(5);  // 8..12
        const QuboModel m = random_sparse(n, rng);
        SubQuboParams params;
        params.pool_size = 8;
        params.extractions = 6;
        params.sample_count = 4;
        params.sub_size = 6;
        params.outer_rounds = 4;
        params.subsolver = SubSolverKind::Exact;
        const SubQuboResult res =
            solve_subqubo(m, params, derive_seed(20260809, "acc6-run", trial));
        if (std::abs(res.best.energy - brute_force(m).best.energy) < 1e-9) ++hits;
    }
    detail = std::to_string(hits) + "/100 optimal";
    return hits >= 95;
}

bool criterion7(std::string& detail) {
    Rng rng(derive_seed(20260809, "acc7"));
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 2 + rng.below(13);
        const QuboModel m = random_sparse(n, rng);
        const Bits base = random_bits(n, rng);
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx.begin(), idx.end());
        const std::size_t d = 1 + rng.below(n);
        std::vector<std::size_t> free(idx.begin(), idx.begin() + d);
        const auto [sub, mapping] = clamp(m, base, free);
        const Bits y = random_bits(d, rng);
        Bits full = base;
        for (std::size_t k = 0; k < d; ++k) full[mapping[k]] = y[k];
        if (std::abs(energy(sub, y) - energy(m, full)) > 1e-9) {
            detail = "mismatch at triple " + std::to_string(rep);
            return false;
        }
    }
    detail = "1000 triples";
    return true;
}

bool criterion8(std::string& detail) {
    std::ostringstream ss;
    // noisy pipeline at multiplicities 20/50/100, damped bias (see ledger)
    for (const int mult : {20, 50, 100}) {
        for (int rep = 0; rep < 5; ++rep) {
            DetectorGeometry geom;
            GeneratorConfig gen;
            gen.n_particles = static_cast<std::size_t>(mult);
            gen.noise_fraction = 0.1;
            gen.seed = derive_seed(20260809, "acc8-event", mult * 100 + rep);
            QuboBuildConfig build;
            build.exponent_sign = QuboBuildConfig::ExponentSign::Damped;
            const TrackingProblem problem = build_tracking_problem(geom, gen, build);

            SubQuboParams params;  // QAOA p=7, CVaR, (20,10,5), d=6
            const SubQuboResult sub = solve_subqubo(
                problem.model, params, derive_seed(20260809, "acc8-sub", mult * 100 + rep));
            const auto tracks = assemble_tracks(problem.hits, problem.triplets, sub.best.bits);
            const TrackingMetrics metrics = score(problem.hits, tracks);
            if (metrics.efficiency < 0.9 || metrics.purity < 0.9) {
                detail = "multiplicity " + std::to_string(mult) + " rep " +
                         std::to_string(rep) + ": eff=" + std::to_string(metrics.efficiency) +
                         " pur=" + std::to_string(metrics.purity);
                return false;
            }
            if (rep == 0)
                ss << "m" << mult << ": eff=" << metrics.efficiency
                   << " pur=" << metrics.purity << " ";
        }
    }

    // clean small events, printed-form bias, exact solver
    for (const std::uint64_t seed : {5ull, 11ull, 23ull}) {
        DetectorGeometry geom;
        geom.layer_radii = {32, 72, 116, 172, 260};
        GeneratorConfig gen;
        gen.n_particles = 2;
        gen.noise_fraction = 0.0;
        gen.inefficiency = 0.0;
        gen.seed = seed;
        const TrackingProblem problem = build_tracking_problem(geom, gen, {});
        if (problem.triplets.empty() || problem.triplets.size() > 20) {
            detail = "clean event seed " + std::to_string(seed) + " has " +
                     std::to_string(problem.triplets.size()) + " triplets";
            return false;
        }
        const auto res = brute_force(problem.model);
        const auto tracks = assemble_tracks(problem.hits, problem.triplets, res.best.bits);
        const TrackingMetrics metrics = score(problem.hits, tracks);
        if (metrics.efficiency != 1.0 || metrics.purity != 1.0) {
            detail = "clean event seed " + std::to_string(seed) + " not perfect";
            return false;
        }
    }
    detail = ss.str() + "clean events exact";
    return true;
}

bool criterion9(std::string& detail) {
    Triplet clean;
    clean.curvature = 0.002;
    clean.delta_theta = 0.0;
    clean.holes = 0;
    if (compatibility_S(clean, clean) != 1.0) {
        detail = "identical kinematics S != 1";
        return false;
    }
    Triplet holey = clean;
    holey.holes = 1;
    if (std::abs(compatibility_S(holey, holey) - 1.0 / 9.0) > 1e-15) {
        detail = "one-hole pair S != 1/9";
        return false;
    }
    QuboBuildConfig cfg;  // AsWritten defaults (0.5, 0.2, 1.0, 0.5)
    Triplet origin;
    if (bias_weight(origin, cfg) != 0.0) {
        detail = "bias(0,0) != 0";
        return false;
    }
    Triplet displaced;
    displaced.d0 = 1.0;
    if (std::abs(bias_weight(displaced, cfg) - 0.5 * (1.0 - std::exp(1.0))) > 1e-9) {
        detail = "AsWritten d0=1 value off";
        return false;
    }
    detail = "S=1, S=1/9, a(0,0)=0, a(1,0)=0.5(1-e)";
    return true;
}

bool criterion10(std::string& detail) {
    // unitarity over random layer applications
    Rng rng(derive_seed(20260809, "acc10"));
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t n = 1 + rng.below(6);
        IsingModel ising;
        ising.n = n;
        ising.h.assign(n, 0.0);
        ising.offset = rng.uniform(-1.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            ising.h[i] = rng.uniform(-2.0, 2.0);
            for (std::size_t j = 0; j < i; ++j)
                if (rng.u01() < 0.5) ising.J[{i, j}] = rng.uniform(-2.0, 2.0);
        }
        Statevector state;
        state.n_qubits = n;
        state.amplitudes.resize(1ull << n);
        double norm = 0.0;
        for (auto& a : state.amplitudes) {
            a = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
            norm += std::norm(a);
        }
        for (auto& a : state.amplitudes) a /= std::sqrt(norm);
        state = rep % 2 == 0 ? apply_cost_layer(std::move(state), ising, rng.uniform(-3.0, 3.0))
                             : apply_mixer_layer(std::move(state), rng.uniform(-3.0, 3.0));
        if (std::abs(state.norm_sq() - 1.0) > 1e-9) {
            detail = "norm drift at application " + std::to_string(rep);
            return false;
        }
    }

    // CLI byte-determinism for fixed seeds
    fs::create_directories(g_scratch);
    const auto at = [&](const std::string& name) { return (g_scratch / name).string(); };
    const std::string common = " --geometry.layers 32,72,116,172,260 --gen.particles 2"
                               " --gen.noise 0 --gen.inefficiency 0 --seed 5";

    if (shell(g_cli + " gen" + common + " -o " + at("a.csv")) != 0 ||
        shell(g_cli + " gen" + common + " -o " + at("b.csv")) != 0) {
        detail = "gen failed";
        return false;
    }
    if (slurp(at("a.csv")) != slurp(at("b.csv"))) {
        detail = "gen outputs differ";
        return false;
    }
    if (shell(g_cli + " build " + at("a.csv") + " -o " + at("a.qubo")) != 0 ||
        shell(g_cli + " build " + at("a.csv") + " -o " + at("b.qubo")) != 0) {
        detail = "build failed";
        return false;
    }
    if (slurp(at("a.qubo")) != slurp(at("b.qubo"))) {
        detail = "build outputs differ";
        return false;
    }
    for (const std::string solver : {"sa", "qaoa", "exact"}) {
        const std::string base = g_cli + " solve " + at("a.qubo") + " --solver " + solver +
                                 " --seed 9 --qaoa.restarts 2 --qaoa.layers 2";
        if (shell(base + " -o " + at(solver + "1.sol")) != 0 ||
            shell(base + " -o " + at(solver + "2.sol")) != 0) {
            detail = "solve " + solver + " failed";
            return false;
        }
        if (slurp(at(solver + "1.sol")) != slurp(at(solver + "2.sol"))) {
            detail = "solve " + solver + " outputs differ";
            return false;
        }
    }
    const std::string eval_cmd = g_cli + " eval --hits " + at("a.csv") + " --qubo " +
                                 at("a.qubo") + " --solution " + at("exact1.sol") + " --seed 5";
    if (shell(eval_cmd + " -o " + at("m1.jsonl") + " --svg " + at("d1.svg")) != 0 ||
        shell(eval_cmd + " -o " + at("m2.jsonl") + " --svg " + at("d2.svg")) != 0) {
        detail = "eval failed";
        return false;
    }
    if (slurp(at("m1.jsonl")) != slurp(at("m2.jsonl")) ||
        slurp(at("d1.svg")) != slurp(at("d2.svg"))) {
        detail = "eval outputs differ";
        return false;
    }
    detail = "1000 layer applications; gen/build/solve(sa,qaoa,exact)/eval byte-identical";
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: acceptance <qtrack-binary> <scratch-dir>\n");
        return 2;
    }
    g_cli = argv[1];
    g_scratch = argv[2];
    fs::remove_all(g_scratch);

    // budgets mirror the stated runtime targets; criteria without one get a
    // generous sanity bound
    constexpr double kNoBudget = 3600.0;
    run_criterion(1, "QUBO-Ising equivalence, 100 models exhaustive", 10.0, criterion1);
    run_criterion(2, "QAOA accuracy 1.0 at p=7 and >=0.9 for p in 5..8 (20 jobs)", 300.0,
                  criterion2);
    run_criterion(3, "optimum probability rises by >=0.1 from p=1 to p=7", 300.0, criterion3);
    run_criterion(4, "CVaR_1 equals the mean; CVaR non-increasing in shrinking alpha",
                  kNoBudget, criterion4);
    run_criterion(5, "sub-QUBO(QAOA, 20/10/5, d=6, p=7) vs single-run SA on 10 tracking QUBOs",
                  1800.0, criterion5);
    run_criterion(6, "exact-subsolver sub-QUBO matches brute force on >=95/100 models", 300.0,
                  criterion6);
    run_criterion(7, "clamped sub-energy equals full re-evaluation, 1000 triples", kNoBudget,
                  criterion7);
    run_criterion(8, "pipeline efficiency/purity >= 0.9 at multiplicities 20/50/100; "
                     "clean events perfect",
                  1800.0, criterion8);
    run_criterion(9, "compatibility and bias unit values", kNoBudget, criterion9);
    run_criterion(10, "layer unitarity and CLI byte-determinism", kNoBudget, criterion10);

    std::printf("\n%s: %d criterion failure(s)\n", g_failures == 0 ? "SUCCESS" : "FAILURE",
                g_failures);
    return g_failures == 0 ? 0 : 1;
}
