#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <set>
#include <sstream>

#include "qtrack/experiments.hpp"
#include "qtrack/run_config.hpp"

namespace {

using namespace qtrack;

constexpr int kExitSolverError = 1;
constexpr int kExitUsageError = 2;

// temp-then-rename so partially written outputs never land under the final name
void write_atomic(const std::string& path, const std::function<void(std::ostream&)>& writer) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
        writer(out);
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

void emit_resolved_config(const RunConfig& cfg, const std::string& primary_output) {
    write_atomic(primary_output + ".config", [&](std::ostream& out) { cfg.write(out); });
}

struct CommonArgs {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;  // parse order
    std::string seed_override;
    std::string jobs_override;
};

// config file first, then --<key> overrides, then the short-hand flags
RunConfig resolve_config(const CommonArgs& args) {
    RunConfig cfg;
    if (!args.config_path.empty()) cfg.load_file(args.config_path);
    for (const auto& [key, value] : args.overrides) cfg.set(key, value);
    if (!args.seed_override.empty()) cfg.set("seed", args.seed_override);
    if (!args.jobs_override.empty()) cfg.set("jobs", args.jobs_override);
    return cfg;
}

void add_common_options(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "key = value configuration file");
    cmd->add_option("--seed", args.seed_override, "master seed (overrides config)");
    cmd->add_option("--jobs", args.jobs_override, "parallel worker limit for sweeps");
    static const RunConfig defaults;
    for (const auto& [key, value] : defaults.entries()) {
        if (key == "seed" || key == "jobs") continue;
        cmd->add_option_function<std::string>(
               "--" + key,
               [&args, k = key](const std::string& v) { args.overrides.emplace_back(k, v); },
               "config override (default: " + value + ")")
            ->type_name("VALUE");
    }
}

std::size_t count_particles(const std::vector<Hit>& hits) {
    std::set<std::int64_t> ids;
    for (const Hit& h : hits)
        if (h.truth_particle != 0) ids.insert(h.truth_particle);
    return ids.size();
}

// ---------------------------------------------------------------- commands

int cmd_gen(const RunConfig& cfg, const std::string& out_path) {
    GenerationStats stats;
    const auto hits = generate_event(cfg.geometry(), cfg.generator(), &stats);
    write_atomic(out_path, [&](std::ostream& out) { write_hits_csv(hits, out); });
    emit_resolved_config(cfg, out_path);
    std::printf("wrote %zu hits (%zu true, %zu noise, %zu skipped particles) to %s\n",
                hits.size(), stats.true_hits, stats.noise_hits, stats.skipped_particles,
                out_path.c_str());
    return 0;
}

int cmd_build(const RunConfig& cfg, const std::string& hits_path, const std::string& out_path) {
    const auto hits = load_hits_csv(hits_path);
    const QuboBuildConfig build = cfg.qubo_build();
    const auto doublets = build_doublets(hits, build);
    const auto triplets = build_triplets(hits, doublets, build);
    const QuboModel model = build_qubo(hits, triplets, build);

    write_atomic(out_path, [&](std::ostream& out) {
        save_qubo(model, out);
        save_triplet_map(hits, triplets, out);
    });
    emit_resolved_config(cfg, out_path);

    const std::size_t n = model.size();
    const double pair_fraction =
        n > 1 ? static_cast<double>(model.quadratic_terms().size()) /
                    (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0)
              : 0.0;
    std::printf("hits=%zu doublets=%zu triplets=%zu quadratic_terms=%zu pair_fraction=%.6f\n",
                hits.size(), doublets.size(), n, model.quadratic_terms().size(), pair_fraction);
    return 0;
}

BitSolution solve_dispatch(const RunConfig& cfg, const QuboModel& model,
                           const std::string& solver, const std::string& diag_path) {
    if (model.size() == 0) return {Bits{}, model.offset()};
    if (solver == "exact") {
        return brute_force(model).best;
    }
    if (solver == "sa") {
        return anneal_best(model, cfg.sa());
    }
    if (solver == "qaoa") {
        QaoaConfig qcfg = cfg.qaoa();
        const QaoaOutcome out = run_qaoa(to_ising(model), qcfg);
        return {out.modal_bits, energy(model, out.modal_bits)};
    }
    if (solver == "subqubo") {
        SubQuboParams params = cfg.subqubo();
        if (params.sub_size > model.size()) params.sub_size = model.size();
        if (params.subsolver == SubSolverKind::Qaoa && params.sub_size > kMaxQubits)
            throw CapacityError("sub-QUBO size exceeds the simulator capacity");
        const SubQuboResult res = solve_subqubo(model, params, cfg.seed());
        if (!diag_path.empty())
            write_atomic(diag_path,
                         [&](std::ostream& out) { write_diagnostics(res.diagnostics, out); });
        return res.best;
    }
    throw std::invalid_argument("unknown solver '" + solver + "'");
}

int cmd_solve(const RunConfig& cfg, const std::string& qubo_path, const std::string& solver,
              const std::string& out_path, std::string diag_path) {
    const QuboModel model = load_qubo(qubo_path);
    if (solver == "subqubo" && diag_path.empty()) diag_path = out_path + ".diag.jsonl";
    const BitSolution sol = solve_dispatch(cfg, model, solver, diag_path);
    write_atomic(out_path, [&](std::ostream& out) {
        out << "n " << sol.bits.size() << "\n";
        if (!sol.bits.empty()) out << "bits " << bits_to_string(sol.bits) << "\n";
        out << "energy " << format_g17(sol.energy) << "\n";
        out << "solver " << solver << "\n";
    });
    emit_resolved_config(cfg, out_path);
    std::printf("solver=%s n=%zu energy=%s\n", solver.c_str(), sol.bits.size(),
                format_g17(sol.energy).c_str());
    return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& hits_path, const std::string& qubo_path,
             const std::string& solution_path, const std::string& out_path,
             const std::string& svg_path, const std::string& projection) {
    const auto hits = load_hits_csv(hits_path);
    const auto map = load_triplet_map_file(qubo_path);
    const BitSolution sol = load_solution(solution_path);
    if (sol.bits.size() != map.size())
        throw std::invalid_argument("solution has " + std::to_string(sol.bits.size()) +
                                    " bits but the mapping lists " + std::to_string(map.size()) +
                                    " triplets");
    const auto tracks = assemble_tracks_from_ids(hits, map, sol.bits);
    const TrackingMetrics metrics = score(hits, tracks);

    MetricsRecord rec;
    rec.run_id = "eval-s" + std::to_string(cfg.seed());
    std::string tag = load_solution_solver_tag(solution_path);
    rec.solver = tag.empty() ? "unknown" : tag;
    rec.multiplicity = static_cast<int>(count_particles(hits));
    rec.energy = sol.energy;
    rec.efficiency = metrics.efficiency;
    rec.purity = metrics.purity;
    write_atomic(out_path, [&](std::ostream& out) { write_metrics({rec}, out); });
    emit_resolved_config(cfg, out_path);

    if (!svg_path.empty()) {
        const Projection proj =
            projection == "rz" ? Projection::LongitudinalRZ : Projection::TransverseXY;
        write_atomic(svg_path, [&](std::ostream& out) {
            write_event_svg(hits, tracks, cfg.geometry(), out, proj);
        });
    }
    std::printf("tracks=%zu tp=%zu fp=%zu fn=%zu efficiency=%.4f purity=%.4f\n", tracks.size(),
                metrics.tp, metrics.fp, metrics.fn, metrics.efficiency, metrics.purity);
    return 0;
}

int cmd_display(const RunConfig& cfg, const std::string& hits_path, const std::string& out_path,
                const std::string& projection, const std::string& qubo_path,
                const std::string& solution_path) {
    const auto hits = load_hits_csv(hits_path);
    std::vector<TrackCandidate> tracks;
    if (!qubo_path.empty() && !solution_path.empty()) {
        const auto map = load_triplet_map_file(qubo_path);
        const BitSolution sol = load_solution(solution_path);
        if (sol.bits.size() != map.size())
            throw std::invalid_argument("solution length does not match the triplet mapping");
        tracks = assemble_tracks_from_ids(hits, map, sol.bits);
    }
    const Projection proj =
        projection == "rz" ? Projection::LongitudinalRZ : Projection::TransverseXY;
    write_atomic(out_path, [&](std::ostream& out) {
        write_event_svg(hits, tracks, cfg.geometry(), out, proj);
    });
    emit_resolved_config(cfg, out_path);
    std::printf("wrote %s (%zu hits, %zu tracks)\n", out_path.c_str(), hits.size(),
                tracks.size());
    return 0;
}

int cmd_sweep_layers(const RunConfig& cfg, const std::string& out_path,
                     const std::string& qubo_path) {
    QuboModel model;
    Bits optimum;
    if (!qubo_path.empty()) {
        model = load_qubo(qubo_path);
        if (model.size() > kMaxQubits)
            throw CapacityError("layer sweep requires a model within simulator capacity");
        optimum = brute_force(model).best.bits;
    } else {
        const ReferenceInstance& ref = reference_tracking_qubo();
        model = ref.model;
        optimum = ref.optimum;
    }

    const auto max_layers = static_cast<std::size_t>(cfg.get_int("sweep.max_layers"));
    const auto jobs_per_point = static_cast<std::size_t>(cfg.get_int("sweep.jobs"));
    std::vector<std::size_t> layer_counts;
    for (std::size_t p = 1; p <= max_layers; ++p) layer_counts.push_back(p);

    const auto points =
        sweep_layers(model, optimum, layer_counts, jobs_per_point, cfg.qaoa(), cfg.seed());

    std::vector<MetricsRecord> records;
    for (const auto& point : points) {
        MetricsRecord rec;
        rec.run_id = "sweep-layers-s" + std::to_string(cfg.seed());
        rec.solver = "qaoa";
        rec.layers = static_cast<int>(point.layers);
        rec.loss = cfg.get("qaoa.loss");
        rec.jobs = static_cast<int>(point.jobs);
        rec.prob_mean = point.prob_mean;
        rec.accuracy = point.accuracy;
        rec.accuracy_err = point.accuracy_err;
        records.push_back(rec);
        std::printf("p=%zu prob_mean=%.4f accuracy=%.4f +- %.4f\n", point.layers,
                    point.prob_mean, point.accuracy, point.accuracy_err);
    }
    write_atomic(out_path, [&](std::ostream& out) { write_metrics(records, out); });
    emit_resolved_config(cfg, out_path);
    return 0;
}

int cmd_sweep_multiplicity(const RunConfig& cfg, const std::string& out_path) {
    const auto multiplicities = cfg.get_list("sweep.multiplicities");
    const auto seeds_per_point = static_cast<std::size_t>(cfg.get_int("sweep.seeds"));
    const auto worker_limit = std::max<std::size_t>(1, cfg.get_uint("jobs"));

    struct Point {
        int multiplicity;
        std::size_t rep;
        std::uint64_t event_seed;
    };
    std::vector<Point> points;
    for (const double m : multiplicities)
        for (std::size_t rep = 0; rep < seeds_per_point; ++rep)
            points.push_back({static_cast<int>(m), rep,
                              derive_seed(cfg.seed(), "sweep-mult",
                                          static_cast<std::uint64_t>(m) * 1000003ull + rep)});

    const DetectorGeometry geometry = cfg.geometry();
    const QuboBuildConfig build = cfg.qubo_build();

    auto run_point = [&](const Point& point) -> std::vector<MetricsRecord> {
        GeneratorConfig gen = cfg.generator();
        gen.n_particles = static_cast<std::size_t>(point.multiplicity);
        gen.seed = point.event_seed;
        const TrackingProblem problem = build_tracking_problem(geometry, gen, build);

        const std::string run_id = "sweep-mult-s" + std::to_string(cfg.seed()) + "-m" +
                                   std::to_string(point.multiplicity) + "-r" +
                                   std::to_string(point.rep);
        std::vector<MetricsRecord> out;

        SubQuboParams params = cfg.subqubo();
        if (params.sub_size > problem.model.size())
            params.sub_size = std::max<std::size_t>(1, problem.model.size());
        const auto t0 = std::chrono::steady_clock::now();
        const SubQuboResult sub =
            solve_subqubo(problem.model, params, derive_seed(point.event_seed, "subqubo"));
        const auto t1 = std::chrono::steady_clock::now();
        write_atomic(out_path + ".m" + std::to_string(point.multiplicity) + "r" +
                         std::to_string(point.rep) + ".diag.jsonl",
                     [&](std::ostream& out) { write_diagnostics(sub.diagnostics, out); });
        {
            const auto tracks = assemble_tracks(problem.hits, problem.triplets, sub.best.bits);
            const TrackingMetrics metrics = score(problem.hits, tracks);
            MetricsRecord rec;
            rec.run_id = run_id;
            rec.solver = "subqubo";
            rec.multiplicity = point.multiplicity;
            rec.pool_size = static_cast<int>(params.pool_size);
            rec.extractions = static_cast<int>(params.extractions);
            rec.sample_count = static_cast<int>(params.sample_count);
            rec.energy = sub.best.energy;
            rec.efficiency = metrics.efficiency;
            rec.purity = metrics.purity;
            rec.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
            out.push_back(rec);
        }

        SaConfig sa_cfg = cfg.sa();
        sa_cfg.seed = derive_seed(point.event_seed, "sa-baseline");
        const auto t2 = std::chrono::steady_clock::now();
        const BitSolution sa_sol = anneal(problem.model, sa_cfg);
        const auto t3 = std::chrono::steady_clock::now();
        {
            const auto tracks = assemble_tracks(problem.hits, problem.triplets, sa_sol.bits);
            const TrackingMetrics metrics = score(problem.hits, tracks);
            MetricsRecord rec;
            rec.run_id = run_id;
            rec.solver = "sa";
            rec.multiplicity = point.multiplicity;
            rec.energy = sa_sol.energy;
            rec.efficiency = metrics.efficiency;
            rec.purity = metrics.purity;
            rec.wall_time_s = std::chrono::duration<double>(t3 - t2).count();
            out.push_back(rec);
        }
        return out;
    };

    std::vector<std::vector<MetricsRecord>> results(points.size());
    std::size_t next = 0;
    while (next < points.size()) {
        const std::size_t batch = std::min(worker_limit, points.size() - next);
        std::vector<std::future<std::vector<MetricsRecord>>> futures;
        for (std::size_t k = 0; k < batch; ++k)
            futures.push_back(std::async(std::launch::async, run_point, points[next + k]));
        for (std::size_t k = 0; k < batch; ++k) results[next + k] = futures[k].get();
        next += batch;
    }

    std::vector<MetricsRecord> records;
    for (const auto& group : results)
        records.insert(records.end(), group.begin(), group.end());
    write_atomic(out_path, [&](std::ostream& out) { write_metrics(records, out); });
    emit_resolved_config(cfg, out_path);
    for (const auto& rec : records)
        std::printf("m=%d solver=%s energy=%.4f efficiency=%.4f purity=%.4f\n",
                    rec.multiplicity.value_or(0), rec.solver.c_str(), rec.energy.value_or(0.0),
                    rec.efficiency.value_or(0.0), rec.purity.value_or(0.0));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"QUBO-based track reconstruction with a QAOA statevector solver"};
    app.require_subcommand(1);

    CommonArgs gen_args, build_args, solve_args, eval_args, display_args, swl_args, swm_args;

    auto* gen = app.add_subcommand("gen", "generate a synthetic barrel event as CSV");
    std::string gen_out = "event.csv";
    std::string gen_particles, gen_noise;
    add_common_options(gen, gen_args);
    gen->add_option("-o,--out", gen_out, "output CSV path");
    gen->add_option("--particles", gen_particles, "shorthand for --gen.particles");
    gen->add_option("--noise", gen_noise, "shorthand for --gen.noise");

    auto* build = app.add_subcommand("build", "build the triplet QUBO from a hits CSV");
    std::string build_hits, build_out = "event.qubo";
    add_common_options(build, build_args);
    build->add_option("hits", build_hits, "input hits CSV")->required();
    build->add_option("-o,--out", build_out, "output QUBO (+ triplet map) path");

    auto* solve = app.add_subcommand("solve", "solve a QUBO file");
    std::string solve_qubo, solve_solver = "subqubo", solve_out = "solution.txt", solve_diag;
    add_common_options(solve, solve_args);
    solve->add_option("qubo", solve_qubo, "input QUBO file")->required();
    solve->add_option("--solver", solve_solver, "exact | sa | qaoa | subqubo")
        ->check(CLI::IsMember({"exact", "sa", "qaoa", "subqubo"}));
    solve->add_option("-o,--out", solve_out, "output solution path");
    solve->add_option("--diag", solve_diag, "diagnostics JSONL path (subqubo)");

    auto* eval = app.add_subcommand("eval", "score a solution against truth labels");
    std::string eval_hits, eval_qubo, eval_solution, eval_out = "metrics.jsonl";
    std::string eval_svg, eval_projection = "xy";
    add_common_options(eval, eval_args);
    eval->add_option("--hits", eval_hits, "hits CSV")->required();
    eval->add_option("--qubo", eval_qubo, "QUBO file carrying the triplet map")->required();
    eval->add_option("--solution", eval_solution, "solution file")->required();
    eval->add_option("-o,--out", eval_out, "metrics JSONL path");
    eval->add_option("--svg", eval_svg, "optional event display output");
    eval->add_option("--projection", eval_projection, "xy | rz")
        ->check(CLI::IsMember({"xy", "rz"}));

    auto* display = app.add_subcommand("display", "render an event display SVG");
    std::string disp_hits, disp_out = "event.svg", disp_projection = "xy";
    std::string disp_qubo, disp_solution;
    add_common_options(display, display_args);
    display->add_option("hits", disp_hits, "hits CSV")->required();
    display->add_option("-o,--out", disp_out, "output SVG path");
    display->add_option("--projection", disp_projection, "xy | rz")
        ->check(CLI::IsMember({"xy", "rz"}));
    display->add_option("--qubo", disp_qubo, "QUBO file (with --solution, draws tracks)");
    display->add_option("--solution", disp_solution, "solution file");

    auto* swl = app.add_subcommand("sweep-layers",
                                   "QAOA probability/accuracy against the layer count");
    std::string swl_out = "sweep_layers.jsonl", swl_qubo;
    add_common_options(swl, swl_args);
    swl->add_option("-o,--out", swl_out, "metrics JSONL path");
    swl->add_option("--qubo", swl_qubo, "QUBO to sweep (default: built-in 6-variable instance)");

    auto* swm = app.add_subcommand("sweep-multiplicity",
                                   "end-to-end pipeline across event multiplicities");
    std::string swm_out = "sweep_multiplicity.jsonl";
    add_common_options(swm, swm_args);
    swm->add_option("-o,--out", swm_out, "metrics JSONL path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsageError;
    }

    try {
        if (gen->parsed()) {
            if (!gen_particles.empty()) gen_args.overrides.emplace_back("gen.particles", gen_particles);
            if (!gen_noise.empty()) gen_args.overrides.emplace_back("gen.noise", gen_noise);
            return cmd_gen(resolve_config(gen_args), gen_out);
        }
        if (build->parsed()) return cmd_build(resolve_config(build_args), build_hits, build_out);
        if (solve->parsed())
            return cmd_solve(resolve_config(solve_args), solve_qubo, solve_solver, solve_out,
                             solve_diag);
        if (eval->parsed())
            return cmd_eval(resolve_config(eval_args), eval_hits, eval_qubo, eval_solution,
                            eval_out, eval_svg, eval_projection);
        if (display->parsed())
            return cmd_display(resolve_config(display_args), disp_hits, disp_out,
                               disp_projection, disp_qubo, disp_solution);
        if (swl->parsed()) return cmd_sweep_layers(resolve_config(swl_args), swl_out, swl_qubo);
        if (swm->parsed()) return cmd_sweep_multiplicity(resolve_config(swm_args), swm_out);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsageError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolverError;
    }
    return kExitUsageError;
}
