#include "qtrack/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace qtrack {

namespace {

const std::map<std::string, std::string>& registry() {
    static const std::map<std::string, std::string> defaults = {
        {"seed", "1"},
        {"jobs", "1"},
        {"geometry.layers", "32,72,116,172,260,360,500,660,820,1020"},
        {"geometry.z_half", "1000"},
        {"geometry.hit_sigma", "0.1"},
        {"gen.particles", "10"},
        {"gen.noise", "0.1"},
        {"gen.curvature", "0.001"},
        {"gen.theta_min", "0.5"},
        {"gen.theta_max", "2.6415926535897931"},
        {"gen.inefficiency", "0.02"},
        {"build.phi_window", "0.2"},
        {"build.slope_window", "2.0"},
        {"build.max_gap", "2"},
        {"build.theta_window", "0.1"},
        {"build.max_curvature", "0.005"},
        {"build.alpha", "0.5"},
        {"build.beta", "0.2"},
        {"build.gamma", "1.0"},
        {"build.lambda", "0.5"},
        {"build.conflict_penalty", "1.0"},
        {"build.exponent_sign", "aswritten"},
        {"qaoa.layers", "7"},
        {"qaoa.mode", "exact"},
        {"qaoa.shots", "1024"},
        {"qaoa.loss", "cvar"},
        {"qaoa.cvar_alpha", "0.25"},
        {"qaoa.gibbs_eta", "1.0"},
        {"qaoa.optimizer", "qn"},
        {"qaoa.restarts", "5"},
        {"sa.sweeps", "0"},
        {"sa.t_start", "0"},
        {"sa.t_end", "0.01"},
        {"sa.restarts", "1"},
        {"subqubo.ni", "20"},
        {"subqubo.ne", "10"},
        {"subqubo.ns", "5"},
        {"subqubo.d", "6"},
        {"subqubo.rounds", "5"},
        {"subqubo.subsolver", "qaoa"},
        {"sweep.max_layers", "8"},
        {"sweep.jobs", "20"},
        {"sweep.multiplicities", "20,50,100"},
        {"sweep.seeds", "1"},
    };
    return defaults;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

RunConfig::RunConfig() : values_(registry()) {}

void RunConfig::load_stream(std::istream& in, const std::string& origin) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ParseError(lineno, origin + ": expected 'key = value'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        try {
            set(key, value);
        } catch (const std::invalid_argument& e) {
            throw ParseError(lineno, origin + ": " + e.what());
        }
    }
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    load_stream(in, path);
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::invalid_argument("unknown config key '" + key + "'");
    it->second = value;
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string& RunConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::invalid_argument("unknown config key '" + key + "'");
    return it->second;
}

double RunConfig::get_double(const std::string& key) const {
    const std::string& v = get(key);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw std::invalid_argument("config key '" + key + "' is not a number: '" + v + "'");
    return out;
}

std::int64_t RunConfig::get_int(const std::string& key) const {
    const std::string& v = get(key);
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw std::invalid_argument("config key '" + key + "' is not an integer: '" + v + "'");
    return out;
}

std::uint64_t RunConfig::get_uint(const std::string& key) const {
    const std::string& v = get(key);
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw std::invalid_argument("config key '" + key + "' is not an unsigned integer: '" +
                                    v + "'");
    return out;
}

std::vector<double> RunConfig::get_list(const std::string& key) const {
    const std::string& v = get(key);
    std::vector<double> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        double d = 0.0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
        if (ec != std::errc() || ptr != tok.data() + tok.size())
            throw std::invalid_argument("config key '" + key + "' has a bad list entry: '" +
                                        tok + "'");
        out.push_back(d);
    }
    if (out.empty())
        throw std::invalid_argument("config key '" + key + "' must list at least one value");
    return out;
}

void RunConfig::write(std::ostream& out) const {
    for (const auto& [key, value] : values_) out << key << " = " << value << "\n";
}

void RunConfig::write_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write(out);
}

DetectorGeometry RunConfig::geometry() const {
    DetectorGeometry g;
    g.layer_radii = get_list("geometry.layers");
    g.z_half_length = get_double("geometry.z_half");
    g.hit_sigma = get_double("geometry.hit_sigma");
    g.validate();
    return g;
}

GeneratorConfig RunConfig::generator() const {
    GeneratorConfig g;
    g.n_particles = static_cast<std::size_t>(get_int("gen.particles"));
    g.noise_fraction = get_double("gen.noise");
    const double c = get_double("gen.curvature");
    g.curvature_min = -c;
    g.curvature_max = c;
    g.theta_min = get_double("gen.theta_min");
    g.theta_max = get_double("gen.theta_max");
    g.inefficiency = get_double("gen.inefficiency");
    g.seed = seed();
    g.validate();
    return g;
}

QuboBuildConfig RunConfig::qubo_build() const {
    QuboBuildConfig b;
    b.phi_window = get_double("build.phi_window");
    b.slope_window = get_double("build.slope_window");
    b.max_layer_gap = static_cast<int>(get_int("build.max_gap"));
    b.theta_window = get_double("build.theta_window");
    b.max_curvature = get_double("build.max_curvature");
    b.alpha = get_double("build.alpha");
    b.beta = get_double("build.beta");
    b.gamma = get_double("build.gamma");
    b.lambda = get_double("build.lambda");
    b.conflict_penalty = get_double("build.conflict_penalty");
    const std::string& sign = get("build.exponent_sign");
    if (sign == "aswritten")
        b.exponent_sign = QuboBuildConfig::ExponentSign::AsWritten;
    else if (sign == "damped")
        b.exponent_sign = QuboBuildConfig::ExponentSign::Damped;
    else
        throw std::invalid_argument("build.exponent_sign must be 'aswritten' or 'damped'");
    b.validate();
    return b;
}

QaoaConfig RunConfig::qaoa() const {
    QaoaConfig q;
    q.layers = static_cast<std::size_t>(get_int("qaoa.layers"));
    const std::string& mode = get("qaoa.mode");
    if (mode == "exact")
        q.mode = SampleMode::Exact;
    else if (mode == "shots")
        q.mode = SampleMode::Shots;
    else
        throw std::invalid_argument("qaoa.mode must be 'exact' or 'shots'");
    q.shots = get_uint("qaoa.shots");
    const std::string& loss = get("qaoa.loss");
    if (loss == "cvar")
        q.loss = LossKind::CVaR;
    else if (loss == "gibbs")
        q.loss = LossKind::Gibbs;
    else
        throw std::invalid_argument("qaoa.loss must be 'cvar' or 'gibbs'");
    q.cvar_alpha = get_double("qaoa.cvar_alpha");
    q.gibbs_eta = get_double("qaoa.gibbs_eta");
    const std::string& opt = get("qaoa.optimizer");
    if (opt == "qn")
        q.optimizer = OptimMethod::QuasiNewtonBounded;
    else if (opt == "simplex")
        q.optimizer = OptimMethod::SimplexFallback;
    else
        throw std::invalid_argument("qaoa.optimizer must be 'qn' or 'simplex'");
    q.restarts = static_cast<std::size_t>(get_int("qaoa.restarts"));
    q.seed = seed();
    q.validate();
    return q;
}

SaConfig RunConfig::sa() const {
    SaConfig s;
    s.sweeps = static_cast<std::size_t>(get_int("sa.sweeps"));
    s.t_start = get_double("sa.t_start");
    s.t_end = get_double("sa.t_end");
    s.restarts = static_cast<std::size_t>(get_int("sa.restarts"));
    s.seed = seed();
    s.validate();
    return s;
}

SubQuboParams RunConfig::subqubo() const {
    SubQuboParams p;
    p.pool_size = static_cast<std::size_t>(get_int("subqubo.ni"));
    p.extractions = static_cast<std::size_t>(get_int("subqubo.ne"));
    p.sample_count = static_cast<std::size_t>(get_int("subqubo.ns"));
    p.sub_size = static_cast<std::size_t>(get_int("subqubo.d"));
    p.outer_rounds = static_cast<std::size_t>(get_int("subqubo.rounds"));
    const std::string& solver = get("subqubo.subsolver");
    if (solver == "qaoa")
        p.subsolver = SubSolverKind::Qaoa;
    else if (solver == "anneal")
        p.subsolver = SubSolverKind::Anneal;
    else if (solver == "exact")
        p.subsolver = SubSolverKind::Exact;
    else
        throw std::invalid_argument("subqubo.subsolver must be 'qaoa', 'anneal' or 'exact'");
    p.qaoa = qaoa();
    p.sub_sa = sa();
    p.pool_sa = sa();
    p.validate();
    return p;
}

}  // namespace qtrack
