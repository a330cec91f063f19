#include "qtrack/event_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "qtrack/rng.hpp"

namespace qtrack {

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

void DetectorGeometry::validate() const {
    if (layer_radii.empty()) throw std::invalid_argument("geometry needs at least one layer");
    double prev = 0.0;
    for (const double r : layer_radii) {
        if (r <= prev) throw std::invalid_argument("layer radii must be positive and ascending");
        prev = r;
    }
    if (z_half_length <= 0.0) throw std::invalid_argument("z_half_length must be positive");
    if (hit_sigma < 0.0) throw std::invalid_argument("hit_sigma must be non-negative");
}

void GeneratorConfig::validate() const {
    if (noise_fraction < 0.0 || noise_fraction >= 1.0)
        throw std::invalid_argument("noise_fraction must be in [0, 1)");
    if (curvature_min > curvature_max)
        throw std::invalid_argument("curvature interval is empty");
    if (theta_min < 0.2 || theta_max > kPi - 0.2 || theta_min > theta_max)
        throw std::invalid_argument("theta range must stay within (0.2, pi - 0.2)");
    if (phi_min > phi_max) throw std::invalid_argument("phi interval is empty");
    if (inefficiency < 0.0 || inefficiency >= 1.0)
        throw std::invalid_argument("inefficiency must be in [0, 1)");
}

std::vector<Hit> generate_event(const DetectorGeometry& geometry, const GeneratorConfig& config,
                                GenerationStats* stats) {
    geometry.validate();
    config.validate();

    Rng rng(config.seed);
    std::vector<Hit> hits;
    std::int64_t next_id = 1;
    GenerationStats local;

    for (std::size_t p = 1; p <= config.n_particles; ++p) {
        const double kappa = rng.uniform(config.curvature_min, config.curvature_max);
        const double phi0 = rng.uniform(config.phi_min, config.phi_max);
        const double theta = rng.uniform(config.theta_min, config.theta_max);
        const double cot = std::cos(theta) / std::sin(theta);

        bool produced = false;
        for (std::size_t layer = 0; layer < geometry.layer_radii.size(); ++layer) {
            const double r = geometry.layer_radii[layer];
            double s;  // transverse arc length at the layer crossing
            if (std::abs(kappa) > 1e-12) {
                const double half = kappa * r / 2.0;
                if (std::abs(half) >= 1.0) break;  // circle never reaches this layer
                s = 2.0 * std::asin(half) / kappa;
            } else {
                s = r;
            }
            const double z = cot * s;
            if (std::abs(z) > geometry.z_half_length) break;

            const double drop = rng.u01();

            double x, y;
            if (std::abs(kappa) > 1e-12) {
                x = (std::sin(phi0 + kappa * s) - std::sin(phi0)) / kappa;
                y = (std::cos(phi0) - std::cos(phi0 + kappa * s)) / kappa;
            } else {
                x = s * std::cos(phi0);
                y = s * std::sin(phi0);
            }
            // smear tangentially to the layer cylinder
            const double g1 = rng.normal();
            const double g2 = rng.normal();
            const double phi_hit = std::atan2(y, x);
            const double hx = x - geometry.hit_sigma * g1 * std::sin(phi_hit);
            const double hy = y + geometry.hit_sigma * g1 * std::cos(phi_hit);
            const double hz = z + geometry.hit_sigma * g2;

            if (drop < config.inefficiency) continue;  // hole: crossed but not recorded
            hits.push_back({next_id++, hx, hy, hz, static_cast<int>(layer),
                            static_cast<std::int64_t>(p)});
            produced = true;
            ++local.true_hits;
        }
        if (!produced) ++local.skipped_particles;
    }

    const double f = config.noise_fraction;
    const auto noise_count = static_cast<std::size_t>(
        std::llround(f / (1.0 - f) * static_cast<double>(local.true_hits)));
    for (std::size_t k = 0; k < noise_count; ++k) {
        const auto layer = static_cast<std::size_t>(rng.below(geometry.layer_radii.size()));
        const double r = geometry.layer_radii[layer];
        const double phi = rng.uniform(-kPi, kPi);
        const double z = rng.uniform(-geometry.z_half_length, geometry.z_half_length);
        hits.push_back({next_id++, r * std::cos(phi), r * std::sin(phi), z,
                        static_cast<int>(layer), 0});
        ++local.noise_hits;
    }

    if (stats) *stats = local;
    return hits;
}

namespace {

double parse_csv_double(const std::string& tok, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError(line, "expected a number, got '" + tok + "'");
    return v;
}

std::int64_t parse_csv_int(const std::string& tok, std::size_t line) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError(line, "expected an integer, got '" + tok + "'");
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::vector<Hit> read_hits_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError(1, "missing header");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "hit_id,x,y,z,layer,particle_id")
        throw ParseError(1, "unexpected header '" + line + "'");

    std::vector<Hit> hits;
    std::set<std::int64_t> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 6) throw ParseError(lineno, "expected 6 columns");
        Hit h;
        h.id = parse_csv_int(cells[0], lineno);
        h.x = parse_csv_double(cells[1], lineno);
        h.y = parse_csv_double(cells[2], lineno);
        h.z = parse_csv_double(cells[3], lineno);
        h.layer = static_cast<int>(parse_csv_int(cells[4], lineno));
        h.truth_particle = parse_csv_int(cells[5], lineno);
        if (!seen.insert(h.id).second)
            throw ParseError(lineno, "duplicate hit_id " + std::to_string(h.id));
        hits.push_back(h);
    }
    return hits;
}

std::vector<Hit> load_hits_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return read_hits_csv(in);
}

void write_hits_csv(const std::vector<Hit>& hits, std::ostream& out) {
    out << "hit_id,x,y,z,layer,particle_id\n";
    for (const Hit& h : hits) {
        out << h.id << "," << format_g17(h.x) << "," << format_g17(h.y) << ","
            << format_g17(h.z) << "," << h.layer << "," << h.truth_particle << "\n";
    }
}

void write_hits_csv(const std::vector<Hit>& hits, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_hits_csv(hits, out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

const char* kPalette[] = {"#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00",
                          "#a65628", "#f781bf", "#1b9e77", "#d95f02", "#7570b3",
                          "#66a61e", "#e7298a"};

std::string color_of(std::int64_t particle) {
    if (particle == 0) return "#999999";
    return kPalette[static_cast<std::size_t>(particle) % (sizeof(kPalette) / sizeof(char*))];
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

void write_event_svg(const std::vector<Hit>& hits, const std::vector<TrackCandidate>& tracks,
                     const DetectorGeometry& geometry, std::ostream& out,
                     Projection projection) {
    geometry.validate();
    const double r_max = geometry.layer_radii.back() * 1.08;
    const bool xy = projection == Projection::TransverseXY;
    const double width = xy ? 2.0 * r_max : 2.0 * geometry.z_half_length * 1.08;
    const double height = xy ? 2.0 * r_max : r_max;

    auto px = [&](const Hit& h) {
        return xy ? h.x + r_max : h.z + geometry.z_half_length * 1.08;
    };
    auto py = [&](const Hit& h) {
        return xy ? r_max - h.y : height - transverse_radius(h);
    };

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << fmt2(width) << " "
        << fmt2(height) << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (const double r : geometry.layer_radii) {
        if (xy) {
            out << "<circle cx=\"" << fmt2(r_max) << "\" cy=\"" << fmt2(r_max) << "\" r=\""
                << fmt2(r) << "\" fill=\"none\" stroke=\"#dddddd\"/>\n";
        } else {
            out << "<line x1=\"0\" y1=\"" << fmt2(height - r) << "\" x2=\"" << fmt2(width)
                << "\" y2=\"" << fmt2(height - r) << "\" stroke=\"#dddddd\"/>\n";
        }
    }

    for (const auto& track : tracks) {
        out << "<polyline fill=\"none\" stroke=\"#222222\" stroke-width=\"2\" points=\"";
        bool first = true;
        for (const int k : track) {
            if (!first) out << " ";
            out << fmt2(px(hits[k])) << "," << fmt2(py(hits[k]));
            first = false;
        }
        out << "\"/>\n";
    }

    for (const Hit& h : hits) {
        out << "<circle cx=\"" << fmt2(px(h)) << "\" cy=\"" << fmt2(py(h))
            << "\" r=\"3\" fill=\"" << color_of(h.truth_particle) << "\"/>\n";
    }
    out << "</svg>\n";
}

void write_event_svg(const std::vector<Hit>& hits, const std::vector<TrackCandidate>& tracks,
                     const DetectorGeometry& geometry, const std::string& path,
                     Projection projection) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_event_svg(hits, tracks, geometry, out, projection);
    if (!out) throw std::runtime_error("write failed: " + path);
}

nlohmann::json MetricsRecord::to_json() const {
    nlohmann::json j;
    j["schema"] = 1;
    j["run_id"] = run_id;
    j["solver"] = solver;
    if (multiplicity) j["multiplicity"] = *multiplicity;
    if (layers) j["layers"] = *layers;
    if (loss) j["loss"] = *loss;
    if (pool_size) j["ni"] = *pool_size;
    if (extractions) j["ne"] = *extractions;
    if (sample_count) j["ns"] = *sample_count;
    if (energy) j["energy"] = *energy;
    if (efficiency) j["efficiency"] = *efficiency;
    if (purity) j["purity"] = *purity;
    if (prob_mean) j["prob_mean"] = *prob_mean;
    if (accuracy) j["accuracy"] = *accuracy;
    if (accuracy_err) j["accuracy_err"] = *accuracy_err;
    if (jobs) j["jobs"] = *jobs;
    if (wall_time_s) j["wall_time_s"] = *wall_time_s;
    return j;
}

void write_metrics(const std::vector<MetricsRecord>& records, std::ostream& out) {
    for (const auto& r : records) out << r.to_json().dump() << "\n";
}

void write_metrics(const std::vector<MetricsRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_metrics(records, out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace qtrack
