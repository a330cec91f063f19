#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtrack/tracking.hpp"

namespace qtrack {

struct DetectorGeometry {
    std::vector<double> layer_radii = {32.0,  72.0,  116.0, 172.0, 260.0,
                                       360.0, 500.0, 660.0, 820.0, 1020.0};  // mm
    double z_half_length = 1000.0;
    double hit_sigma = 0.1;  // tangential smearing, mm

    void validate() const;
};

struct GeneratorConfig {
    std::size_t n_particles = 10;
    double noise_fraction = 0.1;        // noise hits = f/(1-f) * true hits
    double curvature_min = -0.001;      // signed 1/mm
    double curvature_max = 0.001;
    double theta_min = 0.5;             // polar angle window, must stay in (0.2, pi-0.2)
    double theta_max = 2.6415926535897931;
    double phi_min = -3.14159265358979323846;
    double phi_max = 3.14159265358979323846;
    double inefficiency = 0.02;         // per-layer hit drop probability
    std::uint64_t seed = 0;

    void validate() const;
};

struct GenerationStats {
    std::size_t skipped_particles = 0;  // produced no hit on any layer
    std::size_t true_hits = 0;
    std::size_t noise_hits = 0;
};

// Helical tracks from the origin (circle in the transverse plane, z linear in
// arc length), one smeared hit per crossed layer, plus uniform per-layer
// noise. Deterministic for a fixed seed.
std::vector<Hit> generate_event(const DetectorGeometry& geometry, const GeneratorConfig& config,
                                GenerationStats* stats = nullptr);

// CSV schema: `hit_id,x,y,z,layer,particle_id`, LF newlines, 17 significant
// digits on coordinates so a write/load round trip is value-exact.
std::vector<Hit> load_hits_csv(const std::string& path);
void write_hits_csv(const std::vector<Hit>& hits, const std::string& path);
std::vector<Hit> read_hits_csv(std::istream& in);
void write_hits_csv(const std::vector<Hit>& hits, std::ostream& out);

enum class Projection { TransverseXY, LongitudinalRZ };

// SVG event display: layer outlines, hits (noise gray, truth colored per
// particle), reconstructed tracks as polylines.
void write_event_svg(const std::vector<Hit>& hits, const std::vector<TrackCandidate>& tracks,
                     const DetectorGeometry& geometry, const std::string& path,
                     Projection projection);
void write_event_svg(const std::vector<Hit>& hits, const std::vector<TrackCandidate>& tracks,
                     const DetectorGeometry& geometry, std::ostream& out,
                     Projection projection);

// One line-delimited JSON object per record, schema version 1.
struct MetricsRecord {
    std::string run_id;
    std::string solver;
    std::optional<int> multiplicity;
    std::optional<int> layers;
    std::optional<std::string> loss;
    std::optional<int> pool_size;      // N_I
    std::optional<int> extractions;    // N_E
    std::optional<int> sample_count;   // N_S
    std::optional<double> energy;
    std::optional<double> efficiency;
    std::optional<double> purity;
    std::optional<double> prob_mean;
    std::optional<double> accuracy;
    std::optional<double> accuracy_err;
    std::optional<int> jobs;
    std::optional<double> wall_time_s;

    nlohmann::json to_json() const;
};

void write_metrics(const std::vector<MetricsRecord>& records, std::ostream& out);
void write_metrics(const std::vector<MetricsRecord>& records, const std::string& path);

}  // namespace qtrack
