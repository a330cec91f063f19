#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "qtrack/qubo.hpp"

namespace qtrack {

// Detector hit, millimeters. truth_particle == 0 marks noise.
struct Hit {
    std::int64_t id = 0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    int layer = 0;
    std::int64_t truth_particle = 0;
};

double transverse_radius(const Hit& h);

// Two hits on nearby layers. inner/outer are positions in the event's hit
// vector; the hits keep their external ids.
struct Doublet {
    int inner = 0;
    int outer = 0;
    double theta = 0.0;  // polar angle of the segment, atan2(dr, dz), in (0, pi)
    double phi = 0.0;    // azimuth of the segment direction
    int layer_gap = 0;
};

// Three hits on strictly increasing layers with fitted kinematics.
struct Triplet {
    std::array<int, 3> hits{};  // hit indices, ascending layer
    double curvature = 0.0;     // signed 1/mm, positive for counterclockwise turning
    double theta_inner = 0.0;
    double theta_outer = 0.0;
    double delta_theta = 0.0;
    double d0 = 0.0;  // transverse distance of the fitted circle from the origin
    double z0 = 0.0;  // z at the point of closest transverse approach
    int holes = 0;    // crossed layers between the endpoints with no hit in the triplet
};

// Candidate-generation windows plus the bias/conflict parameters of the
// quadratic objective.
struct QuboBuildConfig {
    // doublet cuts
    double phi_window = 0.2;     // |azimuth difference| between the two hit positions
    double slope_window = 2.0;   // |dz| / dr
    int max_layer_gap = 2;       // allows crossing one missing layer
    // triplet cuts
    double theta_window = 0.1;   // |theta_outer - theta_inner|
    double max_curvature = 0.005;
    // bias weights
    double alpha = 0.5;
    double beta = 0.2;
    double gamma = 1.0;
    double lambda = 0.5;
    double conflict_penalty = 1.0;
    enum class ExponentSign { AsWritten, Damped } exponent_sign = ExponentSign::AsWritten;

    void validate() const;
};

struct CircleFitResult {
    double curvature = 0.0;
    double d0 = 0.0;
    double z0 = 0.0;
    double theta_inner = 0.0;
    double theta_outer = 0.0;
};

// Circumcircle through the transverse projections of three hits; collinear
// configurations fall back to a straight line with curvature 0. z0 comes from
// a least-squares line of z against transverse arc length, evaluated at the
// point of closest approach to the beamline.
CircleFitResult fit_circle_kinematics(const Hit& a, const Hit& b, const Hit& c);

std::vector<Doublet> build_doublets(const std::vector<Hit>& hits, const QuboBuildConfig& config);

std::vector<Triplet> build_triplets(const std::vector<Hit>& hits,
                                    const std::vector<Doublet>& doublets,
                                    const QuboBuildConfig& config);

// Momentum-consistency score of two triplets sharing two hits:
//   S = [1 - (|d(curvature)| + max(dtheta_i, dtheta_j)) / 2] / (1 + H_i + H_j)^2
double compatibility_S(const Triplet& a, const Triplet& b);

// Quality bias of one triplet:
//   a_i = alpha (1 - e^{sigma |d0| / gamma}) + beta (1 - e^{sigma |z0| / lambda})
// with sigma = +1 (AsWritten) or -1 (Damped); exponent arguments clip at 700.
double bias_weight(const Triplet& t, const QuboBuildConfig& config);

enum class PairRelation {
    Disjoint,  // no shared hit: no quadratic term
    Aligned,   // one shared hit used as the outer end of one triplet and the
               // inner end of the other: consecutive segments of one track,
               // no quadratic term
    Conflict,  // shared hits used incompatibly (branching, double-used middle
               // hits, or two shared hits that do not chain)
    Chain,     // two shared hits forming a layer-monotone 4-hit chain
};

PairRelation classify_pair(const std::vector<Hit>& hits, const Triplet& a, const Triplet& b);

// Linear terms from bias_weight, quadratic terms +conflict_penalty or -S per
// classify_pair. Variable i of the model is triplets[i].
QuboModel build_qubo(const std::vector<Hit>& hits, const std::vector<Triplet>& triplets,
                     const QuboBuildConfig& config);

using TrackCandidate = std::vector<int>;  // hit indices, ascending (layer, id)

// Connected components of the chain-compatibility graph over the selected
// triplets, flattened and deduplicated.
std::vector<TrackCandidate> assemble_tracks(const std::vector<Hit>& hits,
                                            const std::vector<Triplet>& triplets,
                                            const Bits& selected);

// Same assembly from bare hit-id triples (as stored in a QUBO mapping file).
std::vector<TrackCandidate> assemble_tracks_from_ids(
    const std::vector<Hit>& hits, const std::vector<std::array<std::int64_t, 3>>& triplet_ids,
    const Bits& selected);

struct TrackingMetrics {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double efficiency = 0.0;
    double purity = 0.0;
    bool efficiency_defined = false;
    bool purity_defined = false;
};

// Doublet-level recall/precision against the truth labels. Doublets are
// consecutive hit pairs within a (layer, id)-sorted sequence, on both the
// reconstructed and the truth side; noise hits form no truth doublets.
TrackingMetrics score(const std::vector<Hit>& hits, const std::vector<TrackCandidate>& tracks);

// Companion `triplet <index> <hit_id> <hit_id> <hit_id>` records appended to
// the QUBO text format.
void save_triplet_map(const std::vector<Hit>& hits, const std::vector<Triplet>& triplets,
                      std::ostream& out);
std::vector<std::array<std::int64_t, 3>> load_triplet_map(std::istream& in);
std::vector<std::array<std::int64_t, 3>> load_triplet_map_file(const std::string& path);

}  // namespace qtrack
