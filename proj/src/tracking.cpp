#include "qtrack/tracking.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qtrack {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_angle(double a) {
    while (a > kPi) a -= 2.0 * kPi;
    while (a <= -kPi) a += 2.0 * kPi;
    return a;
}

}  // namespace

double transverse_radius(const Hit& h) { return std::hypot(h.x, h.y); }

void QuboBuildConfig::validate() const {
    if (gamma <= 0.0 || lambda <= 0.0)
        throw std::invalid_argument("gamma and lambda must be positive");
    if (phi_window <= 0.0 || slope_window <= 0.0 || theta_window <= 0.0 ||
        max_curvature <= 0.0 || max_layer_gap < 1)
        throw std::invalid_argument("cut windows must be positive");
}

CircleFitResult fit_circle_kinematics(const Hit& a, const Hit& b, const Hit& c) {
    CircleFitResult out;

    const double ux = b.x - a.x, uy = b.y - a.y;
    const double vx = c.x - b.x, vy = c.y - b.y;
    const double cross = ux * vy - uy * vx;
    const double scale = std::hypot(ux, uy) * std::hypot(vx, vy);
    if (scale == 0.0) throw std::invalid_argument("degenerate triplet: coincident hits");

    // polar angles of the two segments from cylindrical radii
    const double ra = transverse_radius(a), rb = transverse_radius(b), rc = transverse_radius(c);
    out.theta_inner = std::atan2(rb - ra, b.z - a.z);
    out.theta_outer = std::atan2(rc - rb, c.z - b.z);

    double s1, s2, s3;   // transverse arc lengths of the three hits
    double s_ca;         // arc length of the closest approach to the beamline
    if (std::abs(cross) <= 1e-10 * scale) {
        // collinear: straight-line fallback
        const double len = std::hypot(c.x - a.x, c.y - a.y);
        const double dx = (c.x - a.x) / len, dy = (c.y - a.y) / len;
        out.curvature = 0.0;
        out.d0 = std::abs(dx * a.y - dy * a.x);  // origin distance to the line
        s1 = 0.0;
        s2 = (b.x - a.x) * dx + (b.y - a.y) * dy;
        s3 = (c.x - a.x) * dx + (c.y - a.y) * dy;
        s_ca = -(a.x * dx + a.y * dy);
    } else {
        // circumcircle through the transverse projections
        const double d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
        const double na = a.x * a.x + a.y * a.y;
        const double nb = b.x * b.x + b.y * b.y;
        const double nc = c.x * c.x + c.y * c.y;
        const double cx = (na * (b.y - c.y) + nb * (c.y - a.y) + nc * (a.y - b.y)) / d;
        const double cy = (na * (c.x - b.x) + nb * (a.x - c.x) + nc * (b.x - a.x)) / d;
        const double radius = std::hypot(a.x - cx, a.y - cy);
        const double turn = cross > 0.0 ? 1.0 : -1.0;
        out.curvature = turn / radius;
        out.d0 = std::abs(std::hypot(cx, cy) - radius);

        const double a1 = std::atan2(a.y - cy, a.x - cx);
        const double a2 = std::atan2(b.y - cy, b.x - cx);
        const double a3 = std::atan2(c.y - cy, c.x - cx);
        s1 = 0.0;
        s2 = turn * radius * wrap_angle(a2 - a1);
        s3 = turn * radius * wrap_angle(a3 - a1);
        const double a_ca = std::atan2(-cy, -cx);  // center -> beamline direction
        s_ca = turn * radius * wrap_angle(a_ca - a1);
    }

    // least-squares z(s) over the three hits, evaluated at the perigee
    const double sm = (s1 + s2 + s3) / 3.0;
    const double zm = (a.z + b.z + c.z) / 3.0;
    const double sxx = (s1 - sm) * (s1 - sm) + (s2 - sm) * (s2 - sm) + (s3 - sm) * (s3 - sm);
    const double sxz =
        (s1 - sm) * (a.z - zm) + (s2 - sm) * (b.z - zm) + (s3 - sm) * (c.z - zm);
    const double slope = sxx > 0.0 ? sxz / sxx : 0.0;
    out.z0 = zm + slope * (s_ca - sm);
    return out;
}

std::vector<Doublet> build_doublets(const std::vector<Hit>& hits, const QuboBuildConfig& config) {
    config.validate();
    std::map<int, std::vector<int>> by_layer;
    for (std::size_t k = 0; k < hits.size(); ++k)
        by_layer[hits[k].layer].push_back(static_cast<int>(k));

    std::vector<double> radius(hits.size()), azimuth(hits.size());
    for (std::size_t k = 0; k < hits.size(); ++k) {
        radius[k] = transverse_radius(hits[k]);
        azimuth[k] = std::atan2(hits[k].y, hits[k].x);
    }

    std::vector<Doublet> doublets;
    for (const auto& [inner_layer, inner_hits] : by_layer) {
        for (int gap = 1; gap <= config.max_layer_gap; ++gap) {
            const auto it = by_layer.find(inner_layer + gap);
            if (it == by_layer.end()) continue;
            for (const int ia : inner_hits) {
                for (const int ib : it->second) {
                    const double dphi = wrap_angle(azimuth[ib] - azimuth[ia]);
                    if (std::abs(dphi) > config.phi_window) continue;
                    const double dr = radius[ib] - radius[ia];
                    if (dr <= 0.0) continue;
                    const double dz = hits[ib].z - hits[ia].z;
                    if (std::abs(dz) / dr > config.slope_window) continue;
                    Doublet d;
                    d.inner = ia;
                    d.outer = ib;
                    d.theta = std::atan2(dr, dz);
                    d.phi = std::atan2(hits[ib].y - hits[ia].y, hits[ib].x - hits[ia].x);
                    d.layer_gap = gap;
                    doublets.push_back(d);
                }
            }
        }
    }
    std::sort(doublets.begin(), doublets.end(), [](const Doublet& a, const Doublet& b) {
        return a.inner != b.inner ? a.inner < b.inner : a.outer < b.outer;
    });
    return doublets;
}

std::vector<Triplet> build_triplets(const std::vector<Hit>& hits,
                                    const std::vector<Doublet>& doublets,
                                    const QuboBuildConfig& config) {
    config.validate();
    std::map<int, std::vector<std::size_t>> outgoing;  // inner hit -> doublet ids
    for (std::size_t k = 0; k < doublets.size(); ++k)
        outgoing[doublets[k].inner].push_back(k);

    std::vector<Triplet> triplets;
    for (const Doublet& first : doublets) {
        const auto it = outgoing.find(first.outer);
        if (it == outgoing.end()) continue;
        for (const std::size_t k2 : it->second) {
            const Doublet& second = doublets[k2];
            const double dtheta = std::abs(second.theta - first.theta);
            if (dtheta > config.theta_window) continue;
            const Hit& a = hits[first.inner];
            const Hit& b = hits[first.outer];
            const Hit& c = hits[second.outer];
            const CircleFitResult fit = fit_circle_kinematics(a, b, c);
            if (std::abs(fit.curvature) > config.max_curvature) continue;
            Triplet t;
            t.hits = {first.inner, first.outer, second.outer};
            t.curvature = fit.curvature;
            t.theta_inner = fit.theta_inner;
            t.theta_outer = fit.theta_outer;
            t.delta_theta = std::abs(fit.theta_outer - fit.theta_inner);
            t.d0 = fit.d0;
            t.z0 = fit.z0;
            t.holes = c.layer - a.layer - 2;
            triplets.push_back(t);
        }
    }
    std::sort(triplets.begin(), triplets.end(),
              [](const Triplet& a, const Triplet& b) { return a.hits < b.hits; });
    return triplets;
}

double compatibility_S(const Triplet& a, const Triplet& b) {
    const double dcurv = std::abs(a.curvature - b.curvature);
    const double dtheta = std::max(a.delta_theta, b.delta_theta);
    const double denom = 1.0 + a.holes + b.holes;
    return (1.0 - 0.5 * (dcurv + dtheta)) / (denom * denom);
}

double bias_weight(const Triplet& t, const QuboBuildConfig& config) {
    const double sigma =
        config.exponent_sign == QuboBuildConfig::ExponentSign::AsWritten ? 1.0 : -1.0;
    const double arg_d = std::min(sigma * std::abs(t.d0) / config.gamma, 700.0);
    const double arg_z = std::min(sigma * std::abs(t.z0) / config.lambda, 700.0);
    return config.alpha * (1.0 - std::exp(arg_d)) + config.beta * (1.0 - std::exp(arg_z));
}

PairRelation classify_pair(const std::vector<Hit>& hits, const Triplet& a, const Triplet& b) {
    int shared = 0;
    for (const int ha : a.hits)
        for (const int hb : b.hits)
            if (ha == hb) ++shared;
    if (shared == 0) return PairRelation::Disjoint;
    if (shared == 1) {
        // hit handed over outer-end -> inner-end: the two triplets are
        // consecutive segments of one candidate track, not a conflict
        if (a.hits[2] == b.hits[0] || b.hits[2] == a.hits[0]) return PairRelation::Aligned;
        return PairRelation::Conflict;
    }

    // two shared hits: chain iff the union is a 4-hit layer-monotone path
    std::vector<int> merged(a.hits.begin(), a.hits.end());
    for (const int hb : b.hits)
        if (std::find(merged.begin(), merged.end(), hb) == merged.end()) merged.push_back(hb);
    if (merged.size() != 4) return PairRelation::Conflict;
    std::sort(merged.begin(), merged.end(), [&](int lhs, int rhs) {
        return hits[lhs].layer != hits[rhs].layer ? hits[lhs].layer < hits[rhs].layer
                                                  : hits[lhs].id < hits[rhs].id;
    });
    for (int k = 0; k < 3; ++k)
        if (hits[merged[k]].layer >= hits[merged[k + 1]].layer) return PairRelation::Conflict;

    const std::array<int, 3> head{merged[0], merged[1], merged[2]};
    const std::array<int, 3> tail{merged[1], merged[2], merged[3]};
    const bool forward = a.hits == head && b.hits == tail;
    const bool backward = b.hits == head && a.hits == tail;
    return forward || backward ? PairRelation::Chain : PairRelation::Conflict;
}

QuboModel build_qubo(const std::vector<Hit>& hits, const std::vector<Triplet>& triplets,
                     const QuboBuildConfig& config) {
    config.validate();
    const std::size_t n = triplets.size();
    QuboModel model(n);
    for (std::size_t i = 0; i < n; ++i) model.add_linear(i, bias_weight(triplets[i], config));

    // candidate pairs via the hit -> triplets index
    std::map<int, std::vector<std::size_t>> by_hit;
    for (std::size_t i = 0; i < n; ++i)
        for (const int h : triplets[i].hits) by_hit[h].push_back(i);

    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& [h, list] : by_hit)
        for (std::size_t p = 0; p < list.size(); ++p)
            for (std::size_t q = p + 1; q < list.size(); ++q)
                pairs.insert({std::min(list[p], list[q]), std::max(list[p], list[q])});

    for (const auto& [i, j] : pairs) {
        switch (classify_pair(hits, triplets[i], triplets[j])) {
            case PairRelation::Disjoint:
            case PairRelation::Aligned:
                break;
            case PairRelation::Conflict:
                model.add_quadratic(j, i, config.conflict_penalty);
                break;
            case PairRelation::Chain:
                model.add_quadratic(j, i, -compatibility_S(triplets[i], triplets[j]));
                break;
        }
    }
    return model;
}

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    std::size_t find(std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void merge(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

std::vector<TrackCandidate> components_to_tracks(
    const std::vector<Hit>& hits, const std::vector<std::array<int, 3>>& selected_triplets,
    UnionFind& uf) {
    std::map<std::size_t, std::set<int>> groups;
    for (std::size_t t = 0; t < selected_triplets.size(); ++t) {
        auto& hit_set = groups[uf.find(t)];
        for (const int h : selected_triplets[t]) hit_set.insert(h);
    }
    std::vector<TrackCandidate> tracks;
    for (auto& [root, hit_set] : groups) {
        TrackCandidate track(hit_set.begin(), hit_set.end());
        std::sort(track.begin(), track.end(), [&](int lhs, int rhs) {
            return hits[lhs].layer != hits[rhs].layer ? hits[lhs].layer < hits[rhs].layer
                                                      : hits[lhs].id < hits[rhs].id;
        });
        tracks.push_back(std::move(track));
    }
    std::sort(tracks.begin(), tracks.end(), [&](const TrackCandidate& a, const TrackCandidate& b) {
        const Hit& ha = hits[a.front()];
        const Hit& hb = hits[b.front()];
        if (ha.layer != hb.layer) return ha.layer < hb.layer;
        if (ha.id != hb.id) return ha.id < hb.id;
        return a < b;
    });
    return tracks;
}

// chain test on bare hit-index triples (layers only)
bool chains(const std::vector<Hit>& hits, const std::array<int, 3>& a,
            const std::array<int, 3>& b) {
    std::vector<int> merged(a.begin(), a.end());
    int shared = 0;
    for (const int hb : b) {
        if (std::find(a.begin(), a.end(), hb) != a.end())
            ++shared;
        else
            merged.push_back(hb);
    }
    if (shared != 2 || merged.size() != 4) return false;
    std::sort(merged.begin(), merged.end(), [&](int lhs, int rhs) {
        return hits[lhs].layer != hits[rhs].layer ? hits[lhs].layer < hits[rhs].layer
                                                  : hits[lhs].id < hits[rhs].id;
    });
    for (int k = 0; k < 3; ++k)
        if (hits[merged[k]].layer >= hits[merged[k + 1]].layer) return false;
    const std::array<int, 3> head{merged[0], merged[1], merged[2]};
    const std::array<int, 3> tail{merged[1], merged[2], merged[3]};
    auto sorted = [&](std::array<int, 3> t) {
        std::sort(t.begin(), t.end(), [&](int lhs, int rhs) {
            return hits[lhs].layer != hits[rhs].layer ? hits[lhs].layer < hits[rhs].layer
                                                      : hits[lhs].id < hits[rhs].id;
        });
        return t;
    };
    const auto sa = sorted(a), sb = sorted(b);
    return (sa == head && sb == tail) || (sb == head && sa == tail);
}

std::vector<TrackCandidate> assemble_impl(const std::vector<Hit>& hits,
                                          std::vector<std::array<int, 3>> chosen) {
    // sort hit triples by layer so the chain test sees canonical order
    for (auto& t : chosen) {
        std::sort(t.begin(), t.end(), [&](int lhs, int rhs) {
            return hits[lhs].layer != hits[rhs].layer ? hits[lhs].layer < hits[rhs].layer
                                                      : hits[lhs].id < hits[rhs].id;
        });
    }
    UnionFind uf(chosen.size());
    std::map<int, std::vector<std::size_t>> by_hit;
    for (std::size_t t = 0; t < chosen.size(); ++t)
        for (const int h : chosen[t]) by_hit[h].push_back(t);
    for (const auto& [h, list] : by_hit)
        for (std::size_t p = 0; p < list.size(); ++p)
            for (std::size_t q = p + 1; q < list.size(); ++q)
                if (chains(hits, chosen[list[p]], chosen[list[q]]))
                    uf.merge(list[p], list[q]);
    return components_to_tracks(hits, chosen, uf);
}

}  // namespace

std::vector<TrackCandidate> assemble_tracks(const std::vector<Hit>& hits,
                                            const std::vector<Triplet>& triplets,
                                            const Bits& selected) {
    if (selected.size() != triplets.size())
        throw std::invalid_argument("selection length does not match triplet count");
    std::vector<std::array<int, 3>> chosen;
    for (std::size_t i = 0; i < triplets.size(); ++i)
        if (selected[i]) chosen.push_back(triplets[i].hits);
    return assemble_impl(hits, std::move(chosen));
}

std::vector<TrackCandidate> assemble_tracks_from_ids(
    const std::vector<Hit>& hits, const std::vector<std::array<std::int64_t, 3>>& triplet_ids,
    const Bits& selected) {
    if (selected.size() != triplet_ids.size())
        throw std::invalid_argument("selection length does not match triplet count");
    std::map<std::int64_t, int> index_of;
    for (std::size_t k = 0; k < hits.size(); ++k) index_of[hits[k].id] = static_cast<int>(k);
    std::vector<std::array<int, 3>> chosen;
    for (std::size_t i = 0; i < triplet_ids.size(); ++i) {
        if (!selected[i]) continue;
        std::array<int, 3> t{};
        for (int k = 0; k < 3; ++k) {
            const auto it = index_of.find(triplet_ids[i][k]);
            if (it == index_of.end())
                throw std::invalid_argument("triplet references unknown hit id " +
                                            std::to_string(triplet_ids[i][k]));
            t[k] = it->second;
        }
        chosen.push_back(t);
    }
    return assemble_impl(hits, std::move(chosen));
}

TrackingMetrics score(const std::vector<Hit>& hits, const std::vector<TrackCandidate>& tracks) {
    auto doublet_set = [&](const std::vector<std::vector<int>>& sequences) {
        std::set<std::pair<int, int>> out;
        for (const auto& seq : sequences)
            for (std::size_t k = 0; k + 1 < seq.size(); ++k)
                out.insert({std::min(seq[k], seq[k + 1]), std::max(seq[k], seq[k + 1])});
        return out;
    };

    std::map<std::int64_t, std::vector<int>> by_particle;
    for (std::size_t k = 0; k < hits.size(); ++k)
        if (hits[k].truth_particle != 0)
            by_particle[hits[k].truth_particle].push_back(static_cast<int>(k));
    std::vector<std::vector<int>> truth_sequences;
    for (auto& [pid, seq] : by_particle) {
        std::sort(seq.begin(), seq.end(), [&](int lhs, int rhs) {
            return hits[lhs].layer != hits[rhs].layer ? hits[lhs].layer < hits[rhs].layer
                                                      : hits[lhs].id < hits[rhs].id;
        });
        truth_sequences.push_back(seq);
    }

    const auto truth = doublet_set(truth_sequences);
    const auto reco = doublet_set(tracks);

    TrackingMetrics m;
    for (const auto& d : reco)
        truth.count(d) ? ++m.tp : ++m.fp;
    for (const auto& d : truth)
        if (!reco.count(d)) ++m.fn;

    if (m.tp + m.fn > 0) {
        m.efficiency = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
        m.efficiency_defined = true;
    }
    if (m.tp + m.fp > 0) {
        m.purity = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
        m.purity_defined = true;
    }
    return m;
}

void save_triplet_map(const std::vector<Hit>& hits, const std::vector<Triplet>& triplets,
                      std::ostream& out) {
    for (std::size_t i = 0; i < triplets.size(); ++i) {
        out << "triplet " << i;
        for (const int h : triplets[i].hits) out << " " << hits[h].id;
        out << "\n";
    }
}

std::vector<std::array<std::int64_t, 3>> load_triplet_map(std::istream& in) {
    std::vector<std::array<std::int64_t, 3>> map;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;
        if (tag != "triplet") continue;
        std::size_t index = 0;
        std::array<std::int64_t, 3> ids{};
        if (!(ss >> index >> ids[0] >> ids[1] >> ids[2]))
            throw ParseError(lineno, "expected 'triplet <index> <id> <id> <id>'");
        if (index != map.size())
            throw ParseError(lineno, "triplet indices must be contiguous from 0");
        map.push_back(ids);
    }
    return map;
}

std::vector<std::array<std::int64_t, 3>> load_triplet_map_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return load_triplet_map(in);
}

}  // namespace qtrack
