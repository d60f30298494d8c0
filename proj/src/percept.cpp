#include "snav/percept.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "snav/error.hpp"
#include "snav/rng.hpp"

namespace snav {

namespace {

constexpr std::uint64_t kSectorTag = 0x5345435430ULL;
constexpr std::uint64_t kStreetTag = 0x5354524545ULL;
constexpr std::uint64_t kTrafficTag = 0x5452414646ULL;

// Deterministic pseudo-random unit vector; Gaussian components from a
// seeded generator, then normalized.
std::vector<double> hashed_unit(std::uint64_t key, int dim) {
  Rng rng(key);
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm2 = 0.0;
  for (double& x : v) {
    x = rng.normal();
    norm2 += x * x;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

std::vector<double> sector_vector(const CityGraph& g, const Node& n, int sector, int dim) {
  return hashed_unit(hash_combine(hash_combine(hash_combine(g.world_seed(), kSectorTag), n.percept_seed),
                                  static_cast<std::uint64_t>(sector)),
                     dim);
}

void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

// Linear taper across the cone so that cues fade in and out smoothly as the
// heading sweeps past an edge.
double cone_weight(double delta, double half_angle) { return delta >= half_angle ? 0.0 : 1.0 - delta / half_angle; }

struct ConeEdge {
  std::int32_t street;
  double delta;
  double edge_bearing;
};

std::vector<ConeEdge> cone_edges(const CityGraph& g, NodeId node, double heading, double half_angle) {
  std::vector<ConeEdge> out;
  const Vec2 at = g.node(node).coord;
  for (const Adjacency& adj : g.neighbors(node)) {
    const double b = bearing(at, g.node(adj.neighbor).coord);
    const double d = ang_diff(heading, b);
    if (d < half_angle) out.push_back({g.edges()[static_cast<std::size_t>(adj.edge)].street_id, d, b});
  }
  return out;
}

}  // namespace

void PerceptParams::validate() const {
  if (dim < 2) throw ParameterError("percept dimension must be >= 2");
  if (sector_count < 1 || 360 % sector_count != 0) throw ParameterError("sector_count must divide 360");
  if (landmark_weight < 0 || street_cue_weight < 0 || traffic_cue_weight < 0)
    throw ParameterError("percept mixing weights must be nonnegative");
  if (std::abs(landmark_weight + street_cue_weight + traffic_cue_weight - 1.0) > 1e-9)
    throw ParameterError("percept mixing weights must sum to 1");
  if (!(landmark_weight > 0)) throw ParameterError("landmark weight must be positive");
}

std::vector<double> landmark_component(const CityGraph& g, NodeId node, double heading, const PerceptParams& p) {
  const Node& n = g.node(node);
  const double width = 360.0 / p.sector_count;
  const double h = wrap_heading(heading);
  const int k0 = static_cast<int>(std::floor(h / width)) % p.sector_count;
  const int k1 = (k0 + 1) % p.sector_count;
  const double t = (h - k0 * width) / width;
  const std::vector<double> v0 = sector_vector(g, n, k0, p.dim);
  const std::vector<double> v1 = sector_vector(g, n, k1, p.dim);
  // Spherical interpolation: constant angular speed between sector centers.
  const double dot = std::clamp(std::inner_product(v0.begin(), v0.end(), v1.begin(), 0.0), -1.0, 1.0);
  const double omega = std::acos(dot);
  std::vector<double> out(static_cast<std::size_t>(p.dim), 0.0);
  if (omega < 1e-9) {
    axpy(out, 1.0, v0);
    return out;
  }
  const double s = std::sin(omega);
  axpy(out, std::sin((1.0 - t) * omega) / s, v0);
  axpy(out, std::sin(t * omega) / s, v1);
  return out;
}

std::vector<double> traffic_component(const CityGraph& g, NodeId node, double heading, const PerceptParams& p) {
  std::vector<double> out(static_cast<std::size_t>(p.dim), 0.0);
  const auto edges = cone_edges(g, node, heading, p.cone_half_angle);
  if (edges.empty()) return out;
  const ConeEdge* primary = &edges.front();
  for (const ConeEdge& e : edges)
    if (e.delta < primary->delta) primary = &e;
  const Street& s = g.street(primary->street);
  const double w = cone_weight(primary->delta, p.cone_half_angle);
  if (!s.one_way) {
    axpy(out, w, hashed_unit(hash_combine(g.world_seed(), kTrafficTag), p.dim));
  } else {
    // Facing with the flow and against it give opposite cues.
    const double sign = ang_diff(*s.one_way, heading) < 90.0 ? 1.0 : -1.0;
    axpy(out, sign * w, hashed_unit(hash_combine(g.world_seed(), kTrafficTag + 1), p.dim));
  }
  return out;
}

Observation observe(const CityGraph& g, NodeId node, double heading, const PerceptParams& p) {
  if (!g.valid(node)) throw LookupError("observe: node id " + std::to_string(node) + " out of range");
  std::vector<double> x(static_cast<std::size_t>(p.dim), 0.0);
  axpy(x, p.landmark_weight, landmark_component(g, node, heading, p));
  for (const ConeEdge& e : cone_edges(g, node, heading, p.cone_half_angle)) {
    const Street& s = g.street(e.street);
    axpy(x, p.street_cue_weight * cone_weight(e.delta, p.cone_half_angle),
         hashed_unit(hash_combine(hash_combine(g.world_seed(), kStreetTag), hash_string(s.name)), p.dim));
  }
  axpy(x, p.traffic_cue_weight, traffic_component(g, node, heading, p));

  double norm2 = 0.0;
  for (double v : x) norm2 += v * v;
  const double inv = 1.0 / std::sqrt(norm2);
  Observation obs;
  obs.pose = {node, heading};
  obs.features.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) obs.features[i] = static_cast<float>(x[i] * inv);
  return obs;
}

Observation thumbnail(const CityGraph& g, const Pose& pose, const PerceptParams& params) {
  return observe(g, pose.node, pose.heading, params);
}

double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  return dot / std::sqrt(na * nb);
}

}  // namespace snav
