#include <doctest.h>

#include <cmath>

#include "snav/citygraph.hpp"
#include "snav/error.hpp"
#include "snav/percept.hpp"

using namespace snav;

namespace {

double norm(const std::vector<float>& v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

double l2(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (static_cast<double>(a[i]) - b[i]) * (static_cast<double>(a[i]) - b[i]);
  return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("observations are deterministic and unit norm") {
  const CityGraph g = generate_city(CityGenParams{}, 5);
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto n = static_cast<NodeId>(rng.below(g.node_count()));
    const double h = std::floor(rng.uniform(0.0, 360.0));
    const Observation a = observe(g, n, h);
    const Observation b = observe(g, n, h);
    REQUIRE(a.features == b.features);
    REQUIRE(a.features.size() == 64);
    REQUIRE(std::abs(norm(a.features) - 1.0) < 1e-6);
  }
  CHECK_THROWS_AS(observe(g, -1, 0.0), LookupError);
  CHECK_THROWS_AS(observe(g, static_cast<NodeId>(g.node_count()), 0.0), LookupError);
}

TEST_CASE("a 5 degree turn keeps the view similar") {
  const CityGraph g = generate_city(CityGenParams{}, 5);
  Rng rng(4);
  double worst = 1.0;
  for (int i = 0; i < 1000; ++i) {
    const auto n = static_cast<NodeId>(rng.below(g.node_count()));
    const double h = rng.uniform(0.0, 360.0);
    const double c = cosine_similarity(observe(g, n, h).features, observe(g, n, wrap_heading(h + 5.0)).features);
    worst = std::min(worst, c);
  }
  MESSAGE("worst cosine similarity for a 5 degree turn: " << worst);
  CHECK(worst >= 0.9);
}

TEST_CASE("distinct nodes look different") {
  const CityGraph g = generate_city(CityGenParams{}, 5);
  Rng rng(5);
  int similar = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = static_cast<NodeId>(rng.below(g.node_count()));
    auto b = static_cast<NodeId>(rng.below(g.node_count()));
    while (b == a) b = static_cast<NodeId>(rng.below(g.node_count()));
    const double h = rng.uniform(0.0, 360.0);
    if (cosine_similarity(observe(g, a, h).features, observe(g, b, h).features) >= 0.99) ++similar;
  }
  CHECK(similar <= 10);
}

TEST_CASE("thumbnails equal observations at the same pose") {
  const CityGraph g = generate_city(CityGenParams{}, 6);
  const RegionPartition part = partition_regions(g, kDefaultRegionFractions);
  const auto routes = sample_routes(g, part, Region::Train, 50, 2);
  for (const Route& r : routes) {
    for (const Direction& d : r.directions) {
      const Observation t = thumbnail(g, d.end_thumb);
      const Observation o = observe(g, d.end_thumb.node, d.end_thumb.heading);
      REQUIRE(t.features == o.features);
      CHECK(l2(t.features, o.features) == 0.0);
    }
    // One node before each waypoint along the path, facing the same way.
    for (std::size_t i = 1; i < r.path.size(); ++i) {
      const auto it = std::find(r.waypoints.begin(), r.waypoints.end(), r.path[i]);
      if (it == r.waypoints.end()) continue;
      const double in = bearing(g.node(r.path[i - 1]).coord, g.node(r.path[i]).coord);
      const Observation before = observe(g, r.path[i - 1], in);
      CHECK(l2(before.features, thumbnail(g, {r.path[i], in}).features) > 0.0);
    }
  }
}

TEST_CASE("reversing heading on a one-way street flips the traffic cue") {
  const CityGraph g = generate_city(CityGenParams{}, 12);
  const PerceptParams p;
  int checked = 0;
  for (const Edge& e : g.edges()) {
    const Street& s = g.street(e.street_id);
    if (!s.one_way) continue;
    for (NodeId n : {e.a, e.b}) {
      if (g.node(n).kind != NodeKind::BlockInterior) continue;
      const double h = bearing(g.node(n).coord, g.node(e.other(n)).coord);
      const auto t1 = traffic_component(g, n, h, p);
      const auto t2 = traffic_component(g, n, wrap_heading(h + 180.0), p);
      REQUIRE(dot(t1, t1) > 0.0);
      REQUIRE(dot(t2, t2) > 0.0);
      CHECK(dot(t1, t2) / std::sqrt(dot(t1, t1) * dot(t2, t2)) <= 0.0);
      ++checked;
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("percept parameter validation") {
  PerceptParams p;
  CHECK_NOTHROW(p.validate());
  p.sector_count = 7;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = PerceptParams{};
  p.street_cue_weight = 0.5;
  CHECK_THROWS_AS(p.validate(), ParameterError);
}
