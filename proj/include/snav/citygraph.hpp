#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace snav {

using NodeId = std::int32_t;

struct Vec2 {
  double x = 0.0;  // east, meters
  double y = 0.0;  // north, meters

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

double distance(Vec2 a, Vec2 b);

enum class NodeKind : std::uint8_t { Intersection, BlockInterior };

struct Node {
  NodeId id = 0;
  Vec2 coord;
  std::uint64_t percept_seed = 0;
  NodeKind kind = NodeKind::BlockInterior;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  NodeId a = 0;
  NodeId b = 0;
  std::int32_t street_id = 0;
  double length = 0.0;

  NodeId other(NodeId n) const { return n == a ? b : a; }

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Street {
  std::int32_t id = 0;
  std::string name;  // space separated tokens, e.g. "2nd ave"
  double axis_bearing = 0.0;
  // Bearing of legal traffic flow. Only affects percepts and text.
  std::optional<double> one_way;

  friend bool operator==(const Street&, const Street&) = default;
};

struct CityGenParams {
  int grid_cols = 6;
  int grid_rows = 6;
  double block_length = 100.0;
  double node_spacing = 10.0;
  double coord_jitter = 0.5;
  double edge_drop_prob = 0.1;
  int lexicon = 0;

  // Throws ParameterError describing the first violated constraint.
  void validate() const;

  friend bool operator==(const CityGenParams&, const CityGenParams&) = default;
};

// Parameters of the out-of-domain city: new lexicon and block length.
CityGenParams second_city_params(const CityGenParams& base = {});

struct Adjacency {
  NodeId neighbor;
  std::int32_t edge;
};

class CityGraph {
 public:
  CityGraph() = default;
  // Validates ids and endpoints and builds adjacency. Throws ParameterError.
  CityGraph(std::vector<Node> nodes, std::vector<Edge> edges, std::vector<Street> streets,
            std::uint64_t world_seed, CityGenParams gen_params);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Street>& streets() const { return streets_; }
  std::uint64_t world_seed() const { return world_seed_; }
  const CityGenParams& gen_params() const { return gen_params_; }

  std::size_t node_count() const { return nodes_.size(); }
  bool valid(NodeId n) const { return n >= 0 && static_cast<std::size_t>(n) < nodes_.size(); }

  // Throws LookupError on an invalid id.
  const Node& node(NodeId n) const;
  const Street& street(std::int32_t id) const;
  // Neighbors sorted by node id.
  const std::vector<Adjacency>& neighbors(NodeId n) const;
  // Edge joining a and b, if any.
  std::optional<std::int32_t> edge_between(NodeId a, NodeId b) const;

  bool connected() const;

  friend bool operator==(const CityGraph& l, const CityGraph& r) {
    return l.world_seed_ == r.world_seed_ && l.gen_params_ == r.gen_params_ && l.nodes_ == r.nodes_ &&
           l.edges_ == r.edges_ && l.streets_ == r.streets_;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<Street> streets_;
  std::uint64_t world_seed_ = 0;
  CityGenParams gen_params_;
  std::vector<std::vector<Adjacency>> adjacency_;
};

CityGraph generate_city(const CityGenParams& params, std::uint64_t seed);

// Minimal-hop path, inclusive of both ends. Among equal-length paths the
// lexicographically smallest node-id sequence is returned.
std::vector<NodeId> shortest_path(const CityGraph& g, NodeId a, NodeId b);

// Hop distance from every node to `target` (-1 where unreachable).
std::vector<int> hop_distances(const CityGraph& g, NodeId target);

// Compass bearing in [0, 360), 0 = north (+y), 90 = east (+x). The result is
// quantized to 2^-20 degree so that opposite bearings differ by exactly 180
// and rotation arithmetic stays exact. Throws GeometryError when from == to.
double bearing(Vec2 from, Vec2 to);

// Minimal absolute circular difference in [0, 180].
double ang_diff(double a, double b);

// Signed circular difference b - a in (-180, 180]; positive is clockwise.
double signed_ang_diff(double a, double b);

// Heading normalized into [0, 360).
double wrap_heading(double h);

enum class Region : std::uint8_t { Train = 0, Valid = 1, Test = 2 };

const char* region_name(Region r);
Region parse_region(const std::string& s);  // throws ParameterError

struct RegionPartition {
  std::vector<Region> labels;  // indexed by node id
  // Vertical band boundaries on x: [x_min, cut0) train, [cut0, cut1) valid, [cut1, x_max] test.
  double x_min = 0.0, cut0 = 0.0, cut1 = 0.0, x_max = 0.0;

  Region of(NodeId n) const { return labels.at(static_cast<std::size_t>(n)); }
  std::vector<NodeId> members(Region r) const;
};

RegionPartition partition_regions(const CityGraph& g, std::array<double, 3> fractions);

inline constexpr std::array<double, 3> kDefaultRegionFractions{0.55, 0.20, 0.25};

}  // namespace snav
