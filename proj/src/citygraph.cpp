#include "snav/citygraph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>

#include "snav/error.hpp"
#include "snav/lexicon.hpp"
#include "snav/rng.hpp"

namespace snav {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kBearingQuantum = 1048576.0;  // 2^20 steps per degree
constexpr int kMaxGenerationAttempts = 32;

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

// Bearing of a direction in the closed-open upper half [0, 180).
double half_bearing(double dx, double dy) {
  double deg = std::atan2(dx, dy) * 180.0 / kPi;
  if (deg < 0.0) deg = 0.0;
  return std::round(deg * kBearingQuantum) / kBearingQuantum;
}

struct Block {
  NodeId a;  // lower intersection id
  NodeId b;
  std::int32_t street;
};

bool blocks_connected(int n_intersections, const std::vector<Block>& blocks, const std::vector<bool>& kept) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n_intersections));
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (!kept[i]) continue;
    adj[blocks[i].a].push_back(blocks[i].b);
    adj[blocks[i].b].push_back(blocks[i].a);
  }
  std::vector<bool> seen(static_cast<std::size_t>(n_intersections), false);
  std::deque<int> queue{0};
  seen[0] = true;
  int count = 1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        queue.push_back(w);
      }
    }
  }
  return count == n_intersections;
}

std::optional<CityGraph> try_generate(const CityGenParams& p, std::uint64_t seed, Rng& rng) {
  const int cols = p.grid_cols;
  const int rows = p.grid_rows;
  const int n_int = cols * rows;

  std::vector<Street> streets;
  for (int r = 0; r < rows; ++r) {
    Street s;
    s.id = static_cast<std::int32_t>(streets.size());
    s.name = street_name(p.lexicon, StreetAxis::EastWest, r);
    s.axis_bearing = 90.0;
    if (rng.bernoulli(0.5)) s.one_way = rng.bernoulli(0.5) ? 90.0 : 270.0;
    streets.push_back(std::move(s));
  }
  for (int c = 0; c < cols; ++c) {
    Street s;
    s.id = static_cast<std::int32_t>(streets.size());
    s.name = street_name(p.lexicon, StreetAxis::NorthSouth, c);
    s.axis_bearing = 0.0;
    if (rng.bernoulli(0.5)) s.one_way = rng.bernoulli(0.5) ? 0.0 : 180.0;
    streets.push_back(std::move(s));
  }

  std::vector<Block> blocks;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c) blocks.push_back({r * cols + c, r * cols + c + 1, r});
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r + 1 < rows; ++r) blocks.push_back({r * cols + c, (r + 1) * cols + c, rows + c});

  std::vector<bool> kept(blocks.size(), true);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (!rng.bernoulli(p.edge_drop_prob)) continue;
    kept[i] = false;
    if (!blocks_connected(n_int, blocks, kept)) kept[i] = true;
  }

  std::vector<int> street_blocks(streets.size(), 0);
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (kept[i]) ++street_blocks[static_cast<std::size_t>(blocks[i].street)];
  if (std::any_of(street_blocks.begin(), street_blocks.end(), [](int k) { return k == 0; })) return std::nullopt;

  auto jittered = [&](double x, double y) {
    const double radius = p.coord_jitter * std::sqrt(rng.uniform());
    const double angle = 2.0 * kPi * rng.uniform();
    return Vec2{round3(x + radius * std::cos(angle)), round3(y + radius * std::sin(angle))};
  };

  std::vector<Node> nodes;
  nodes.reserve(static_cast<std::size_t>(n_int));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      Node n;
      n.id = static_cast<NodeId>(nodes.size());
      n.coord = jittered(c * p.block_length, r * p.block_length);
      nodes.push_back(n);
    }
  }

  // Interior nodes are numbered block by block in a seeded order, so that
  // lexicographic tie-breaking among shortest paths varies across the map.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (kept[i]) order.push_back(i);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  const int per_block = static_cast<int>(std::lround(p.block_length / p.node_spacing)) - 1;
  std::vector<Edge> edges;
  for (std::size_t bi : order) {
    const Block& blk = blocks[bi];
    const int ar = blk.a / cols, ac = blk.a % cols;
    const double dx = blk.b == blk.a + 1 ? 1.0 : 0.0;
    const double dy = 1.0 - dx;
    NodeId prev = blk.a;
    for (int k = 1; k <= per_block; ++k) {
      Node n;
      n.id = static_cast<NodeId>(nodes.size());
      n.coord = jittered(ac * p.block_length + dx * k * p.node_spacing, ar * p.block_length + dy * k * p.node_spacing);
      nodes.push_back(n);
      edges.push_back({prev, n.id, blk.street, 0.0});
      prev = n.id;
    }
    edges.push_back({prev, blk.b, blk.street, 0.0});
  }
  for (Edge& e : edges) e.length = distance(nodes[e.a].coord, nodes[e.b].coord);

  std::vector<std::set<std::int32_t>> incident(nodes.size());
  for (const Edge& e : edges) {
    incident[e.a].insert(e.street_id);
    incident[e.b].insert(e.street_id);
  }
  for (Node& n : nodes) {
    n.kind = incident[n.id].size() >= 2 ? NodeKind::Intersection : NodeKind::BlockInterior;
    n.percept_seed = rng.next_u64();
  }

  CityGraph g(std::move(nodes), std::move(edges), std::move(streets), seed, p);
  if (!g.connected()) return std::nullopt;
  return g;
}

}  // namespace

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

void CityGenParams::validate() const {
  if (grid_cols < 2 || grid_rows < 2) throw ParameterError("grid_cols and grid_rows must be >= 2");
  if (!(block_length > 0.0)) throw ParameterError("block_length must be positive");
  if (!(node_spacing > 0.0) || node_spacing > block_length)
    throw ParameterError("node_spacing must be in (0, block_length]");
  const double ratio = block_length / node_spacing;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) throw ParameterError("node_spacing must divide block_length");
  if (!(coord_jitter >= 0.0) || coord_jitter >= node_spacing / 2.0)
    throw ParameterError("coord_jitter must be in [0, node_spacing / 2)");
  if (!(edge_drop_prob >= 0.0) || edge_drop_prob >= 0.3) throw ParameterError("edge_drop_prob must be in [0, 0.3)");
  if (lexicon < 0 || lexicon >= lexicon_count()) throw ParameterError("unknown street-name lexicon");
  if (grid_rows > lexicon_capacity(lexicon, StreetAxis::EastWest) ||
      grid_cols > lexicon_capacity(lexicon, StreetAxis::NorthSouth))
    throw ParameterError("grid too large for the street-name lexicon");
}

CityGenParams second_city_params(const CityGenParams& base) {
  CityGenParams p = base;
  p.lexicon = 1;
  p.block_length = 80.0;
  return p;
}

CityGraph::CityGraph(std::vector<Node> nodes, std::vector<Edge> edges, std::vector<Street> streets,
                     std::uint64_t world_seed, CityGenParams gen_params)
    : nodes_(std::move(nodes)),
      edges_(std::move(edges)),
      streets_(std::move(streets)),
      world_seed_(world_seed),
      gen_params_(gen_params) {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].id != static_cast<NodeId>(i)) throw ParameterError("node ids must be dense 0..n-1");
  for (std::size_t i = 0; i < streets_.size(); ++i)
    if (streets_[i].id != static_cast<std::int32_t>(i)) throw ParameterError("street ids must be dense 0..k-1");
  adjacency_.assign(nodes_.size(), {});
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (!valid(e.a) || !valid(e.b) || e.a == e.b) throw ParameterError("edge endpoints out of range or equal");
    if (e.street_id < 0 || static_cast<std::size_t>(e.street_id) >= streets_.size())
      throw ParameterError("edge references unknown street");
    adjacency_[e.a].push_back({e.b, static_cast<std::int32_t>(i)});
    adjacency_[e.b].push_back({e.a, static_cast<std::int32_t>(i)});
  }
  for (auto& adj : adjacency_)
    std::sort(adj.begin(), adj.end(), [](const Adjacency& l, const Adjacency& r) { return l.neighbor < r.neighbor; });
}

const Node& CityGraph::node(NodeId n) const {
  if (!valid(n)) throw LookupError("node id " + std::to_string(n) + " out of range");
  return nodes_[static_cast<std::size_t>(n)];
}

const Street& CityGraph::street(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= streets_.size())
    throw LookupError("street id " + std::to_string(id) + " out of range");
  return streets_[static_cast<std::size_t>(id)];
}

const std::vector<Adjacency>& CityGraph::neighbors(NodeId n) const {
  if (!valid(n)) throw LookupError("node id " + std::to_string(n) + " out of range");
  return adjacency_[static_cast<std::size_t>(n)];
}

std::optional<std::int32_t> CityGraph::edge_between(NodeId a, NodeId b) const {
  for (const Adjacency& adj : neighbors(a))
    if (adj.neighbor == b) return adj.edge;
  return std::nullopt;
}

bool CityGraph::connected() const {
  if (nodes_.empty()) return true;
  const std::vector<int> dist = hop_distances(*this, 0);
  return std::none_of(dist.begin(), dist.end(), [](int d) { return d < 0; });
}

CityGraph generate_city(const CityGenParams& params, std::uint64_t seed) {
  params.validate();
  for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
    Rng rng(hash_combine(seed, static_cast<std::uint64_t>(attempt)));
    if (auto g = try_generate(params, seed, rng)) return std::move(*g);
  }
  throw GenerationError("could not generate a connected city with every street present after " +
                        std::to_string(kMaxGenerationAttempts) + " attempts");
}

std::vector<int> hop_distances(const CityGraph& g, NodeId target) {
  std::vector<int> dist(g.node_count(), -1);
  std::deque<NodeId> queue{target};
  dist[static_cast<std::size_t>(target)] = 0;
  while (!queue.empty()) {
    const NodeId v = queue.front();
    queue.pop_front();
    for (const Adjacency& adj : g.neighbors(v)) {
      if (dist[adj.neighbor] < 0) {
        dist[adj.neighbor] = dist[v] + 1;
        queue.push_back(adj.neighbor);
      }
    }
  }
  return dist;
}

std::vector<NodeId> shortest_path(const CityGraph& g, NodeId a, NodeId b) {
  if (!g.valid(a) || !g.valid(b)) throw LookupError("shortest_path: node id out of range");
  const std::vector<int> dist = hop_distances(g, b);
  if (dist[a] < 0) throw NoPathError("no path from " + std::to_string(a) + " to " + std::to_string(b));
  std::vector<NodeId> path{a};
  NodeId cur = a;
  while (cur != b) {
    // Neighbors are sorted by id, so the first one on a shortest path yields
    // the lexicographically least sequence.
    for (const Adjacency& adj : g.neighbors(cur)) {
      if (dist[adj.neighbor] == dist[cur] - 1) {
        cur = adj.neighbor;
        break;
      }
    }
    path.push_back(cur);
  }
  return path;
}

double bearing(Vec2 from, Vec2 to) {
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  if (dx == 0.0 && dy == 0.0) throw GeometryError("bearing undefined between identical points");
  const bool upper = dx > 0.0 || (dx == 0.0 && dy > 0.0);
  double b = upper ? half_bearing(dx, dy) : half_bearing(-dx, -dy) + 180.0;
  if (b >= 360.0) b -= 360.0;
  return b;
}

double ang_diff(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

double signed_ang_diff(double a, double b) {
  double d = std::fmod(b - a, 360.0);
  if (d > 180.0) d -= 360.0;
  if (d <= -180.0) d += 360.0;
  return d;
}

double wrap_heading(double h) {
  h = std::fmod(h, 360.0);
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  return h + 0.0;
}

const char* region_name(Region r) {
  switch (r) {
    case Region::Train: return "train";
    case Region::Valid: return "valid";
    case Region::Test: return "test";
  }
  return "?";
}

Region parse_region(const std::string& s) {
  if (s == "train") return Region::Train;
  if (s == "valid") return Region::Valid;
  if (s == "test") return Region::Test;
  throw ParameterError("unknown region '" + s + "' (expected train, valid or test)");
}

std::vector<NodeId> RegionPartition::members(Region r) const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == r) out.push_back(static_cast<NodeId>(i));
  return out;
}

RegionPartition partition_regions(const CityGraph& g, std::array<double, 3> fractions) {
  for (double f : fractions)
    if (!(f > 0.0)) throw PartitionError("region fractions must all be positive");
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
    throw PartitionError("region fractions must sum to 1");
  if (g.node_count() == 0) throw PartitionError("empty graph");

  RegionPartition part;
  part.x_min = part.x_max = g.nodes().front().coord.x;
  for (const Node& n : g.nodes()) {
    part.x_min = std::min(part.x_min, n.coord.x);
    part.x_max = std::max(part.x_max, n.coord.x);
  }
  const double span = part.x_max - part.x_min;
  part.cut0 = part.x_min + fractions[0] * span;
  part.cut1 = part.x_min + (fractions[0] + fractions[1]) * span;

  std::array<int, 3> intersections{};
  part.labels.resize(g.node_count());
  for (const Node& n : g.nodes()) {
    const Region r = n.coord.x < part.cut0 ? Region::Train : n.coord.x < part.cut1 ? Region::Valid : Region::Test;
    part.labels[static_cast<std::size_t>(n.id)] = r;
    if (n.kind == NodeKind::Intersection) ++intersections[static_cast<std::size_t>(r)];
  }
  for (int r = 0; r < 3; ++r)
    if (intersections[static_cast<std::size_t>(r)] == 0)
      throw PartitionError(std::string("region band '") + region_name(static_cast<Region>(r)) +
                           "' contains no intersections");
  return part;
}

}  // namespace snav
