#include "snav/langdir.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "snav/error.hpp"
#include "snav/lexicon.hpp"
#include "snav/world_io.hpp"

namespace snav {

using nlohmann::json;

namespace {

constexpr double kTurnThreshold = 45.0;

std::int32_t street_of(const CityGraph& g, NodeId a, NodeId b) {
  const auto e = g.edge_between(a, b);
  if (!e) throw ConfigurationError("path nodes " + std::to_string(a) + " and " + std::to_string(b) + " are not adjacent");
  return g.edges()[static_cast<std::size_t>(*e)].street_id;
}

double cross(Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - a.y) - (a.y - o.y) * (b.x - a.x); }

void append_words(std::vector<std::string>& out, const std::string& text) {
  for (auto& t : tokenize(text)) out.push_back(std::move(t));
}

json pose_json(const Pose& p) { return json{{"node", p.node}, {"heading", p.heading}}; }
Pose pose_from(const json& j) { return {j.at("node").get<NodeId>(), j.at("heading").get<double>()}; }

}  // namespace

int compass_index(double bearing_deg) {
  return static_cast<int>(std::floor(wrap_heading(bearing_deg + 22.5) / 45.0)) % 8;
}

std::vector<Maneuver> segment_maneuvers(const CityGraph& g, const std::vector<NodeId>& path) {
  if (path.size() < 2) throw DegenerateRouteError("a route needs at least two path nodes");
  auto coord = [&](std::size_t i) { return g.node(path[i]).coord; };

  std::vector<Maneuver> out;
  Maneuver head;
  head.kind = ManeuverKind::Head;
  head.node = path[0];
  head.heading = bearing(coord(0), coord(1));
  head.compass = compass_index(head.heading);
  head.street = street_of(g, path[0], path[1]);
  head.path_index = 0;
  out.push_back(head);

  std::int32_t current_street = head.street;
  std::size_t leg_start = 0;
  for (std::size_t k = 1; k + 1 < path.size(); ++k) {
    const double in = bearing(coord(k - 1), coord(k));
    const double outb = bearing(coord(k), coord(k + 1));
    const double delta = signed_ang_diff(in, outb);
    const std::int32_t next_street = street_of(g, path[k], path[k + 1]);
    Maneuver m;
    m.node = path[k];
    m.heading = in;
    m.street = next_street;
    m.path_index = k;
    if (std::abs(delta) > kTurnThreshold) {
      m.kind = delta > 0.0 ? ManeuverKind::TurnRight : ManeuverKind::TurnLeft;
    } else if (next_street != current_street) {
      m.kind = ManeuverKind::Continue;
    } else {
      continue;
    }
    out.push_back(m);
    current_street = next_street;
    leg_start = k;
  }

  Maneuver arrive;
  arrive.kind = ManeuverKind::Arrive;
  arrive.node = path.back();
  arrive.heading = bearing(coord(path.size() - 2), coord(path.size() - 1));
  arrive.street = current_street;
  arrive.path_index = path.size() - 1;
  // Side from the last nonzero bend of the final leg; a straight approach is "right".
  arrive.side = Side::Right;
  for (std::size_t k = path.size() - 2; k > leg_start; --k) {
    const double z = cross(coord(k - 1), coord(k), coord(k + 1));
    if (z != 0.0) {
      arrive.side = z > 0.0 ? Side::Left : Side::Right;
      break;
    }
  }
  out.push_back(arrive);
  return out;
}

std::vector<Direction> render_directions(const CityGraph& g, const std::vector<Maneuver>& maneuvers) {
  if (maneuvers.size() < 2 || maneuvers.front().kind != ManeuverKind::Head ||
      maneuvers.back().kind != ManeuverKind::Arrive)
    throw ConfigurationError("maneuver list must start with head and end with arrive");
  std::vector<Direction> out;
  for (std::size_t i = 0; i + 1 < maneuvers.size(); ++i) {
    const Maneuver& m = maneuvers[i];
    const std::string& street = g.street(m.street).name;
    Direction d;
    switch (m.kind) {
      case ManeuverKind::Head:
        d.tokens = {"head", compass_words()[static_cast<std::size_t>(m.compass)], "on"};
        break;
      case ManeuverKind::TurnLeft: d.tokens = {"turn", "left", "onto"}; break;
      case ManeuverKind::TurnRight: d.tokens = {"turn", "right", "onto"}; break;
      case ManeuverKind::Continue: d.tokens = {"continue", "onto"}; break;
      case ManeuverKind::Arrive: throw ConfigurationError("arrive maneuver before the end of the list");
    }
    append_words(d.tokens, street);
    d.start_thumb = {m.node, m.heading};
    d.end_thumb = {maneuvers[i + 1].node, maneuvers[i + 1].heading};
    out.push_back(std::move(d));
  }
  const Side side = maneuvers.back().side;
  append_words(out.back().tokens, std::string("your destination will be on the ") + (side == Side::Left ? "left" : "right"));
  return out;
}

Route make_route(const CityGraph& g, std::vector<NodeId> path, int id) {
  const std::vector<Maneuver> maneuvers = segment_maneuvers(g, path);
  Route r;
  r.id = id;
  r.start = {path.front(), maneuvers.front().heading};
  r.goal = path.back();
  for (std::size_t i = 1; i < maneuvers.size(); ++i) r.waypoints.push_back(maneuvers[i].node);
  r.directions = render_directions(g, maneuvers);
  r.path = std::move(path);
  return r;
}

double route_length_meters(const CityGraph& g, const Route& route) {
  double total = 0.0;
  for (std::size_t i = 1; i < route.path.size(); ++i) {
    const auto e = g.edge_between(route.path[i - 1], route.path[i]);
    if (!e) throw ConfigurationError("route path is not a walk in the graph");
    total += g.edges()[static_cast<std::size_t>(*e)].length;
  }
  return total;
}

Route sample_route(const CityGraph& g, const RegionPartition& regions, Region region, Rng& rng,
                   const RouteConstraints& c) {
  const std::vector<NodeId> members = regions.members(region);
  if (members.size() < 2) throw SamplingError(std::string("region '") + region_name(region) + "' has too few nodes");
  for (int attempt = 0; attempt < c.retry_budget; ++attempt) {
    const NodeId start = members[rng.below(members.size())];
    const NodeId goal = members[rng.below(members.size())];
    if (start == goal) continue;
    std::vector<NodeId> path = shortest_path(g, start, goal);
    if (!std::all_of(path.begin(), path.end(), [&](NodeId n) { return regions.of(n) == region; })) continue;
    double meters = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i)
      meters += g.edges()[static_cast<std::size_t>(*g.edge_between(path[i - 1], path[i]))].length;
    if (meters < c.min_meters || meters > c.max_meters) continue;
    Route r = make_route(g, std::move(path));
    const int n = static_cast<int>(r.instruction_count());
    if (n < c.min_instructions || n > c.max_instructions) continue;
    return r;
  }
  throw SamplingError("no route satisfying the constraints found in region '" + std::string(region_name(region)) +
                      "' after " + std::to_string(c.retry_budget) + " attempts");
}

std::vector<Route> sample_routes(const CityGraph& g, const RegionPartition& regions, Region region, int count,
                                 std::uint64_t seed, const RouteConstraints& constraints) {
  Rng rng(seed);
  std::vector<Route> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    Route r = sample_route(g, regions, region, rng, constraints);
    r.id = i;
    out.push_back(std::move(r));
  }
  return out;
}

void validate_route(const CityGraph& g, const Route& route) {
  auto fail = [&](const std::string& what) {
    throw ConfigurationError("route " + std::to_string(route.id) + " does not match the world: " + what);
  };
  if (route.path.size() < 2) fail("path shorter than two nodes");
  for (NodeId n : route.path)
    if (!g.valid(n)) fail("node id out of range");
  for (std::size_t i = 1; i < route.path.size(); ++i)
    if (!g.edge_between(route.path[i - 1], route.path[i])) fail("consecutive path nodes are not adjacent");
  if (route.start.node != route.path.front() || route.goal != route.path.back()) fail("start/goal differ from path ends");
  if (route.waypoints.empty() || route.waypoints.back() != route.goal) fail("goal is not the last waypoint");
  if (route.directions.size() != route.waypoints.size()) fail("direction count differs from waypoint count");
  for (std::size_t i = 0; i < route.directions.size(); ++i) {
    const Direction& d = route.directions[i];
    if (!g.valid(d.start_thumb.node) || !g.valid(d.end_thumb.node)) fail("thumbnail node out of range");
    if (i + 1 < route.directions.size() && !(d.end_thumb == route.directions[i + 1].start_thumb))
      fail("end thumbnail differs from next start thumbnail");
  }
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], static_cast<int>(i));
}

int Vocabulary::index(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnknown : it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(index(t));
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == ' ') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocabulary build_vocab(const std::vector<int>& lexicons) {
  std::vector<std::string> tokens{"<pad>", "<unk>"};
  auto add = [&](const std::string& t) {
    if (std::find(tokens.begin(), tokens.end(), t) == tokens.end()) tokens.push_back(t);
  };
  for (const auto& t : template_tokens()) add(t);
  for (int lex : lexicons)
    for (const auto& t : lexicon_tokens(lex)) add(t);
  return Vocabulary(std::move(tokens));
}

const Vocabulary& default_vocabulary() {
  static const Vocabulary vocab = [] {
    std::vector<int> all;
    for (int i = 0; i < lexicon_count(); ++i) all.push_back(i);
    return build_vocab(all);
  }();
  return vocab;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

json route_to_json(const Route& r) {
  json dirs = json::array();
  for (const Direction& d : r.directions)
    dirs.push_back({{"tokens", d.tokens}, {"start_thumb", pose_json(d.start_thumb)}, {"end_thumb", pose_json(d.end_thumb)}});
  return json{{"id", r.id},     {"start", pose_json(r.start)}, {"goal", r.goal}, {"waypoints", r.waypoints},
              {"path", r.path}, {"directions", dirs}};
}

Route route_from_json(const json& j) {
  try {
    Route r;
    r.id = j.at("id").get<int>();
    r.start = pose_from(j.at("start"));
    r.goal = j.at("goal").get<NodeId>();
    r.waypoints = j.at("waypoints").get<std::vector<NodeId>>();
    r.path = j.at("path").get<std::vector<NodeId>>();
    for (const json& jd : j.at("directions")) {
      Direction d;
      d.tokens = jd.at("tokens").get<std::vector<std::string>>();
      d.start_thumb = pose_from(jd.at("start_thumb"));
      d.end_thumb = pose_from(jd.at("end_thumb"));
      r.directions.push_back(std::move(d));
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed route record: ") + e.what());
  }
}

std::string routes_to_string(const std::vector<Route>& routes) {
  std::string out;
  for (const Route& r : routes) {
    out += route_to_json(r).dump();
    out += '\n';
  }
  return out;
}

void save_routes(const std::vector<Route>& routes, const std::filesystem::path& path) {
  write_text_file(path, routes_to_string(routes));
}

std::vector<Route> load_routes(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<Route> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(route_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw FormatError("routes file line " + std::to_string(out.size() + 1) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace snav
