#pragma once

#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "snav/citygraph.hpp"
#include "snav/rng.hpp"

namespace snav {

struct Pose {
  NodeId node = 0;
  double heading = 0.0;

  friend bool operator==(const Pose&, const Pose&) = default;
};

enum class ManeuverKind : std::uint8_t { Head, TurnLeft, TurnRight, Continue, Arrive };
enum class Side : std::uint8_t { Left, Right };

struct Maneuver {
  ManeuverKind kind = ManeuverKind::Head;
  std::int32_t street = 0;  // street taken after the maneuver (arrive: street of arrival)
  int compass = 0;          // index into compass_words(); head only
  Side side = Side::Right;  // arrive only
  NodeId node = 0;
  double heading = 0.0;     // incoming path bearing at node; initial bearing for head
  std::size_t path_index = 0;

  friend bool operator==(const Maneuver&, const Maneuver&) = default;
};

struct Direction {
  std::vector<std::string> tokens;
  Pose start_thumb;
  Pose end_thumb;

  friend bool operator==(const Direction&, const Direction&) = default;
};

struct Route {
  int id = 0;
  Pose start;
  NodeId goal = 0;
  std::vector<NodeId> waypoints;  // maneuver nodes after the start; goal is last
  std::vector<NodeId> path;
  std::vector<Direction> directions;

  std::size_t instruction_count() const { return directions.size(); }

  friend bool operator==(const Route&, const Route&) = default;
};

struct RouteConstraints {
  double min_meters = 50.0;
  double max_meters = std::numeric_limits<double>::infinity();
  int min_instructions = 1;
  int max_instructions = 8;
  int retry_budget = 20000;
};

// Compass word index (0 = north, clockwise in 45 degree steps).
int compass_index(double bearing_deg);

// Throws DegenerateRouteError for paths shorter than two nodes.
std::vector<Maneuver> segment_maneuvers(const CityGraph& g, const std::vector<NodeId>& path);

// One direction per maneuver except arrive, which is merged into the last one.
std::vector<Direction> render_directions(const CityGraph& g, const std::vector<Maneuver>& maneuvers);

// Full route for a given path (start heading = bearing to the second node).
Route make_route(const CityGraph& g, std::vector<NodeId> path, int id = 0);

// Rejection-samples start and goal inside `region` so that the whole path
// stays in the region. Throws SamplingError when the budget is exhausted.
Route sample_route(const CityGraph& g, const RegionPartition& regions, Region region, Rng& rng,
                   const RouteConstraints& constraints = {});

std::vector<Route> sample_routes(const CityGraph& g, const RegionPartition& regions, Region region, int count,
                                 std::uint64_t seed, const RouteConstraints& constraints = {});

double route_length_meters(const CityGraph& g, const Route& route);

// Checks the route against the graph; throws ConfigurationError on mismatch.
void validate_route(const CityGraph& g, const Route& route);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnknown = 1;

  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  int index(std::string_view token) const;
  const std::string& token(int index) const { return tokens_.at(static_cast<std::size_t>(index)); }
  std::size_t size() const { return tokens_.size(); }
  std::vector<int> encode(const std::vector<std::string>& tokens) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Lowercases and splits on spaces; empty pieces are dropped.
std::vector<std::string> tokenize(std::string_view text);

// Template words plus every token of the listed lexicons, in a stable order.
Vocabulary build_vocab(const std::vector<int>& lexicons);
// Vocabulary over every lexicon; shared by all agents.
const Vocabulary& default_vocabulary();

std::string join_tokens(const std::vector<std::string>& tokens);

nlohmann::json route_to_json(const Route& r);
Route route_from_json(const nlohmann::json& j);

// JSON-lines, one route per line.
void save_routes(const std::vector<Route>& routes, const std::filesystem::path& path);
std::vector<Route> load_routes(const std::filesystem::path& path);
std::string routes_to_string(const std::vector<Route>& routes);

}  // namespace snav
