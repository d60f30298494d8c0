#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "snav/citygraph.hpp"
#include "snav/langdir.hpp"
#include "snav/percept.hpp"
#include "snav/rng.hpp"

namespace snav {

enum class TaskVariant : std::uint8_t { StepByStep, ListIncremental, ListGoal };

const char* variant_name(TaskVariant v);
TaskVariant parse_variant(const std::string& s);  // throws ParameterError

enum class Action : std::uint8_t { Forward = 0, Left10 = 1, Right10 = 2, Left30 = 3, Right30 = 4 };
inline constexpr int kActionCount = 5;
inline constexpr std::array<Action, kActionCount> kAllActions{Action::Forward, Action::Left10, Action::Right10,
                                                              Action::Left30, Action::Right30};
const char* action_name(Action a);
// Heading change of a rotation action (0 for Forward).
double rotation_of(Action a);

struct TaskSpec {
  TaskVariant variant = TaskVariant::StepByStep;
  double goal_reward = 1.0;
  double waypoint_reward = 0.25;
  double shaping_radius = 50.0;
  double shaping_scale = 1.0;
  int max_steps = 1000;
  double forward_fail_p = 0.001;
  // Enables reward shaping and forward failures; off for evaluation.
  bool training_mode = false;

  void validate() const;  // throws ConfigurationError
  bool emits_waypoint_rewards() const { return variant != TaskVariant::ListGoal; }
};

nlohmann::json task_to_json(const TaskSpec& t);
TaskSpec task_from_json(const nlohmann::json& j);

struct AgentState {
  NodeId node = 0;
  double heading = 0.0;
  int t = 0;
  std::vector<bool> visited_waypoints;  // indexed like route.waypoints
  std::vector<double> best_dist;        // shaping bookkeeping, per waypoint
  int active_instruction = 0;           // step-by-step only
  bool done = false;
};

struct StepEvents {
  std::optional<int> waypoint_reached;  // index into route.waypoints
  bool goal_reached = false;
  bool no_op = false;
};

struct RewardParts {
  double waypoint = 0.0;
  double goal = 0.0;
  double shaping = 0.0;
  double total() const { return waypoint + goal + shaping; }
};

struct StepOutcome {
  Observation observation;
  double reward = 0.0;
  RewardParts parts;
  bool done = false;
  StepEvents events;
  std::vector<int> visible_directions;  // indices into route.directions
};

// Everything an episode reads; graph and route are shared read-only.
struct EnvContext {
  const CityGraph* graph = nullptr;
  const Route* route = nullptr;
  TaskSpec task;
  PerceptParams percept;
};

// Throws ConfigurationError when the route does not fit the graph.
std::pair<AgentState, StepOutcome> reset(const EnvContext& ctx);

// Throws LifecycleError when called on a finished episode.
std::pair<AgentState, StepOutcome> step(const EnvContext& ctx, const AgentState& state, Action action, Rng& rng);

// Telescoping bonus for new best distances inside the shaping radius of
// waypoints not yet visited. Updates state.best_dist.
double shaping_bonus(const EnvContext& ctx, AgentState& state, NodeId new_node);

// Neighbor that Forward would move to from (node, heading), if any.
std::optional<NodeId> forward_target(const CityGraph& g, NodeId node, double heading, double half_angle = 30.0);

// First waypoint (in route order) not visited yet; the goal once all are.
NodeId next_target(const Route& route, const AgentState& state);

std::vector<int> visible_directions(const EnvContext& ctx, const AgentState& state);

// One JSON-lines record of the trajectory dump.
nlohmann::json step_record(const AgentState& after, Action action, const StepOutcome& out);

// Stateful convenience wrapper around reset/step.
class Environment {
 public:
  explicit Environment(EnvContext ctx) : ctx_(std::move(ctx)) {}

  const StepOutcome& reset();
  const StepOutcome& step(Action a, Rng& rng);

  const AgentState& state() const { return state_; }
  const StepOutcome& last() const { return last_; }
  const EnvContext& context() const { return ctx_; }

 private:
  EnvContext ctx_;
  AgentState state_;
  StepOutcome last_;
};

}  // namespace snav
