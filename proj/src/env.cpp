#include "snav/env.hpp"

#include <algorithm>
#include <cmath>

#include "snav/error.hpp"

namespace snav {

using nlohmann::json;

const char* variant_name(TaskVariant v) {
  switch (v) {
    case TaskVariant::StepByStep: return "step-by-step";
    case TaskVariant::ListIncremental: return "list-incremental";
    case TaskVariant::ListGoal: return "list-goal";
  }
  return "?";
}

TaskVariant parse_variant(const std::string& s) {
  if (s == "step-by-step") return TaskVariant::StepByStep;
  if (s == "list-incremental") return TaskVariant::ListIncremental;
  if (s == "list-goal") return TaskVariant::ListGoal;
  throw ParameterError("unknown task variant '" + s + "' (expected step-by-step, list-incremental or list-goal)");
}

const char* action_name(Action a) {
  switch (a) {
    case Action::Forward: return "forward";
    case Action::Left10: return "left10";
    case Action::Right10: return "right10";
    case Action::Left30: return "left30";
    case Action::Right30: return "right30";
  }
  return "?";
}

double rotation_of(Action a) {
  switch (a) {
    case Action::Forward: return 0.0;
    case Action::Left10: return -10.0;
    case Action::Right10: return 10.0;
    case Action::Left30: return -30.0;
    case Action::Right30: return 30.0;
  }
  return 0.0;
}

void TaskSpec::validate() const {
  if (!(goal_reward > waypoint_reward) || waypoint_reward < 0.0)
    throw ConfigurationError("rewards must satisfy R_g > R_w >= 0");
  if (!(shaping_radius > 0.0) || shaping_scale < 0.0) throw ConfigurationError("bad shaping parameters");
  if (max_steps < 1) throw ConfigurationError("T_max must be positive");
  if (forward_fail_p < 0.0 || forward_fail_p > 1.0) throw ConfigurationError("forward_fail_p must be a probability");
}

json task_to_json(const TaskSpec& t) {
  return json{{"variant", variant_name(t.variant)},
              {"goal_reward", t.goal_reward},
              {"waypoint_reward", t.waypoint_reward},
              {"shaping_radius", t.shaping_radius},
              {"shaping_scale", t.shaping_scale},
              {"max_steps", t.max_steps},
              {"forward_fail_p", t.forward_fail_p},
              {"training_mode", t.training_mode}};
}

TaskSpec task_from_json(const json& j) {
  TaskSpec t;
  t.variant = parse_variant(j.value("variant", std::string(variant_name(t.variant))));
  t.goal_reward = j.value("goal_reward", t.goal_reward);
  t.waypoint_reward = j.value("waypoint_reward", t.waypoint_reward);
  t.shaping_radius = j.value("shaping_radius", t.shaping_radius);
  t.shaping_scale = j.value("shaping_scale", t.shaping_scale);
  t.max_steps = j.value("max_steps", t.max_steps);
  t.forward_fail_p = j.value("forward_fail_p", t.forward_fail_p);
  t.training_mode = j.value("training_mode", t.training_mode);
  t.validate();
  return t;
}

std::optional<NodeId> forward_target(const CityGraph& g, NodeId node, double heading, double half_angle) {
  const Vec2 at = g.node(node).coord;
  std::optional<NodeId> best;
  double best_diff = 0.0;
  // Neighbors come sorted by id, so strict comparison keeps the smaller id on ties.
  for (const Adjacency& adj : g.neighbors(node)) {
    const double d = ang_diff(heading, bearing(at, g.node(adj.neighbor).coord));
    if (d <= half_angle && (!best || d < best_diff)) {
      best = adj.neighbor;
      best_diff = d;
    }
  }
  return best;
}

NodeId next_target(const Route& route, const AgentState& state) {
  for (std::size_t i = 0; i < route.waypoints.size(); ++i)
    if (i >= state.visited_waypoints.size() || !state.visited_waypoints[i]) return route.waypoints[i];
  return route.goal;
}

std::vector<int> visible_directions(const EnvContext& ctx, const AgentState& state) {
  const int n = static_cast<int>(ctx.route->directions.size());
  if (ctx.task.variant == TaskVariant::StepByStep) return {std::min(state.active_instruction, n - 1)};
  std::vector<int> all(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  return all;
}

std::pair<AgentState, StepOutcome> reset(const EnvContext& ctx) {
  if (!ctx.graph || !ctx.route) throw ConfigurationError("environment context lacks a graph or route");
  ctx.task.validate();
  validate_route(*ctx.graph, *ctx.route);
  AgentState s;
  s.node = ctx.route->start.node;
  s.heading = wrap_heading(ctx.route->start.heading);
  s.visited_waypoints.assign(ctx.route->waypoints.size(), false);
  s.best_dist.assign(ctx.route->waypoints.size(), ctx.task.shaping_radius);
  StepOutcome out;
  out.observation = observe(*ctx.graph, s.node, s.heading, ctx.percept);
  out.visible_directions = visible_directions(ctx, s);
  return {std::move(s), std::move(out)};
}

double shaping_bonus(const EnvContext& ctx, AgentState& state, NodeId new_node) {
  if (!ctx.task.training_mode || !ctx.task.emits_waypoint_rewards()) return 0.0;
  const Vec2 at = ctx.graph->node(new_node).coord;
  double bonus = 0.0;
  for (std::size_t i = 0; i < ctx.route->waypoints.size(); ++i) {
    if (state.visited_waypoints[i]) continue;
    const double d = distance(at, ctx.graph->node(ctx.route->waypoints[i]).coord);
    if (d < ctx.task.shaping_radius && d < state.best_dist[i]) {
      bonus += ctx.task.shaping_scale * ctx.task.waypoint_reward * (state.best_dist[i] - d) / ctx.task.shaping_radius;
      state.best_dist[i] = d;
    }
  }
  return bonus;
}

std::pair<AgentState, StepOutcome> step(const EnvContext& ctx, const AgentState& state, Action action, Rng& rng) {
  if (state.done) throw LifecycleError("step called after the episode finished");
  AgentState s = state;
  StepOutcome out;
  s.t += 1;

  if (action == Action::Forward) {
    const bool suppressed = ctx.task.training_mode && rng.bernoulli(ctx.task.forward_fail_p);
    const std::optional<NodeId> target = forward_target(*ctx.graph, s.node, s.heading);
    if (!target || suppressed) {
      out.events.no_op = true;
    } else {
      s.node = *target;
      out.parts.shaping = shaping_bonus(ctx, s, s.node);
      const auto& wps = ctx.route->waypoints;
      const auto it = std::find(wps.begin(), wps.end(), s.node);
      if (it != wps.end()) {
        const auto idx = static_cast<std::size_t>(it - wps.begin());
        if (!s.visited_waypoints[idx]) {
          s.visited_waypoints[idx] = true;
          out.events.waypoint_reached = static_cast<int>(idx);
          if (ctx.task.emits_waypoint_rewards()) out.parts.waypoint = ctx.task.waypoint_reward;
          if (ctx.task.variant == TaskVariant::StepByStep)
            s.active_instruction = std::min(s.active_instruction + 1, static_cast<int>(wps.size()) - 1);
        }
      }
      if (s.node == ctx.route->goal) {
        out.events.goal_reached = true;
        out.parts.goal = ctx.task.goal_reward;
      }
    }
  } else {
    s.heading = wrap_heading(s.heading + rotation_of(action));
  }

  out.reward = out.parts.total();
  s.done = out.events.goal_reached || s.t >= ctx.task.max_steps;
  out.done = s.done;
  out.observation = observe(*ctx.graph, s.node, s.heading, ctx.percept);
  out.visible_directions = visible_directions(ctx, s);
  return {std::move(s), std::move(out)};
}

json step_record(const AgentState& after, Action action, const StepOutcome& out) {
  json events = json::object();
  if (out.events.waypoint_reached) events["waypoint_reached"] = *out.events.waypoint_reached;
  if (out.events.goal_reached) events["goal_reached"] = true;
  if (out.events.no_op) events["no_op"] = true;
  return json{{"t", after.t},          {"node", after.node},    {"heading", after.heading},
              {"action", action_name(action)}, {"reward", out.reward}, {"events", events}};
}

const StepOutcome& Environment::reset() {
  auto [s, o] = snav::reset(ctx_);
  state_ = std::move(s);
  last_ = std::move(o);
  return last_;
}

const StepOutcome& Environment::step(Action a, Rng& rng) {
  auto [s, o] = snav::step(ctx_, state_, a, rng);
  state_ = std::move(s);
  last_ = std::move(o);
  return last_;
}

}  // namespace snav
