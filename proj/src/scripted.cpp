#include "snav/scripted.hpp"

#include "snav/error.hpp"

namespace snav {

Action oracle_action(const CityGraph& g, NodeId node, double heading, NodeId target) {
  if (node == target) throw OracleError("oracle asked for an action at its own target");
  std::vector<NodeId> path;
  try {
    path = shortest_path(g, node, target);
  } catch (const NoPathError& e) {
    throw OracleError(std::string("oracle target unreachable: ") + e.what());
  }
  const double b = bearing(g.node(node).coord, g.node(path[1]).coord);
  if (ang_diff(heading, b) <= 30.0) return Action::Forward;

  // Candidate order encodes the tie rule: 30 degree turns first, left first.
  constexpr Action order[] = {Action::Left30, Action::Right30, Action::Left10, Action::Right10};
  Action best = order[0];
  double best_diff = 1e9;
  for (Action a : order) {
    const double d = ang_diff(wrap_heading(heading + rotation_of(a)), b);
    if (d < best_diff) {
      best = a;
      best_diff = d;
    }
  }
  return best;
}

Action RandomController::act(const EnvContext&, const AgentState&, const StepOutcome&, Rng& rng) {
  return kAllActions[rng.below(kActionCount)];
}

Action OracleController::act(const EnvContext& ctx, const AgentState& state, const StepOutcome&, Rng&) {
  return oracle_action(*ctx.graph, state.node, state.heading, next_target(*ctx.route, state));
}

Action NoisyOracleController::act(const EnvContext& ctx, const AgentState& state, const StepOutcome&, Rng& rng) {
  if (rng.bernoulli(eps_)) return kAllActions[rng.below(kActionCount)];
  return oracle_action(*ctx.graph, state.node, state.heading, next_target(*ctx.route, state));
}

std::unique_ptr<Controller> make_scripted(const std::string& name) {
  if (name == "random") return std::make_unique<RandomController>();
  if (name == "forward") return std::make_unique<ForwardController>();
  if (name == "oracle") return std::make_unique<OracleController>();
  throw ParameterError("unknown scripted policy '" + name + "' (expected oracle, random or forward)");
}

}  // namespace snav
