#pragma once

#include <memory>
#include <string>

#include "snav/env.hpp"

namespace snav {

// Shortest-path action toward `target`: Forward when the next path node lies
// within 30 degrees of the heading, otherwise the rotation that leaves the
// smallest remaining angle (ties prefer 30 degree turns, then left).
// Throws OracleError when target is unreachable or already reached.
Action oracle_action(const CityGraph& g, NodeId node, double heading, NodeId target);

// Anything that picks actions inside an episode: scripted baselines here,
// learned agents in the agents module.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string name() const = 0;
  // Called after reset with the first outcome.
  virtual void begin(const EnvContext& ctx, const StepOutcome& first) {
    (void)ctx;
    (void)first;
  }
  // `last` is the outcome that produced `state` (the reset outcome at t = 0).
  virtual Action act(const EnvContext& ctx, const AgentState& state, const StepOutcome& last, Rng& rng) = 0;
};

class RandomController : public Controller {
 public:
  std::string name() const override { return "random"; }
  Action act(const EnvContext&, const AgentState&, const StepOutcome&, Rng& rng) override;
};

class ForwardController : public Controller {
 public:
  std::string name() const override { return "forward"; }
  Action act(const EnvContext&, const AgentState&, const StepOutcome&, Rng&) override { return Action::Forward; }
};

// Follows the shortest path to the next unvisited waypoint.
class OracleController : public Controller {
 public:
  std::string name() const override { return "oracle"; }
  Action act(const EnvContext& ctx, const AgentState& state, const StepOutcome& last, Rng& rng) override;
};

// Oracle whose action is replaced by a uniform random one with probability eps.
class NoisyOracleController : public Controller {
 public:
  explicit NoisyOracleController(double eps) : eps_(eps) {}
  std::string name() const override { return "noisy-oracle"; }
  Action act(const EnvContext& ctx, const AgentState& state, const StepOutcome& last, Rng& rng) override;

 private:
  double eps_;
};

// "random", "forward", "oracle"; throws ParameterError otherwise.
std::unique_ptr<Controller> make_scripted(const std::string& name);

}  // namespace snav
