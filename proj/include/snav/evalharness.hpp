#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "snav/env.hpp"
#include "snav/scripted.hpp"

namespace snav {

struct RouteOutcome {
  int route_id = 0;
  bool success = false;
  int steps = 0;
  int no_ops = 0;
};

struct EvalReport {
  std::string suite;
  int episodes = 0;
  int successes = 0;
  double goal_rate = 0.0;  // percent
  double ci_low = 0.0;     // 95% normal approximation, clamped to [0, 100]
  double ci_high = 0.0;
  std::optional<double> mean_steps;  // successes only
  std::vector<RouteOutcome> per_route;
  std::optional<std::string> error;  // set instead of a score (capacity errors)

  nlohmann::json to_json() const;
  int total_no_ops() const;
};

// Fills goal_rate, CI and mean_steps from per_route.
void finalize_report(EvalReport& r);

struct EvalOptions {
  std::uint64_t seed = 1;
  PerceptParams percept;
  // Called with every (state, action, outcome) triple; used by rollout dumps.
  std::function<void(const Route&, const AgentState&, Action, const StepOutcome&)> on_step;
};

// Runs one episode per route with training_mode forced off. Throws
// ConfigurationError for an empty route list.
EvalReport evaluate(Controller& agent, const CityGraph& g, const std::vector<Route>& routes, TaskSpec task,
                    const std::string& suite, const EvalOptions& opts = {});

// Route constraints of the standard evaluation suites: at least 300 m and
// two instructions, so that no suite route is a single straight street.
RouteConstraints suite_constraints();

// Treats every node of the graph as one region (second-city evaluation).
RegionPartition whole_city(const CityGraph& g);

struct TransferSetup {
  const CityGraph* home = nullptr;
  RegionPartition regions;
  const CityGraph* second = nullptr;
  int routes_per_suite = 200;
  std::uint64_t route_seed = 11;
  RouteConstraints constraints = suite_constraints();
};

// Reports for the train, valid and test regions and the second city, in that order.
std::vector<EvalReport> transfer_suite(Controller& agent, const TransferSetup& setup, const TaskSpec& task,
                                       const EvalOptions& opts = {});

// Per-N reports for instruction counts 2..max_n. Routes are bucketed by
// exact instruction count; empty buckets are skipped. A CapacityError from
// the agent is recorded in the bucket's report instead of a score.
std::vector<EvalReport> longer_lists_suite(Controller& agent, const CityGraph& g, const std::vector<Route>& routes,
                                           int max_n, const TaskSpec& task, const EvalOptions& opts = {});

}  // namespace snav
