#include "snav/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "snav/error.hpp"

namespace snav {

using nlohmann::json;

json EvalReport::to_json() const {
  json routes = json::array();
  for (const RouteOutcome& o : per_route)
    routes.push_back({{"route_id", o.route_id}, {"success", o.success}, {"steps", o.steps}});
  json j{{"suite", suite},
         {"episodes", episodes},
         {"successes", successes},
         {"goal_rate", goal_rate},
         {"ci95", {ci_low, ci_high}},
         {"mean_steps", mean_steps ? json(*mean_steps) : json(nullptr)},
         {"per_route", routes}};
  if (error) j["error"] = *error;
  return j;
}

int EvalReport::total_no_ops() const {
  int n = 0;
  for (const RouteOutcome& o : per_route) n += o.no_ops;
  return n;
}

void finalize_report(EvalReport& r) {
  r.episodes = static_cast<int>(r.per_route.size());
  r.successes = 0;
  double steps = 0.0;
  for (const RouteOutcome& o : r.per_route) {
    if (!o.success) continue;
    ++r.successes;
    steps += o.steps;
  }
  if (r.episodes == 0) {
    r.goal_rate = r.ci_low = r.ci_high = 0.0;
    r.mean_steps.reset();
    return;
  }
  const double p = static_cast<double>(r.successes) / r.episodes;
  const double half = 1.96 * std::sqrt(p * (1.0 - p) / r.episodes);
  r.goal_rate = 100.0 * r.successes / r.episodes;
  r.ci_low = std::clamp(100.0 * (p - half), 0.0, 100.0);
  r.ci_high = std::clamp(100.0 * (p + half), 0.0, 100.0);
  if (r.successes > 0)
    r.mean_steps = steps / r.successes;
  else
    r.mean_steps.reset();
}

EvalReport evaluate(Controller& agent, const CityGraph& g, const std::vector<Route>& routes, TaskSpec task,
                    const std::string& suite, const EvalOptions& opts) {
  if (routes.empty()) throw ConfigurationError("evaluation suite '" + suite + "' has no routes");
  task.training_mode = false;
  EvalReport report;
  report.suite = suite;
  for (std::size_t i = 0; i < routes.size(); ++i) {
    const Route& route = routes[i];
    EnvContext ctx{&g, &route, task, opts.percept};
    Rng rng(hash_combine(opts.seed, i));
    auto [state, out] = reset(ctx);
    agent.begin(ctx, out);
    RouteOutcome o;
    o.route_id = route.id;
    while (!state.done) {
      const Action a = agent.act(ctx, state, out, rng);
      auto next = step(ctx, state, a, rng);
      state = std::move(next.first);
      out = std::move(next.second);
      if (out.events.no_op) ++o.no_ops;
      if (opts.on_step) opts.on_step(route, state, a, out);
    }
    o.success = out.events.goal_reached;
    o.steps = state.t;
    report.per_route.push_back(o);
  }
  finalize_report(report);
  return report;
}

RouteConstraints suite_constraints() {
  RouteConstraints c;
  c.min_meters = 300.0;
  c.min_instructions = 2;
  return c;
}

RegionPartition whole_city(const CityGraph& g) {
  RegionPartition p;
  p.labels.assign(g.node_count(), Region::Train);
  double lo = 0.0, hi = 0.0;
  for (const Node& n : g.nodes()) {
    lo = std::min(lo, n.coord.x);
    hi = std::max(hi, n.coord.x);
  }
  p.x_min = lo;
  p.cut0 = p.cut1 = p.x_max = hi;
  return p;
}

std::vector<EvalReport> transfer_suite(Controller& agent, const TransferSetup& setup, const TaskSpec& task,
                                       const EvalOptions& opts) {
  if (!setup.home || !setup.second) throw ConfigurationError("transfer suite needs both cities");
  std::vector<EvalReport> out;
  for (Region r : {Region::Train, Region::Valid, Region::Test}) {
    const auto routes = sample_routes(*setup.home, setup.regions, r, setup.routes_per_suite,
                                      hash_combine(setup.route_seed, static_cast<std::uint64_t>(r)), setup.constraints);
    out.push_back(evaluate(agent, *setup.home, routes, task, std::string(region_name(r)) + "-region", opts));
  }
  const auto routes = sample_routes(*setup.second, whole_city(*setup.second), Region::Train, setup.routes_per_suite,
                                    hash_combine(setup.route_seed, 99), setup.constraints);
  out.push_back(evaluate(agent, *setup.second, routes, task, "second-city", opts));
  return out;
}

std::vector<EvalReport> longer_lists_suite(Controller& agent, const CityGraph& g, const std::vector<Route>& routes,
                                           int max_n, const TaskSpec& task, const EvalOptions& opts) {
  std::vector<EvalReport> out;
  for (int n = 2; n <= max_n; ++n) {
    std::vector<Route> bucket;
    for (const Route& r : routes)
      if (static_cast<int>(r.instruction_count()) == n) bucket.push_back(r);
    const std::string name = "n=" + std::to_string(n);
    if (bucket.empty()) {
      std::cerr << "longer-lists: no routes with " << n << " instructions, bucket skipped\n";
      continue;
    }
    try {
      out.push_back(evaluate(agent, g, bucket, task, name, opts));
    } catch (const CapacityError& e) {
      EvalReport r;
      r.suite = name;
      r.error = e.what();
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace snav
