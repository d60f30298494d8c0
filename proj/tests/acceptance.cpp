// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Arguments select criteria by number.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bandit.hpp"
#include "gradcheck.hpp"
#include "snav/checkpoint.hpp"
#include "snav/error.hpp"
#include "snav/trainer.hpp"
#include "snav/world_io.hpp"

using namespace snav;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Home {
  CityGraph graph = generate_city(CityGenParams{}, 1);
  RegionPartition regions = partition_regions(graph, kDefaultRegionFractions);
  CityGraph second = generate_city(second_city_params(), 2);
};

const Home& home() {
  static const Home h;
  return h;
}

std::vector<Route> routes_with(Region r, int count, std::uint64_t seed, int min_n, int max_n,
                               RouteConstraints c = suite_constraints()) {
  c.min_instructions = min_n;
  c.max_instructions = max_n;
  return sample_routes(home().graph, home().regions, r, count, seed, c);
}

// 1. Oracle soundness.
Verdict oracle_soundness() {
  const auto t0 = Clock::now();
  OracleController oracle;
  const Home& h = home();
  TransferSetup setup{&h.graph, h.regions, &h.second, 125, 101, suite_constraints()};
  int episodes = 0, successes = 0, no_ops = 0;
  for (TaskVariant v : {TaskVariant::StepByStep, TaskVariant::ListIncremental, TaskVariant::ListGoal}) {
    TaskSpec task;
    task.variant = v;
    for (const EvalReport& r : transfer_suite(oracle, setup, task)) {
      episodes += r.episodes;
      successes += r.successes;
      no_ops += r.total_no_ops();
    }
  }
  const double secs = seconds_since(t0);
  return {episodes == 1500 && successes == episodes && no_ops == 0 && secs < 120.0,
          fmt("%d/%d goals over 500 routes x 3 variants, %d no-ops, %.1fs (limit 120s)", successes, episodes, no_ops,
              secs)};
}

// 2. Scripted baselines.
Verdict scripted_baselines() {
  const auto t0 = Clock::now();
  const auto routes = routes_with(Region::Test, 200, 202, 2, 8);
  TaskSpec task;
  task.max_steps = 1000;
  RandomController random;
  ForwardController forward;
  const double r = evaluate(random, home().graph, routes, task, "random").goal_rate;
  const double f = evaluate(forward, home().graph, routes, task, "forward").goal_rate;
  const double secs = seconds_since(t0);
  return {r <= 5.0 && f <= 5.0 && secs < 300.0,
          fmt("random %.1f%%, forward %.1f%% on 200 test routes (limit 5%%), %.1fs", r, f, secs)};
}

// 3. Gradient correctness.
Verdict gradient_correctness() {
  double worst = 0.0;
  int failed = 0, entries = 0;
  const auto note = [&](const testing::GradCheck& g) {
    worst = std::max(worst, g.max_rel_error);
    entries += g.checked;
    failed += g.passed() ? 0 : 1;
  };
  for (std::uint64_t k = 0; k < 100; ++k) note(testing::check_random_graph(k));
  note(testing::check_lstm_unrolled(1, 5));
  note(testing::check_hard_attention_agent(1));
  return {failed == 0, fmt("102 checks, %d failed, max relative error %.2e over %d entries (limit %.0e)", failed, worst,
                           entries, testing::kFdTolerance)};
}

// 4. Policy-gradient sanity.
Verdict bandit_sanity() {
  const auto t0 = Clock::now();
  Rng rng(4);
  bool ok = true;
  std::string detail;
  for (int k = 0; k < 4; ++k) {
    const Hyperparams h = sample_hyperparams(rng);
    const auto run = testing::run_bandit(h.lr, h.entropy, 2000, static_cast<std::uint64_t>(k + 1));
    ok = ok && run.first_above > 0;
    detail += fmt("[lr %.2e sigma %.2e: P %.3f, first >0.95 at %d] ", h.lr, h.entropy, run.p_better, run.first_above);
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 60.0, detail + fmt("%.1fs", secs)};
}

// 5. Desk-scale trainability.
struct SeedResult {
  double held = 0.0;
  double test = 0.0;
  long steps = 0;
  double secs = 0.0;
};

SeedResult train_step_by_step(std::uint64_t seed) {
  const auto t0 = Clock::now();
  const Home& h = home();
  RouteConstraints c;
  c.min_instructions = 2;
  c.max_instructions = 4;
  const auto train = sample_routes(h.graph, h.regions, Region::Train, 2000, hash_combine(seed, 1), c);
  const auto valid = sample_routes(h.graph, h.regions, Region::Train, 100, hash_combine(seed, 2), c);
  const auto held = sample_routes(h.graph, h.regions, Region::Train, 200, 505, c);
  const auto test = sample_routes(h.graph, h.regions, Region::Test, 200, 506, c);

  AgentConfig cfg;
  cfg.arch = Architecture::AllSum;
  cfg.sizes = AgentSizes{16, 32, 2, 64, 2, 64, 32};
  ParamSet ps;
  Rng init(seed);
  const Network net(cfg, ps, init);
  TrainConfig tc;
  tc.lr = 1e-3;
  tc.seed = seed;
  tc.task.variant = TaskVariant::StepByStep;
  tc.task.max_steps = 200;
  Trainer trainer(net, ps, tc, TrainData{&h.graph, train, {}});

  TaskSpec eval_task;
  eval_task.variant = TaskVariant::StepByStep;
  const auto rate = [&](const ParamSet& p, const std::vector<Route>& routes) {
    NeuralController agent(net, p);
    return evaluate(agent, h.graph, routes, eval_task, "s").goal_rate;
  };

  constexpr long kBudget = 5'000'000;
  constexpr long kEpisodes = 30'000;
  constexpr long kCheckEvery = 2'000;
  ParamSet best = ps;
  double best_valid = -1.0;
  for (long e = 1; e <= kEpisodes && trainer.env_steps() < kBudget; ++e) {
    // Alternate teacher and student episodes.
    trainer.forced_update(e % 2 == 0 ? RolloutMode::Teacher : RolloutMode::Student);
    if (e % kCheckEvery == 0) {
      const double v = rate(ps, valid);
      if (v > best_valid) {
        best_valid = v;
        best = ps;
      }
    }
  }
  return {rate(best, held), rate(best, test), trainer.env_steps(), seconds_since(t0)};
}

Verdict trainability() {
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const SeedResult r = train_step_by_step(seed);
    detail += fmt("[seed %d: held %.1f%% test %.1f%% after %ld steps, %.0fs] ", static_cast<int>(seed), r.held, r.test,
                  r.steps, r.secs);
    if (r.held >= 80.0 && r.test >= 50.0) return {true, detail + "(limits 80% held, 50% test)"};
  }
  return {false, detail + "(limits 80% held, 50% test)"};
}

// 6. Attention structure.
Verdict attention_structure() {
  const Home& h = home();
  AgentConfig cfg;
  cfg.arch = Architecture::HardA;
  cfg.sizes = AgentSizes{8, 16, 16, 16, 1, 16, 8};
  ParamSet ps;
  Rng rng(6);
  const Network net(cfg, ps, rng);
  TaskSpec task;
  task.variant = TaskVariant::ListIncremental;
  long steps = 0, matches = 0;
  bool monotone = true;
  for (const Route& route : routes_with(Region::Train, 200, 606, 2, 8)) {
    const EnvContext ctx{&h.graph, &route, task, {}};
    NeuralController agent(net, ps);
    OracleController oracle;
    auto [state, out] = reset(ctx);
    agent.begin(ctx, out);
    int prev = 0;
    while (!state.done) {
      agent.act(ctx, state, out, rng);
      const int active = agent.episode().active;
      monotone = monotone && active >= prev && active - prev <= 1;
      prev = active;
      const auto pos = std::find(route.path.begin(), route.path.end(), state.node) - route.path.begin();
      int truth = 0;
      for (std::size_t k = 0; k + 1 < route.waypoints.size(); ++k)
        if (std::find(route.path.begin(), route.path.end(), route.waypoints[k]) - route.path.begin() <= pos) ++truth;
      ++steps;
      matches += active == truth ? 1 : 0;
      auto next = step(ctx, state, oracle.act(ctx, state, out, rng), rng);
      state = std::move(next.first);
      out = std::move(next.second);
    }
  }
  const double seg = 100.0 * static_cast<double>(matches) / static_cast<double>(steps);

  Rng draw(66);
  int exact = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto n = static_cast<std::size_t>(1 + draw.below(8));
    const auto dim = static_cast<std::size_t>(1 + draw.below(8));
    std::vector<double> x(dim);
    for (double& v : x) v = draw.normal();
    std::vector<std::vector<double>> thumbs(n, std::vector<double>(dim));
    for (auto& t : thumbs)
      for (double& v : t) v = draw.normal();
    std::size_t nearest = 0;
    double best = 1e300;
    for (std::size_t i = 0; i < n; ++i) {
      double d = 0.0;
      for (std::size_t k = 0; k < dim; ++k) d += (thumbs[i][k] - x[k]) * (thumbs[i][k] - x[k]);
      if (d < best) {
        best = d;
        nearest = i;
      }
    }
    exact += hard_attend(x, thumbs).best == static_cast<int>(nearest) ? 1 : 0;
  }
  return {seg >= 99.0 && monotone && exact == 10000,
          fmt("segmentation %.2f%% of %ld steps (limit 99%%), %s; nearest thumbnail %d/10000", seg, steps,
              monotone ? "monotone" : "NOT monotone", exact)};
}

// 7. Capacity contract.
Verdict capacity_contract() {
  const Home& h = home();
  const RegionPartition all = whole_city(h.graph);
  RouteConstraints c;
  std::vector<Route> routes;
  for (int n = 2; n <= 8; ++n) {
    c.min_instructions = c.max_instructions = n;
    for (Route& r : sample_routes(h.graph, all, Region::Train, 10, hash_combine(707, static_cast<std::uint64_t>(n)), c))
      routes.push_back(std::move(r));
  }
  RouteConstraints short_c;
  short_c.min_instructions = 2;
  short_c.max_instructions = 4;
  const auto train = sample_routes(h.graph, h.regions, Region::Train, 20, 708, short_c);

  TaskSpec task;
  task.variant = TaskVariant::ListIncremental;
  task.max_steps = 100;
  bool ok = true;
  std::string detail;
  for (Architecture arch : {Architecture::AllConcat, Architecture::AllSum, Architecture::HardA}) {
    AgentConfig cfg;
    cfg.arch = arch;
    cfg.max_directions = 4;
    cfg.sizes = AgentSizes{8, 16, 16, 16, 1, 16, 8};
    ParamSet ps;
    Rng rng(7);
    const Network net(cfg, ps, rng);
    TrainConfig tc;
    tc.task = task;
    tc.episodes_per_update = 2;
    Trainer trainer(net, ps, tc, TrainData{&h.graph, train, {}});
    for (int u = 0; u < 5; ++u) trainer.update();

    NeuralController agent(net, ps);
    const auto reports = longer_lists_suite(agent, h.graph, routes, 8, task);
    std::string errs;
    std::set<int> seen;
    for (const EvalReport& r : reports) {
      const int n = std::stoi(r.suite.substr(2));
      seen.insert(n);
      const bool expect_error = arch == Architecture::AllConcat && n > 4;
      ok = ok && r.error.has_value() == expect_error;
      errs += r.error ? "E" : ".";
    }
    ok = ok && seen.size() == 7;
    detail += fmt("[%s n=2..8: %s] ", architecture_name(arch), errs.c_str());
  }
  return {ok, detail + "(E = capacity error)"};
}

// 8. Reward-protocol invariants.
Verdict reward_invariants() {
  const Home& h = home();
  const auto routes = routes_with(Region::Train, 100, 808, 2, 6);
  long episodes = 0, violations = 0;
  double max_share = 0.0;
  std::string first;
  const auto fail = [&](const std::string& what) {
    if (violations++ == 0) first = what;
  };

  for (TaskVariant v : {TaskVariant::StepByStep, TaskVariant::ListIncremental, TaskVariant::ListGoal}) {
    for (const Route& route : routes) {
      for (double eps : {0.2, 0.5}) {
        EnvContext ctx{&h.graph, &route, TaskSpec{}, {}};
        ctx.task.variant = v;
        ctx.task.training_mode = true;
        ctx.task.forward_fail_p = 0.1;
        ctx.task.max_steps = 300;
        const double cap = ctx.task.shaping_scale * ctx.task.waypoint_reward;
        NoisyOracleController agent(eps);
        Rng rng(hash_combine(static_cast<std::uint64_t>(route.id), static_cast<std::uint64_t>(eps * 10)));
        auto [state, out] = reset(ctx);
        std::vector<int> paid(route.waypoints.size(), 0);
        std::vector<double> sole_shaping(route.waypoints.size(), 0.0);
        std::vector<double> rewards;
        double shaping = 0.0;
        while (!state.done) {
          const std::vector<bool> visited = state.visited_waypoints;
          auto next = step(ctx, state, agent.act(ctx, state, out, rng), rng);
          state = std::move(next.first);
          out = std::move(next.second);
          rewards.push_back(out.reward);
          if (out.events.waypoint_reached) ++paid[static_cast<std::size_t>(*out.events.waypoint_reached)];
          if (v == TaskVariant::ListGoal && out.reward != (out.events.goal_reached ? ctx.task.goal_reward : 0.0))
            fail("list-goal reward away from the goal");
          if (out.parts.shaping > 0.0) {
            shaping += out.parts.shaping;
            std::vector<std::size_t> near;
            for (std::size_t i = 0; i < route.waypoints.size(); ++i)
              if (!visited[i] && distance(h.graph.node(state.node).coord,
                                          h.graph.node(route.waypoints[i]).coord) < ctx.task.shaping_radius)
                near.push_back(i);
            if (near.empty()) fail("shaping far from every unvisited waypoint");
            if (near.size() == 1) sole_shaping[near[0]] += out.parts.shaping;
          }
        }
        for (std::size_t i = 0; i < paid.size(); ++i) {
          if (paid[i] > 1) fail("waypoint paid twice");
          if (sole_shaping[i] > cap + 1e-12) fail("shaping above the per-waypoint cap");
          max_share = std::max(max_share, sole_shaping[i] / cap);
        }
        if (shaping > cap * static_cast<double>(route.waypoints.size()) + 1e-12) fail("total shaping above the cap");
        if (v == TaskVariant::ListGoal && shaping != 0.0) fail("list-goal shaping");

        const auto ret = discounted_returns(rewards, 0.99);
        for (std::size_t t = 0; t < ret.size(); ++t) {
          const double next_ret = t + 1 < ret.size() ? ret[t + 1] : 0.0;
          if (std::abs(ret[t] - (rewards[t] + 0.99 * next_ret)) > 1e-9) fail("return recursion");
        }
        ++episodes;
      }
    }
  }

  // Evaluation mode: no shaping and no forward failures even when requested.
  TaskSpec task;
  task.training_mode = true;
  task.forward_fail_p = 1.0;
  double eval_shaping = 0.0;
  EvalOptions opts;
  opts.on_step = [&](const Route&, const AgentState&, Action, const StepOutcome& o) { eval_shaping += o.parts.shaping; };
  OracleController oracle;
  const EvalReport r = evaluate(oracle, h.graph, routes, task, "eval", opts);
  if (r.goal_rate != 100.0 || r.total_no_ops() != 0) fail("forward failure during evaluation");
  if (eval_shaping != 0.0) fail("shaping during evaluation");

  return {violations == 0, fmt("%ld training episodes + %d evaluation episodes, %ld violations%s%s; max per-waypoint "
                               "shaping %.3f of the cap",
                               episodes, r.episodes, violations, violations ? ", first: " : "", first.c_str(),
                               max_share)};
}

// 9. Forcing baselines.
Verdict forcing_baselines() {
  const Home& h = home();
  const auto train = routes_with(Region::Train, 20, 909, 2, 4);
  AgentConfig cfg;
  cfg.arch = Architecture::AllSum;
  cfg.sizes = AgentSizes{16, 32, 64, 64, 2, 64, 32};
  ParamSet ps;
  Rng init(9);
  const Network net(cfg, ps, init);
  TrainConfig tc;
  tc.lr = 1e-3;
  tc.seed = 9;
  Trainer trainer(net, ps, tc, TrainData{&h.graph, train, {}});

  TaskSpec task = tc.task;
  task.training_mode = true;
  const auto route_ce = [&] {
    double ce = 0.0;
    long steps = 0;
    for (const Route& r : train) {
      const EnvContext ctx{&h.graph, &r, task, {}};
      Tape t;
      Rng rng(1);
      const Trajectory tr = collect_episode(t, net, ps, ctx, rng, RolloutMode::Teacher);
      LossStats ls;
      forced_loss(t, tr, &ls);
      ce += ls.cross_entropy * tr.steps();
      steps += tr.steps();
    }
    return ce / static_cast<double>(steps);
  };
  int reached = -1;
  for (int e = 1; e <= 2000 && reached < 0; ++e) {
    trainer.forced_update(RolloutMode::Teacher);
    if (e % 100 == 0 && route_ce() < 0.1) reached = e;
  }
  const double ce = route_ce();

  // Teacher trajectories against a plain oracle replay.
  int equal = 0;
  const auto routes = routes_with(Region::Valid, 100, 910, 2, 8);
  for (const Route& r : routes) {
    const EnvContext ctx{&h.graph, &r, task, {}};
    Tape t;
    Rng rng(hash_combine(11, static_cast<std::uint64_t>(r.id)));
    const Trajectory tr = collect_episode(t, net, ps, ctx, rng, RolloutMode::Teacher);
    Rng replay(hash_combine(11, static_cast<std::uint64_t>(r.id)));
    OracleController oracle;
    auto [state, out] = reset(ctx);
    std::vector<Action> actions;
    std::vector<NodeId> nodes;
    while (!state.done) {
      const Action a = oracle.act(ctx, state, out, replay);
      auto next = step(ctx, state, a, replay);
      state = std::move(next.first);
      out = std::move(next.second);
      actions.push_back(a);
      nodes.push_back(state.node);
    }
    equal += actions == tr.actions && nodes == tr.nodes ? 1 : 0;
  }
  return {reached > 0 && equal == static_cast<int>(routes.size()),
          fmt("cross-entropy %.4f nats after %ld episodes, below 0.1 at episode %d (limit 2000); teacher == oracle on "
              "%d/%zu routes",
              ce, trainer.updates(), reached, equal, routes.size())};
}

// 10. Reproducibility.
Verdict reproducibility() {
  const Home& h = home();
  const auto train = routes_with(Region::Train, 20, 1010, 2, 4);
  const auto run = [&] {
    AgentConfig cfg;
    cfg.arch = Architecture::HardA;
    cfg.sizes = AgentSizes{8, 16, 16, 16, 1, 16, 8};
    ParamSet ps;
    Rng init(10);
    const Network net(cfg, ps, init);
    TrainConfig tc;
    tc.seed = 10;
    tc.workers = 1;
    tc.max_env_steps = 20'000;
    tc.task.max_steps = 200;
    Trainer trainer(net, ps, tc, TrainData{&h.graph, train, {}});
    trainer.train();
    return encode_checkpoint(ps, nlohmann::json{{"agent", agent_config_to_json(cfg)}, {"seed", 10}});
  };
  const std::string a = run(), b = run();
  const bool world_same = world_to_string(generate_city(CityGenParams{}, 10)) ==
                          world_to_string(generate_city(CityGenParams{}, 10));
  const bool routes_same = routes_to_string(routes_with(Region::Test, 50, 1011, 2, 8)) ==
                           routes_to_string(routes_with(Region::Test, 50, 1011, 2, 8));
  return {a == b && world_same && routes_same,
          fmt("checkpoints %s (%zu bytes), world %s, routes %s", a == b ? "identical" : "DIFFER", a.size(),
              world_same ? "identical" : "DIFFER", routes_same ? "identical" : "DIFFER")};
}

struct Criterion {
  int number;
  const char* name;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "oracle soundness", oracle_soundness},
      {2, "scripted baselines", scripted_baselines},
      {3, "gradient correctness", gradient_correctness},
      {4, "policy-gradient sanity", bandit_sanity},
      {5, "desk-scale trainability", trainability},
      {6, "attention structure", attention_structure},
      {7, "capacity contract", capacity_contract},
      {8, "reward-protocol invariants", reward_invariants},
      {9, "forcing baselines", forcing_baselines},
      {10, "reproducibility", reproducibility},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.number)) continue;
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::printf("criterion %2d %-28s %s  %s\n", c.number, c.name, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
