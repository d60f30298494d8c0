// snav: command-line front end for world generation, training, evaluation
// and trajectory dumps. Every command writes <output>.manifest.json before
// it starts working.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "snav/checkpoint.hpp"
#include "snav/error.hpp"
#include "snav/trainer.hpp"
#include "snav/world_io.hpp"

using namespace snav;
using nlohmann::json;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Manifest {
  std::string command;
  json config = json::object();
  json seeds = json::object();
  json inputs = json::object();
  json outputs = json::object();
};

void write_manifest(const std::string& primary, const Manifest& m, const std::vector<std::string>& argv) {
  const json j{{"command", m.command},
               {"argv", argv},
               {"config", m.config},
               {"seeds", m.seeds},
               {"inputs", m.inputs},
               {"outputs", m.outputs},
               {"code_version", SNAV_VERSION},
               {"started_at", utc_now()}};
  write_text_file(primary + ".manifest.json", j.dump(2) + "\n");
}

void write_json(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

// SNAV_SEED, when set, replaces --seed.
std::uint64_t effective_seed(std::uint64_t flag) {
  const char* env = std::getenv("SNAV_SEED");
  if (!env) return flag;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw ParameterError(std::string("SNAV_SEED is not an unsigned integer: '") + env + "'");
  }
}

RegionPartition regions_for(const CityGraph& g, const std::string& region) {
  return region == "all" ? whole_city(g) : partition_regions(g, kDefaultRegionFractions);
}

// Agent loaded from a checkpoint, or a scripted policy.
struct LoadedAgent {
  std::optional<Checkpoint> ckpt;
  std::optional<Network> net;
  std::unique_ptr<Controller> controller;
  json header;
};

LoadedAgent load_agent(const std::string& ckpt_path, const std::string& policy, bool greedy) {
  LoadedAgent a;
  if (!ckpt_path.empty() && !policy.empty()) throw ParameterError("give either --ckpt or --policy, not both");
  if (!policy.empty()) {
    a.controller = make_scripted(policy);
    return a;
  }
  if (ckpt_path.empty()) throw ParameterError("one of --ckpt or --policy is required");
  a.ckpt = load_checkpoint(ckpt_path);
  a.header = a.ckpt->header;
  if (!a.header.contains("agent")) throw FormatError("checkpoint header has no agent config");
  const AgentConfig cfg = agent_config_from_json(a.header.at("agent"));
  a.net.emplace(cfg, a.ckpt->params);
  a.controller = std::make_unique<NeuralController>(*a.net, a.ckpt->params, greedy);
  return a;
}

TaskSpec task_for(const std::string& flag, const json& header) {
  TaskSpec t = header.contains("task") ? task_from_json(header.at("task")) : TaskSpec{};
  if (!flag.empty()) t.variant = parse_variant(flag);
  t.training_mode = false;
  return t;
}

std::string world_for(const std::string& flag, const json& header) {
  if (!flag.empty()) return flag;
  if (header.contains("world")) return header.at("world").get<std::string>();
  throw ParameterError("--world is required");
}

json eval_summary(const EvalReport& r) {
  return json{{"suite", r.suite}, {"goal_rate", r.goal_rate}, {"ci95", {r.ci_low, r.ci_high}}, {"episodes", r.episodes}};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"StreetNav: synthetic instruction-following navigation"};
  app.require_subcommand(1);

  // gen-world
  auto* gw = app.add_subcommand("gen-world", "generate a city graph");
  std::string gw_params, gw_out;
  std::uint64_t gw_seed = 1;
  bool gw_second = false;
  gw->add_option("--params", gw_params, "generation parameters (JSON file)");
  gw->add_flag("--second-city", gw_second, "start from the out-of-domain city parameters");
  gw->add_option("--seed", gw_seed, "world seed");
  gw->add_option("--out", gw_out, "world file")->required();

  // gen-routes
  auto* gr = app.add_subcommand("gen-routes", "sample routes inside a region");
  std::string gr_world, gr_region = "train", gr_out;
  int gr_count = 200;
  std::uint64_t gr_seed = 1;
  RouteConstraints gr_c = suite_constraints();
  gr->add_option("--world", gr_world, "world file")->required();
  gr->add_option("--region", gr_region, "train, valid, test, or all")
      ->check(CLI::IsMember({"train", "valid", "test", "all"}));
  gr->add_option("--count", gr_count, "number of routes")->check(CLI::PositiveNumber);
  gr->add_option("--seed", gr_seed, "sampling seed");
  gr->add_option("--out", gr_out, "routes file (JSON lines)")->required();
  gr->add_option("--min-meters", gr_c.min_meters);
  gr->add_option("--max-meters", gr_c.max_meters);
  gr->add_option("--min-instructions", gr_c.min_instructions);
  gr->add_option("--max-instructions", gr_c.max_instructions);

  // train
  auto* tr = app.add_subcommand("train", "train an agent");
  std::string tr_task = "step-by-step", tr_arch = "all-sum", tr_world, tr_routes, tr_ckpt, tr_agent, tr_metrics;
  std::string tr_forcing = "teacher";
  long tr_budget = 1'000'000, tr_phase2 = 0;
  std::uint64_t tr_seed = 1;
  std::optional<double> tr_lr, tr_entropy;
  TrainConfig tr_cfg;
  tr->add_option("--task", tr_task, "step-by-step, list-incremental or list-goal");
  tr->add_option("--arch", tr_arch, "agent architecture");
  tr->add_option("--world", tr_world, "world file")->required();
  tr->add_option("--routes", tr_routes, "training routes")->required();
  tr->add_option("--budget", tr_budget, "environment steps")->check(CLI::PositiveNumber);
  tr->add_option("--seed", tr_seed, "training seed");
  tr->add_option("--out-ckpt", tr_ckpt, "checkpoint path")->required();
  tr->add_option("--agent-config", tr_agent, "agent config (JSON file); --arch overrides its arch");
  tr->add_option("--lr", tr_lr, "learning rate (default: sampled from the seed)");
  tr->add_option("--entropy", tr_entropy, "entropy cost (default: sampled from the seed)");
  tr->add_option("--episodes-per-update", tr_cfg.episodes_per_update)->check(CLI::PositiveNumber);
  tr->add_option("--workers", tr_cfg.workers)->check(CLI::PositiveNumber);
  tr->add_option("--gamma", tr_cfg.gamma);
  tr->add_option("--max-steps", tr_cfg.task.max_steps, "training episode step cap");
  tr->add_option("--forcing", tr_forcing, "teacher or student (forced architecture)")
      ->check(CLI::IsMember({"teacher", "student"}));
  tr->add_option("--phase2-budget", tr_phase2, "curriculum: step-by-step, then this many list-incremental steps");
  tr->add_option("--metrics", tr_metrics, "per-update CSV log");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate an agent on a route suite");
  std::string ev_ckpt, ev_policy, ev_suite, ev_world, ev_task, ev_out = "report.json";
  std::uint64_t ev_seed = 1;
  bool ev_greedy = false;
  ev->add_option("--ckpt", ev_ckpt, "checkpoint");
  ev->add_option("--policy", ev_policy, "scripted policy instead of a checkpoint")
      ->check(CLI::IsMember({"oracle", "random", "forward"}));
  ev->add_option("--suite", ev_suite, "routes file")->required();
  ev->add_option("--world", ev_world, "world file (default: the training world)");
  ev->add_option("--task", ev_task, "task variant (default: the training task)");
  ev->add_option("--seed", ev_seed, "evaluation seed");
  ev->add_flag("--greedy", ev_greedy, "argmax actions instead of sampling");
  ev->add_option("--out", ev_out, "report file");

  // tune-tau
  auto* tt = app.add_subcommand("tune-tau", "grid-search the hard-attention threshold");
  std::string tt_ckpt, tt_routes, tt_world, tt_task = "list-incremental", tt_out = "tau.json", tt_out_ckpt;
  std::uint64_t tt_seed = 1;
  tt->add_option("--ckpt", tt_ckpt, "checkpoint")->required();
  tt->add_option("--routes", tt_routes, "validation routes")->required();
  tt->add_option("--world", tt_world, "world file (default: the training world)");
  tt->add_option("--task", tt_task, "task variant");
  tt->add_option("--seed", tt_seed, "evaluation seed");
  tt->add_option("--out", tt_out, "search result");
  tt->add_option("--out-ckpt", tt_out_ckpt, "checkpoint with threshold switching at the best tau");

  // rollout
  auto* ro = app.add_subcommand("rollout", "run one episode and dump the trajectory");
  std::string ro_ckpt, ro_policy, ro_route, ro_dump, ro_world, ro_task;
  int ro_index = 0;
  std::uint64_t ro_seed = 1;
  bool ro_greedy = false;
  ro->add_option("--ckpt", ro_ckpt, "checkpoint");
  ro->add_option("--policy", ro_policy, "scripted policy instead of a checkpoint")
      ->check(CLI::IsMember({"oracle", "random", "forward"}));
  ro->add_option("--route", ro_route, "routes file")->required();
  ro->add_option("--index", ro_index, "line of the routes file")->check(CLI::NonNegativeNumber);
  ro->add_option("--dump", ro_dump, "trajectory file (JSON lines)")->required();
  ro->add_option("--world", ro_world, "world file (default: the training world)");
  ro->add_option("--task", ro_task, "task variant");
  ro->add_option("--seed", ro_seed, "episode seed");
  ro->add_flag("--greedy", ro_greedy, "argmax actions instead of sampling");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gw->parsed()) {
      const std::uint64_t seed = effective_seed(gw_seed);
      CityGenParams p = gw_second ? second_city_params() : CityGenParams{};
      if (!gw_params.empty()) {
        json j = gen_params_to_json(p);
        j.merge_patch(json::parse(read_text_file(gw_params)));
        p = gen_params_from_json(j);
      }
      p.validate();
      Manifest m{"gen-world"};
      m.config = gen_params_to_json(p);
      m.seeds = {{"world", seed}};
      m.inputs = {{"params", gw_params}};
      m.outputs = {{"world", gw_out}};
      write_manifest(gw_out, m, args);
      const CityGraph g = generate_city(p, seed);
      save_world(g, gw_out);
      std::cout << "world: " << g.node_count() << " nodes, " << g.edges().size() << " edges -> " << gw_out << "\n";
    } else if (gr->parsed()) {
      const std::uint64_t seed = effective_seed(gr_seed);
      const CityGraph g = load_world(gr_world);
      const RegionPartition regions = regions_for(g, gr_region);
      const Region region = gr_region == "all" ? Region::Train : parse_region(gr_region);
      Manifest m{"gen-routes"};
      m.config = {{"region", gr_region},
                  {"count", gr_count},
                  {"region_fractions", kDefaultRegionFractions},
                  {"constraints",
                   {{"min_meters", gr_c.min_meters},
                    {"max_meters", std::isfinite(gr_c.max_meters) ? json(gr_c.max_meters) : json(nullptr)},
                    {"min_instructions", gr_c.min_instructions},
                    {"max_instructions", gr_c.max_instructions},
                    {"retry_budget", gr_c.retry_budget}}}};
      m.seeds = {{"routes", seed}};
      m.inputs = {{"world", gr_world}};
      m.outputs = {{"routes", gr_out}, {"stats", gr_out + ".stats.json"}};
      write_manifest(gr_out, m, args);
      const auto routes = sample_routes(g, regions, region, gr_count, seed, gr_c);
      save_routes(routes, gr_out);
      double instr = 0.0, meters = 0.0;
      for (const Route& r : routes) {
        instr += static_cast<double>(r.instruction_count());
        meters += route_length_meters(g, r);
      }
      const json stats{{"count", routes.size()},
                       {"mean_instructions", instr / static_cast<double>(routes.size())},
                       {"mean_meters", meters / static_cast<double>(routes.size())}};
      write_json(gr_out + ".stats.json", stats);
      std::cout << stats.dump() << "\n";
    } else if (tr->parsed()) {
      const std::uint64_t seed = effective_seed(tr_seed);
      AgentConfig agent = tr_agent.empty() ? AgentConfig{} : agent_config_from_json(json::parse(read_text_file(tr_agent)));
      if (tr->count("--arch") > 0 || tr_agent.empty()) agent.arch = parse_architecture(tr_arch);
      agent.validate();
      if (agent.scripted()) throw ConfigurationError("scripted policies are not trained");
      Rng hp_rng(hash_combine(seed, hash_string("hyperparams")));
      const Hyperparams hp = sample_hyperparams(hp_rng);
      tr_cfg.lr = tr_lr.value_or(hp.lr);
      tr_cfg.entropy = tr_entropy.value_or(hp.entropy);
      tr_cfg.max_env_steps = tr_budget;
      tr_cfg.seed = seed;
      tr_cfg.task.variant = parse_variant(tr_task);
      tr_cfg.validate();
      const bool curriculum = tr_phase2 > 0;
      const bool forced = agent.arch == Architecture::Forced;
      if (curriculum && forced) throw ConfigurationError("the curriculum trains with reinforcement, not forcing");
      if (curriculum) {
        TaskSpec phase2 = tr_cfg.task;
        phase2.variant = TaskVariant::ListIncremental;
        agent.check_task(phase2);
      }
      agent.check_task(tr_cfg.task);

      const CityGraph g = load_world(tr_world);
      const auto routes = load_routes(tr_routes);
      for (const Route& r : routes) validate_route(g, r);

      Manifest m{"train"};
      m.config = {{"agent", agent_config_to_json(agent)},
                  {"task", task_to_json(tr_cfg.task)},
                  {"gamma", tr_cfg.gamma},
                  {"lr", tr_cfg.lr},
                  {"entropy", tr_cfg.entropy},
                  {"value_weight", tr_cfg.value_weight},
                  {"episodes_per_update", tr_cfg.episodes_per_update},
                  {"workers", tr_cfg.workers},
                  {"budget", tr_budget},
                  {"phase2_budget", tr_phase2},
                  {"forcing", forced ? json(tr_forcing) : json(nullptr)}};
      m.seeds = {{"train", seed}};
      m.inputs = {{"world", tr_world}, {"routes", tr_routes}, {"agent_config", tr_agent}};
      m.outputs = {{"checkpoint", tr_ckpt}, {"metrics", tr_metrics}};
      write_manifest(tr_ckpt, m, args);

      ParamSet params;
      Rng init(seed);
      const Network net(agent, params, init);
      std::ofstream metrics;
      if (!tr_metrics.empty()) {
        metrics.open(tr_metrics);
        if (!metrics) throw IoError("cannot write " + tr_metrics);
        write_metrics_header(metrics);
      }
      const auto log_row = [&](const UpdateStats& s) {
        if (metrics.is_open()) write_metrics_row(metrics, s);
        return true;
      };
      const TrainData data{&g, routes, {}};
      long steps = 0;
      TaskSpec final_task = tr_cfg.task;
      if (curriculum) {
        TrainConfig p2 = tr_cfg;
        p2.max_env_steps = tr_phase2;
        p2.seed = hash_combine(seed, 2);
        const CurriculumResult res = curriculum_train(net, params, tr_cfg, p2, data);
        for (const auto& s : res.log1) log_row(s);
        for (const auto& s : res.log2) log_row(s);
        params = res.phase2;
        steps = (res.log1.empty() ? 0 : res.log1.back().env_steps) + (res.log2.empty() ? 0 : res.log2.back().env_steps);
        final_task.variant = TaskVariant::ListIncremental;
      } else {
        Trainer trainer(net, params, tr_cfg, data);
        if (forced) {
          const RolloutMode mode = tr_forcing == "student" ? RolloutMode::Student : RolloutMode::Teacher;
          while (trainer.env_steps() < tr_budget) log_row(trainer.forced_update(mode));
        } else {
          trainer.train(log_row);
        }
        steps = trainer.env_steps();
      }
      final_task.training_mode = false;
      const json header{{"agent", agent_config_to_json(agent)},
                        {"task", task_to_json(final_task)},
                        {"world", tr_world},
                        {"routes", tr_routes},
                        {"seed", seed},
                        {"lr", tr_cfg.lr},
                        {"entropy", tr_cfg.entropy},
                        {"env_steps", steps},
                        {"code_version", SNAV_VERSION}};
      save_checkpoint(tr_ckpt, params, header);
      std::cout << "trained " << architecture_name(agent.arch) << " for " << steps << " env steps -> " << tr_ckpt
                << "\n";
    } else if (ev->parsed()) {
      const std::uint64_t seed = effective_seed(ev_seed);
      LoadedAgent agent = load_agent(ev_ckpt, ev_policy, ev_greedy);
      const std::string world = world_for(ev_world, agent.header);
      const TaskSpec task = task_for(ev_task, agent.header);
      if (agent.net) agent.net->config().check_task(task);
      const CityGraph g = load_world(world);
      const auto routes = load_routes(ev_suite);
      Manifest m{"eval"};
      m.config = {{"task", task_to_json(task)},
                  {"greedy", ev_greedy},
                  {"policy", ev_policy.empty() ? json(nullptr) : json(ev_policy)}};
      m.seeds = {{"eval", seed}};
      m.inputs = {{"checkpoint", ev_ckpt}, {"suite", ev_suite}, {"world", world}};
      m.outputs = {{"report", ev_out}};
      write_manifest(ev_out, m, args);
      EvalOptions opts;
      opts.seed = seed;
      const EvalReport r = evaluate(*agent.controller, g, routes, task, ev_suite, opts);
      write_json(ev_out, r.to_json());
      std::cout << eval_summary(r).dump() << "\n";
    } else if (tt->parsed()) {
      const std::uint64_t seed = effective_seed(tt_seed);
      LoadedAgent agent = load_agent(tt_ckpt, "", false);
      const std::string world = world_for(tt_world, agent.header);
      TaskSpec task = task_for(tt_task, agent.header);
      task.variant = parse_variant(tt_task);
      agent.net->config().check_task(task);
      const CityGraph g = load_world(world);
      const auto routes = load_routes(tt_routes);
      Manifest m{"tune-tau"};
      m.config = {{"task", task_to_json(task)}, {"grid", tau_grid()}};
      m.seeds = {{"eval", seed}};
      m.inputs = {{"checkpoint", tt_ckpt}, {"routes", tt_routes}, {"world", world}};
      m.outputs = {{"result", tt_out}, {"checkpoint", tt_out_ckpt}};
      write_manifest(tt_out, m, args);
      EvalOptions opts;
      opts.seed = seed;
      const TauSearch s = tune_tau(*agent.net, agent.ckpt->params, g, routes, task, opts);
      json scores = json::array();
      for (const auto& [tau, rate] : s.scores) scores.push_back({{"tau", tau}, {"goal_rate", rate}});
      write_json(tt_out, {{"best_tau", s.best_tau}, {"scores", scores}});
      if (!tt_out_ckpt.empty()) {
        json header = agent.header;
        const AgentConfig tuned = agent.net->with_switching(Switcher::Threshold, s.best_tau).config();
        header["agent"] = agent_config_to_json(tuned);
        save_checkpoint(tt_out_ckpt, agent.ckpt->params, header);
      }
      std::cout << "best tau " << s.best_tau << "\n";
    } else if (ro->parsed()) {
      const std::uint64_t seed = effective_seed(ro_seed);
      LoadedAgent agent = load_agent(ro_ckpt, ro_policy, ro_greedy);
      const std::string world = world_for(ro_world, agent.header);
      const TaskSpec task = task_for(ro_task, agent.header);
      if (agent.net) agent.net->config().check_task(task);
      const CityGraph g = load_world(world);
      const auto routes = load_routes(ro_route);
      if (ro_index >= static_cast<int>(routes.size()))
        throw ParameterError("--index " + std::to_string(ro_index) + " but the file has " +
                             std::to_string(routes.size()) + " routes");
      Manifest m{"rollout"};
      m.config = {{"task", task_to_json(task)},
                  {"index", ro_index},
                  {"greedy", ro_greedy},
                  {"policy", ro_policy.empty() ? json(nullptr) : json(ro_policy)}};
      m.seeds = {{"episode", seed}};
      m.inputs = {{"checkpoint", ro_ckpt}, {"route", ro_route}, {"world", world}};
      m.outputs = {{"dump", ro_dump}};
      write_manifest(ro_dump, m, args);
      const std::vector<Route> one{routes[static_cast<std::size_t>(ro_index)]};
      std::ofstream dump(ro_dump);
      if (!dump) throw IoError("cannot write " + ro_dump);
      EvalOptions opts;
      opts.seed = seed;
      opts.on_step = [&](const Route&, const AgentState& s, Action a, const StepOutcome& out) {
        dump << step_record(s, a, out).dump() << "\n";
      };
      const EvalReport r = evaluate(*agent.controller, g, one, task, ro_route, opts);
      dump.close();
      if (!dump) throw IoError("failed writing " + ro_dump);
      const RouteOutcome& o = r.per_route.front();
      std::cout << json{{"route_id", o.route_id}, {"goal_reached", o.success}, {"steps", o.steps}}.dump() << "\n";
    }
  } catch (const snav::Error& e) {
    std::cerr << "snav: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "snav: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
