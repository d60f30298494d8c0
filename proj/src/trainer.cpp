#include "snav/trainer.hpp"

#include <cmath>
#include <exception>
#include <ostream>
#include <thread>

#include "snav/error.hpp"

namespace snav::inline SNAV_REAL_NS {

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigurationError("gamma must lie in (0, 1]");
  if (!(lr > 0.0)) throw ConfigurationError("learning rate must be positive");
  if (entropy < 0.0 || value_weight < 0.0) throw ConfigurationError("loss weights must be nonnegative");
  if (workers < 1 || episodes_per_update < 1) throw ConfigurationError("workers and episodes per update must be positive");
  if (max_env_steps < 1) throw ConfigurationError("the step budget must be positive");
  task.validate();
}

double Trajectory::total_reward() const {
  double s = 0.0;
  for (double r : rewards) s += r;
  return s;
}

Trajectory collect_episode(Tape& tape, const Network& net, const ParamSet& params, const EnvContext& ctx, Rng& rng,
                           RolloutMode mode) {
  net.config().check_task(ctx.task);
  auto [state, out] = reset(ctx);
  EpisodeState es = net.begin_episode(tape, params, *ctx.graph, *ctx.route, ctx.percept);
  Trajectory tr;
  while (!state.done) {
    const PolicyOutput po = net.step(tape, params, es, out.observation.features, out.visible_directions,
                                     out.events.waypoint_reached.has_value());
    Action a;
    if (mode == RolloutMode::Sample) {
      a = sample_action(po.log_probs.data(), rng);
    } else {
      const Action target = oracle_action(*ctx.graph, state.node, state.heading, next_target(*ctx.route, state));
      tr.targets.push_back(target);
      a = mode == RolloutMode::Teacher ? target : sample_action(po.log_probs.data(), rng);
    }
    auto next = step(ctx, state, a, rng);
    state = std::move(next.first);
    out = std::move(next.second);
    Network::feedback(es, a, out.reward);
    tr.log_probs.push_back(po.log_probs);
    tr.values.push_back(po.value);
    tr.actions.push_back(a);
    tr.rewards.push_back(out.reward);
    tr.nodes.push_back(state.node);
  }
  tr.goal_reached = out.events.goal_reached;
  return tr;
}

Value a2c_loss(Tape& tape, const Trajectory& traj, const TrainConfig& cfg, LossStats* stats) {
  const int T = traj.steps();
  if (T == 0) throw ConfigurationError("empty trajectory");
  const std::vector<double> R = discounted_returns(traj.rewards, cfg.gamma);
  const Value lp = concat_rows(traj.log_probs);  // T x 5
  const Value v = concat_rows(traj.values);      // T x 1

  Mat adv_mask = Mat::Zero(T, lp.cols());
  Mat ret(T, 1);
  for (int t = 0; t < T; ++t) {
    ret(t, 0) = static_cast<real>(R[static_cast<std::size_t>(t)]);
    adv_mask(t, static_cast<int>(traj.actions[static_cast<std::size_t>(t)])) = ret(t, 0) - v.data()(t, 0);
  }
  const Value policy = scale(sum(mul(lp, tape.constant(std::move(adv_mask)))), -1);
  const Value value = scale(sum(square(sub(tape.constant(std::move(ret)), v))), static_cast<real>(cfg.value_weight));
  const Value neg_entropy = sum(mul(exp(lp), lp));
  const Value total = add(add(policy, value), scale(neg_entropy, static_cast<real>(cfg.entropy)));
  if (stats) {
    stats->policy = policy.item();
    stats->value = value.item();
    stats->entropy = -neg_entropy.item() / T;
    stats->total = total.item();
  }
  if (!std::isfinite(static_cast<double>(total.item())))
    throw DivergenceError("non-finite loss (policy " + std::to_string(policy.item()) + ", value " +
                          std::to_string(value.item()) + ", last value estimate " +
                          std::to_string(v.data()(T - 1, 0)) + ")");
  return total;
}

Value forced_loss(Tape& tape, const Trajectory& traj, LossStats* stats) {
  const int T = traj.steps();
  if (T == 0) throw ConfigurationError("empty trajectory");
  if (static_cast<int>(traj.targets.size()) != T) throw ConfigurationError("trajectory lacks oracle targets");
  const Value lp = concat_rows(traj.log_probs);
  Mat onehot = Mat::Zero(T, lp.cols());
  for (int t = 0; t < T; ++t) onehot(t, static_cast<int>(traj.targets[static_cast<std::size_t>(t)])) = 1;
  const Value ce = scale(sum(mul(lp, tape.constant(std::move(onehot)))), -1);
  if (stats) {
    stats->cross_entropy = ce.item() / T;
    stats->total = ce.item();
    stats->entropy = -sum(mul(exp(lp), lp)).item() / T;
  }
  if (!std::isfinite(static_cast<double>(ce.item()))) throw DivergenceError("non-finite cross-entropy loss");
  return ce;
}

void write_metrics_header(std::ostream& out) {
  out << "update,env_steps,mean_return,goal_rate_train,entropy,value_loss,policy_loss\n";
}

void write_metrics_row(std::ostream& out, const UpdateStats& s) {
  out << s.update << ',' << s.env_steps << ',' << s.mean_return << ',' << s.goal_rate_train << ',' << s.entropy << ','
      << s.value_loss << ',' << s.policy_loss << '\n';
}

Trainer::Trainer(const Network& net, ParamSet& params, TrainConfig cfg, TrainData data)
    : net_(net), params_(params), cfg_(std::move(cfg)), data_(std::move(data)), adam_(params, AdamConfig{cfg_.lr}) {
  cfg_.task.training_mode = true;
  cfg_.validate();
  if (!data_.graph || data_.routes.empty()) throw ConfigurationError("training needs a world and at least one route");
  net_.config().check_task(cfg_.task);
}

EnvContext Trainer::context_for(const Route& r) const { return EnvContext{data_.graph, &r, cfg_.task, data_.percept}; }

UpdateStats Trainer::update() {
  const int E = cfg_.episodes_per_update;
  struct Slot {
    GradSet grads;
    LossStats loss;
    int steps = 0;
    double ret = 0.0;
    bool goal = false;
  };
  std::vector<Slot> slots(static_cast<std::size_t>(E));
  const auto run = [&](int k) {
    Slot& s = slots[static_cast<std::size_t>(k)];
    s.grads = GradSet(params_);
    Rng rng(hash_combine(cfg_.seed, static_cast<std::uint64_t>(episodes_ + k)));
    const Route& route = data_.routes[rng.below(data_.routes.size())];
    const EnvContext ctx = context_for(route);
    Tape tape;
    const Trajectory tr = collect_episode(tape, net_, params_, ctx, rng);
    const Value loss = a2c_loss(tape, tr, cfg_, &s.loss);
    tape.backward(loss);
    tape.accumulate(s.grads);
    s.steps = tr.steps();
    s.ret = tr.total_reward();
    s.goal = tr.goal_reached;
  };

  const int W = std::min(cfg_.workers, E);
  if (W == 1) {
    for (int k = 0; k < E; ++k) run(k);
  } else {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(W));
    std::vector<std::thread> threads;
    for (int w = 0; w < W; ++w)
      threads.emplace_back([&, w] {
        try {
          for (int k = w; k < E; k += W) run(k);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    for (auto& th : threads) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  GradSet total = std::move(slots[0].grads);
  for (int k = 1; k < E; ++k) total.add(slots[static_cast<std::size_t>(k)].grads);
  total.scale(static_cast<real>(1.0 / E));

  UpdateStats st;
  for (const Slot& s : slots) {
    env_steps_ += s.steps;
    st.mean_return += s.ret / E;
    st.goal_rate_train += (s.goal ? 100.0 : 0.0) / E;
    st.entropy += s.loss.entropy / E;
    st.value_loss += s.loss.value / E;
    st.policy_loss += s.loss.policy / E;
  }
  try {
    adam_.step(params_, total);
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string(e.what()) + " during update " + std::to_string(updates_ + 1) +
                          " (mean return " + std::to_string(st.mean_return) + ", value loss " +
                          std::to_string(st.value_loss) + ")");
  }
  episodes_ += E;
  st.update = ++updates_;
  st.env_steps = env_steps_;
  return st;
}

UpdateStats Trainer::forced_update(RolloutMode mode) {
  if (mode == RolloutMode::Sample) throw ConfigurationError("forced updates need teacher or student mode");
  GradSet grads(params_);
  Rng rng(hash_combine(cfg_.seed, static_cast<std::uint64_t>(episodes_)));
  const Route& route = data_.routes[rng.below(data_.routes.size())];
  const EnvContext ctx = context_for(route);
  Tape tape;
  const Trajectory tr = collect_episode(tape, net_, params_, ctx, rng, mode);
  LossStats ls;
  const Value loss = forced_loss(tape, tr, &ls);
  tape.backward(loss);
  tape.accumulate(grads);
  adam_.step(params_, grads);
  ++episodes_;
  env_steps_ += tr.steps();
  UpdateStats st;
  st.update = ++updates_;
  st.env_steps = env_steps_;
  st.mean_return = tr.total_reward();
  st.goal_rate_train = tr.goal_reached ? 100.0 : 0.0;
  st.entropy = ls.entropy;
  st.cross_entropy = ls.cross_entropy;
  return st;
}

std::vector<UpdateStats> Trainer::train(const std::function<bool(const UpdateStats&)>& on_update) {
  std::vector<UpdateStats> log;
  while (env_steps_ < cfg_.max_env_steps) {
    log.push_back(update());
    if (on_update && !on_update(log.back())) break;
  }
  return log;
}

CurriculumResult curriculum_train(const Network& net, const ParamSet& init, TrainConfig phase1, TrainConfig phase2,
                                  const TrainData& data) {
  phase1.task.variant = TaskVariant::StepByStep;
  phase2.task.variant = TaskVariant::ListIncremental;
  CurriculumResult res;
  res.phase1 = init;
  {
    Trainer t(net, res.phase1, phase1, data);
    res.log1 = t.train();
  }
  res.phase2 = res.phase1;
  Trainer t(net, res.phase2, phase2, data);
  res.log2 = t.train();
  return res;
}

TauSearch tune_tau(const Network& net, const ParamSet& params, const CityGraph& g, const std::vector<Route>& routes,
                   const TaskSpec& task, const EvalOptions& opts) {
  if (!net.config().hard_attention()) throw ConfigurationError("tau tuning needs a hard-attention agent");
  if (routes.empty()) throw ConfigurationError("tau tuning needs validation routes");
  TauSearch res;
  double best = -1.0;
  for (double tau : tau_grid()) {
    const Network n = net.with_switching(Switcher::Threshold, tau);
    NeuralController agent(n, params);
    const EvalReport r = evaluate(agent, g, routes, task, "tau", opts);
    res.scores.emplace_back(tau, r.goal_rate);
    if (r.goal_rate > best) {
      best = r.goal_rate;
      res.best_tau = tau;
    }
  }
  return res;
}

}  // namespace snav::inline SNAV_REAL_NS
