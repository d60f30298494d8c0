#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "snav/trainer.hpp"

namespace snav::testing {

namespace {

static_assert(std::is_same_v<real, double>, "gradient checks need the double-precision build");

// Builds the loss on a fresh tape and adds any discrete choices it made to `sig`.
using LossFn = std::function<Value(Tape&, const ParamSet&, std::uint64_t& sig)>;

GradCheck fd_check(ParamSet& ps, const LossFn& f) {
  GradCheck res;
  Tape tape;
  std::uint64_t sig0 = 0;
  const Value loss = f(tape, ps, sig0);
  sig0 = hash_combine(sig0, tape.relu_signature());
  tape.backward(loss);
  GradSet grads(ps);
  tape.accumulate(grads);

  const auto eval = [&](std::uint64_t& sig) {
    Tape t;
    sig = 0;
    const double v = f(t, ps, sig).item();
    sig = hash_combine(sig, t.relu_signature());
    return v;
  };
  for (int i = 0; i < static_cast<int>(ps.size()); ++i) {
    Mat& w = ps[i].value;
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        const double orig = w(r, c);
        std::uint64_t sp = 0, sm = 0;
        w(r, c) = orig + kFdStep;
        const double lp = eval(sp);
        w(r, c) = orig - kFdStep;
        const double lm = eval(sm);
        w(r, c) = orig;
        if (sp != sig0 || sm != sig0) {
          ++res.skipped;
          continue;
        }
        const double n = (lp - lm) / (2 * kFdStep);
        const double a = grads[i](r, c);
        const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), kFdFloor});
        ++res.checked;
        if (rel > res.max_rel_error) {
          res.max_rel_error = rel;
          res.worst = ps[i].name + "[" + std::to_string(r) + "," + std::to_string(c) + "]";
        }
      }
  }
  return res;
}

Mat random_mat(Rng& rng, Eigen::Index rows, Eigen::Index cols, double spread) {
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-spread, spread);
  return m;
}

// Recipe for one random graph. Shapes and choices are drawn once so every
// re-evaluation builds the same graph.
struct GraphStep {
  std::string op;
  int a = 0;
  int b = -1;  // pool index or -1
  int fresh = -1;  // parameter index for a freshly created operand
  int i0 = 0;
  int i1 = 0;
  double s = 0.0;
  std::vector<int> rows;
  bool squash = false;  // apply tanh afterwards to keep magnitudes moderate
};

const std::vector<std::string> kGraphOps = {
    "matmul", "add",  "sub",     "mul",        "add_row",     "sub_row",     "scale",       "add_scalar",
    "tanh",   "sigmoid", "relu", "exp",        "log",         "square",      "softmax",     "log_softmax",
    "concat_cols", "concat_rows", "slice_cols", "slice_rows", "gather_rows", "pick",        "sum",
    "mean",   "sum_over_rows", "sum_over_cols", "transpose"};

struct RandomGraph {
  ParamSet params;
  std::vector<GraphStep> steps;
  std::vector<Mat> weights;  // loss projection per pool entry
  int leaves = 0;

  Value build(Tape& t, const ParamSet& ps) const {
    std::vector<Value> pool;
    for (int i = 0; i < leaves; ++i) pool.push_back(t.param(ps, i));
    for (const GraphStep& st : steps) {
      const Value a = pool[static_cast<std::size_t>(st.a)];
      const Value b = st.fresh >= 0 ? t.param(ps, st.fresh) : st.b >= 0 ? pool[static_cast<std::size_t>(st.b)] : Value{};
      Value out;
      const std::string& op = st.op;
      if (op == "matmul") out = matmul(a, b);
      else if (op == "add") out = add(a, b);
      else if (op == "sub") out = sub(a, b);
      else if (op == "mul") out = mul(a, b);
      else if (op == "add_row") out = add_row(a, b);
      else if (op == "sub_row") out = sub_row(a, b);
      else if (op == "scale") out = scale(a, st.s);
      else if (op == "add_scalar") out = add_scalar(a, st.s);
      else if (op == "tanh") out = tanh(a);
      else if (op == "sigmoid") out = sigmoid(a);
      else if (op == "relu") out = relu(a);
      else if (op == "exp") out = exp(a);
      else if (op == "log") out = log(add_scalar(square(a), 0.5));
      else if (op == "square") out = square(a);
      else if (op == "softmax") out = softmax(a);
      else if (op == "log_softmax") out = log_softmax(a);
      else if (op == "concat_cols") out = concat_cols({a, b});
      else if (op == "concat_rows") out = concat_rows({a, b});
      else if (op == "slice_cols") out = slice_cols(a, st.i0, st.i1);
      else if (op == "slice_rows") out = slice_rows(a, st.i0, st.i1);
      else if (op == "gather_rows") out = gather_rows(a, st.rows);
      else if (op == "pick") out = pick(a, st.i0, st.i1);
      else if (op == "sum") out = sum(a);
      else if (op == "mean") out = mean(a);
      else if (op == "sum_over_rows") out = sum_over_rows(a);
      else if (op == "sum_over_cols") out = sum_over_cols(a);
      else out = transpose(a);
      if (st.squash) out = tanh(out);
      pool.push_back(out);
    }
    Value loss = t.scalar(0);
    for (std::size_t k = static_cast<std::size_t>(leaves); k < pool.size(); ++k)
      loss = add(loss, sum(mul(pool[k], t.constant(weights[k]))));
    return loss;
  }
};

RandomGraph make_random_graph(std::uint64_t seed) {
  Rng rng(seed);
  RandomGraph g;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;
  std::vector<double> magnitude;
  const auto dim = [&] { return static_cast<Eigen::Index>(1 + rng.below(4)); };
  const auto fresh = [&](Eigen::Index r, Eigen::Index c) {
    return g.params.add("p" + std::to_string(g.params.size()), random_mat(rng, r, c, 1.0));
  };
  g.leaves = 2 + static_cast<int>(rng.below(2));
  for (int i = 0; i < g.leaves; ++i) {
    const auto r = dim(), c = dim();
    fresh(r, c);
    shapes.emplace_back(r, c);
    magnitude.push_back(1.0);
  }
  const int count = 6 + static_cast<int>(rng.below(6));
  for (int k = 0; k < count; ++k) {
    GraphStep st;
    st.op = kGraphOps[rng.below(kGraphOps.size())];
    st.a = static_cast<int>(rng.below(shapes.size()));
    auto [r, c] = shapes[static_cast<std::size_t>(st.a)];
    double mag = magnitude[static_cast<std::size_t>(st.a)];
    // Second operand: an existing value of the right shape if one exists, else a new parameter.
    const auto operand = [&](Eigen::Index rr, Eigen::Index cc) {
      std::vector<int> match;
      for (std::size_t j = 0; j < shapes.size(); ++j)
        if (shapes[j] == std::make_pair(rr, cc)) match.push_back(static_cast<int>(j));
      if (!match.empty() && rng.bernoulli(0.5)) {
        st.b = match[rng.below(match.size())];
        return magnitude[static_cast<std::size_t>(st.b)];
      }
      st.fresh = fresh(rr, cc);
      return 1.0;
    };
    Eigen::Index nr = r, nc = c;
    const std::string& op = st.op;
    if (op == "matmul") {
      nc = dim();
      mag *= operand(c, nc) * static_cast<double>(c);
    } else if (op == "add" || op == "sub") {
      mag += operand(r, c);
    } else if (op == "mul") {
      mag *= operand(r, c);
    } else if (op == "add_row" || op == "sub_row") {
      mag += operand(1, c);
    } else if (op == "scale") {
      st.s = rng.uniform(-2.0, 2.0);
      mag *= std::abs(st.s);
    } else if (op == "add_scalar") {
      st.s = rng.uniform(-2.0, 2.0);
      mag += std::abs(st.s);
    } else if (op == "tanh" || op == "sigmoid" || op == "softmax") {
      mag = 1.0;
    } else if (op == "exp") {
      if (mag > 2.0) st.op = "tanh";  // keep exp inputs bounded
      mag = st.op == "exp" ? std::exp(mag) : 1.0;
    } else if (op == "log") {
      mag = std::abs(std::log(0.5)) + std::log1p(mag * mag);
    } else if (op == "square") {
      mag *= mag;
    } else if (op == "log_softmax") {
      mag = 2.0 * mag + std::log(static_cast<double>(c));
    } else if (op == "concat_cols") {
      const auto cc = dim();
      mag = std::max(mag, operand(r, cc));
      nc = c + cc;
    } else if (op == "concat_rows") {
      const auto rr = dim();
      mag = std::max(mag, operand(rr, c));
      nr = r + rr;
    } else if (op == "slice_cols") {
      st.i1 = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(c)));
      st.i0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(c - st.i1 + 1)));
      nc = st.i1;
    } else if (op == "slice_rows") {
      st.i1 = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(r)));
      st.i0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(r - st.i1 + 1)));
      nr = st.i1;
    } else if (op == "gather_rows") {
      nr = dim();
      for (Eigen::Index j = 0; j < nr; ++j) st.rows.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(r))));
    } else if (op == "pick") {
      st.i0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(r)));
      st.i1 = static_cast<int>(rng.below(static_cast<std::uint64_t>(c)));
      nr = nc = 1;
    } else if (op == "sum" || op == "mean") {
      if (op == "sum") mag *= static_cast<double>(r * c);
      nr = nc = 1;
    } else if (op == "sum_over_rows") {
      mag *= static_cast<double>(r);
      nr = 1;
    } else if (op == "sum_over_cols") {
      mag *= static_cast<double>(c);
      nc = 1;
    } else if (op == "transpose") {
      std::swap(nr, nc);
    }  // relu keeps shape and bound
    if (mag > 4.0) {
      st.squash = true;
      mag = 1.0;
    }
    g.steps.push_back(st);
    shapes.emplace_back(nr, nc);
    magnitude.push_back(mag);
  }
  for (auto [r, c] : shapes) g.weights.push_back(random_mat(rng, r, c, 1.0));
  return g;
}

// Tiny sizes keep the parameter count small enough to perturb every entry.
AgentConfig tiny_agent(Architecture arch) {
  AgentConfig cfg;
  cfg.arch = arch;
  cfg.sizes = AgentSizes{4, 5, 6, 6, 3, 5, 4};
  return cfg;
}

void randomize(ParamSet& ps, Rng& rng, double spread) {
  for (int i = 0; i < static_cast<int>(ps.size()); ++i) {
    Mat& w = ps[i].value;
    w = random_mat(rng, w.rows(), w.cols(), spread);
  }
}

struct SmallWorld {
  CityGraph graph;
  Route route;
};

SmallWorld small_world(std::uint64_t seed) {
  CityGenParams p;
  p.grid_cols = p.grid_rows = 3;
  p.node_spacing = 50.0;
  SmallWorld w{generate_city(p, seed), {}};
  RegionPartition parts = whole_city(w.graph);
  RouteConstraints rc;
  rc.min_instructions = 2;
  Rng rng(hash_combine(seed, 7));
  w.route = sample_route(w.graph, parts, Region::Train, rng, rc);
  return w;
}

}  // namespace

GradCheck check_random_graph(std::uint64_t seed, std::set<std::string>* ops) {
  RandomGraph g = make_random_graph(seed);
  if (ops) {
    for (const GraphStep& st : g.steps) {
      ops->insert(st.op);
      if (st.op == "log") ops->insert({"square", "add_scalar"});
      if (st.squash) ops->insert("tanh");
    }
  }
  return fd_check(g.params, [&](Tape& t, const ParamSet& ps, std::uint64_t&) { return g.build(t, ps); });
}

GradCheck check_lstm_unrolled(std::uint64_t seed, int steps) {
  Rng rng(seed);
  ParamSet ps;
  ParamBuilder pb(ps, rng);
  const LstmCell cell = LstmCell::create(pb, "lstm", 3, 4);
  std::vector<int> xs;
  for (int k = 0; k < steps; ++k) xs.push_back(ps.add("x" + std::to_string(k), random_mat(rng, 1, 3, 1.0)));
  std::vector<Mat> wh, wc;
  for (int k = 0; k < steps; ++k) {
    wh.push_back(random_mat(rng, 1, 4, 1.0));
    wc.push_back(random_mat(rng, 1, 4, 1.0));
  }
  return fd_check(ps, [&](Tape& t, const ParamSet& p, std::uint64_t&) {
    LstmState s = cell.zero_state(t);
    Value loss = t.scalar(0);
    for (int k = 0; k < steps; ++k) {
      s = cell(t, p, t.param(p, xs[static_cast<std::size_t>(k)]), s);
      loss = add(loss, add(sum(mul(s.h, t.constant(wh[static_cast<std::size_t>(k)]))),
                           sum(mul(s.c, t.constant(wc[static_cast<std::size_t>(k)])))));
    }
    return loss;
  });
}

GradCheck check_mlp(std::uint64_t seed, int layers) {
  Rng rng(seed);
  ParamSet ps;
  ParamBuilder pb(ps, rng);
  std::vector<int> widths(static_cast<std::size_t>(layers), 6);
  widths.back() = 3;
  const Mlp mlp = Mlp::create(pb, "mlp", 5, widths);
  randomize(ps, rng, 0.8);  // nonzero biases too
  const int x = ps.add("x", random_mat(rng, 2, 5, 1.0));
  const Mat w = random_mat(rng, 2, 3, 1.0);
  return fd_check(ps, [&](Tape& t, const ParamSet& p, std::uint64_t&) {
    return sum(mul(mlp(t, p, t.param(p, x)), t.constant(w)));
  });
}

GradCheck check_hard_attention_agent(std::uint64_t seed) {
  const SmallWorld w = small_world(seed);
  AgentConfig cfg = tiny_agent(Architecture::HardA);
  cfg.switcher = Switcher::Threshold;
  cfg.tau = 0.5;
  ParamSet ps;
  Rng rng(seed);
  const Network net(cfg, ps, rng);
  randomize(ps, rng, 0.5);

  // Oracle-driven episode: observations and actions do not depend on the parameters.
  TaskSpec task;
  task.variant = TaskVariant::ListIncremental;
  const EnvContext ctx{&w.graph, &w.route, task, {}};
  struct Step {
    std::vector<float> obs;
    std::vector<int> visible;
    bool event = false;
    int action = 0;
    double reward = 0.0;
  };
  std::vector<Step> steps;
  {
    auto [state, out] = reset(ctx);
    Rng env_rng(1);
    while (!state.done) {
      Step s{out.observation.features, out.visible_directions, out.events.waypoint_reached.has_value(), 0, 0.0};
      const Action a = oracle_action(w.graph, state.node, state.heading, next_target(w.route, state));
      s.action = static_cast<int>(a);
      auto next = step(ctx, state, a, env_rng);
      state = std::move(next.first);
      out = std::move(next.second);
      s.reward = out.reward;
      steps.push_back(std::move(s));
    }
  }
  std::vector<Mat> wv;
  for (std::size_t k = 0; k < steps.size(); ++k) wv.push_back(random_mat(rng, 1, 2, 1.0));

  int switches = 0;
  GradCheck res = fd_check(ps, [&](Tape& t, const ParamSet& p, std::uint64_t& sig) {
    EpisodeState es = net.begin_episode(t, p, w.graph, w.route);
    Value loss = t.scalar(0);
    switches = 0;
    for (std::size_t k = 0; k < steps.size(); ++k) {
      const Step& s = steps[k];
      const int before = es.active;
      const PolicyOutput po = net.step(t, p, es, s.obs, s.visible, s.event);
      if (es.active != before) ++switches;
      sig = hash_combine(sig, static_cast<std::uint64_t>(es.active));
      const Value terms = concat_cols({pick(po.log_probs, 0, s.action), po.value});
      loss = add(loss, sum(mul(terms, t.constant(wv[k]))));
      Network::feedback(es, static_cast<Action>(s.action), s.reward);
    }
    return loss;
  });
  res.switches = switches;
  return res;
}

GradCheck check_policy_term(std::uint64_t seed) {
  const SmallWorld w = small_world(seed);
  ParamSet ps;
  Rng rng(seed);
  const Network net(tiny_agent(Architecture::AllSum), ps, rng);
  randomize(ps, rng, 0.5);

  TrainConfig cfg;
  cfg.value_weight = 0.0;
  cfg.entropy = 0.0;
  cfg.task.max_steps = 1;
  const EnvContext ctx{&w.graph, &w.route, cfg.task, {}};
  const std::uint64_t episode_seed = hash_combine(seed, 3);

  double advantage = 0.0;
  {
    Tape t;
    Rng r(episode_seed);
    const Trajectory tr = collect_episode(t, net, ps, ctx, r);
    advantage = discounted_returns(tr.rewards, cfg.gamma)[0] - tr.values[0].item();
  }
  // The analytic side comes from the actor-critic loss itself; the numeric
  // side perturbs -log pi(a) * A with A frozen at its base value.
  GradCheck res;
  bool analytic = true;
  const LossFn f = [&](Tape& t, const ParamSet& p, std::uint64_t& sig) {
    Rng r(episode_seed);
    const Trajectory tr = collect_episode(t, net, p, ctx, r);
    sig = static_cast<std::uint64_t>(tr.actions[0]);
    if (analytic) {
      analytic = false;
      return a2c_loss(t, tr, cfg);
    }
    return scale(pick(tr.log_probs[0], 0, static_cast<int>(tr.actions[0])), -advantage);
  };
  res = fd_check(ps, f);
  return res;
}

}  // namespace snav::testing
