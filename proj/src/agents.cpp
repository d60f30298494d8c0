#include "snav/agents.hpp"

#include <cmath>

#include "snav/error.hpp"
#include "snav/langdir.hpp"

namespace snav::inline SNAV_REAL_NS {

namespace {

int vocab_of(const AgentConfig& c) {
  return c.vocab_size > 0 ? c.vocab_size : static_cast<int>(default_vocabulary().size());
}

std::vector<double> row_of(const Mat& m) {
  std::vector<double> v(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index k = 0; k < m.cols(); ++k) v[static_cast<std::size_t>(k)] = static_cast<double>(m(0, k));
  return v;
}

}  // namespace

Network::Network(AgentConfig cfg, ParamSet& params, Rng& rng) : cfg_(std::move(cfg)) {
  if (cfg_.vocab_size == 0) cfg_.vocab_size = vocab_of(cfg_);
  ParamBuilder pb(params, rng);
  build(pb);
}

Network::Network(AgentConfig cfg, ParamSet& params) : cfg_(std::move(cfg)) {
  if (cfg_.vocab_size == 0) cfg_.vocab_size = vocab_of(cfg_);
  ParamBuilder pb(params);
  build(pb);
  if (pb.requested() != static_cast<int>(params.size()))
    throw ConfigurationError("parameter set holds " + std::to_string(params.size()) + " entries, the " +
                             architecture_name(cfg_.arch) + " agent uses " + std::to_string(pb.requested()));
}

void Network::build(ParamBuilder& pb) {
  cfg_.validate();
  if (cfg_.scripted()) throw ConfigurationError(std::string(architecture_name(cfg_.arch)) + " is a scripted policy");
  const AgentSizes& s = cfg_.sizes;
  const std::vector<int> mlp(static_cast<std::size_t>(s.mlp_layers), s.mlp_width);

  feature_ = Mlp::create(pb, "feature", cfg_.obs_dim, {s.feature, s.feature});
  int state_in = s.feature;
  if (cfg_.uses_directions()) {
    if (cfg_.uses_text()) {
      embed_ = Embedding::create(pb, "text.embed", cfg_.vocab_size, s.embed);
      text_ = LstmCell::create(pb, "text.lstm", s.embed, s.text_hidden);
    }
    fuse_dir_ = Mlp::create(pb, "fuse_dir", s.text_hidden + 2 * s.feature, mlp);
    if (cfg_.arch == Architecture::SoftA) {
      att_x_ = Linear::create(pb, "att.x", s.feature, s.attention);
      att_t_ = Linear::create(pb, "att.t", s.feature, s.attention);
      att_a_ = Linear::create(pb, "att.a", s.attention, 1);
    }
    state_in += cfg_.arch == Architecture::AllConcat ? cfg_.max_directions * s.mlp_width : s.mlp_width;
  }
  if (cfg_.use_prev_action) state_in += kActionCount;
  if (cfg_.use_prev_reward) state_in += 1;
  fuse_state_ = Mlp::create(pb, "fuse_state", state_in, mlp);
  core_ = LstmCell::create(pb, "core", s.mlp_width, s.core);
  policy_head_ = Linear::create(pb, "policy", s.core, kActionCount, true);
  value_head_ = Linear::create(pb, "value", s.core, 1, true);
}

Network Network::with_switching(Switcher mode, double tau) const {
  Network n = *this;
  n.cfg_.switcher = mode;
  n.cfg_.tau = tau;
  n.cfg_.validate();
  return n;
}

Value Network::encode_text(Tape& t, const ParamSet& ps, const std::vector<int>& ids) const {
  if (ids.empty() || !cfg_.uses_text()) return t.constant(Mat::Zero(1, cfg_.sizes.text_hidden));
  std::vector<int> clamped = ids;
  for (int& id : clamped)
    if (id < 0 || id >= cfg_.vocab_size) id = Vocabulary::kUnknown;
  const Value e = embed_(t, ps, clamped);
  LstmState s = text_.zero_state(t);
  for (int k = 0; k < static_cast<int>(clamped.size()); ++k) s = text_(t, ps, slice_rows(e, k, 1), s);
  return s.h;
}

Value Network::encode_feature(Tape& t, const ParamSet& ps, Value x) const {
  if (x.rows() != 1 || x.cols() != cfg_.obs_dim)
    throw ShapeError("feature encoder expects 1x" + std::to_string(cfg_.obs_dim) + ", got " + shape_str(x.data()));
  return feature_(t, ps, x);
}

Value Network::fuse_direction(Tape& t, const ParamSet& ps, Value iota, Value t_start, Value t_end) const {
  return fuse_dir_(t, ps, concat_cols({iota, t_start, t_end}));
}

std::vector<Value> Network::soft_attend(Tape& t, const ParamSet& ps, Value x, const std::vector<Value>& thumbs,
                                        const std::vector<Value>& iotas, const std::vector<Value>& t_ends,
                                        Value* weights) const {
  if (thumbs.empty()) throw ConfigurationError("soft attention over zero directions");
  const Value T = concat_rows(thumbs);
  // h_i = W_a tanh(W_x x + W_t t_i), one row per direction.
  const Value pre = add_row(att_t_(t, ps, T), att_x_(t, ps, x));
  const Value h = att_a_(t, ps, tanh(pre));
  const Value p = softmax(transpose(h));  // 1 x N
  if (weights) *weights = p;
  return {matmul(p, concat_rows(iotas)), matmul(p, T), matmul(p, concat_rows(t_ends))};
}

EpisodeState Network::begin_episode(Tape& t, const ParamSet& ps, const CityGraph& g, const Route& route,
                                    const PerceptParams& percept) const {
  EpisodeState es;
  es.core = core_.zero_state(t);
  if (!cfg_.uses_directions()) return es;
  const Vocabulary& vocab = default_vocabulary();
  for (const Direction& d : route.directions) {
    es.iota.push_back(encode_text(t, ps, vocab.encode(d.tokens)));
    if (cfg_.uses_thumbnails()) {
      es.t_start.push_back(encode_feature(t, ps, t.row(thumbnail(g, d.start_thumb, percept).features)));
      es.t_end.push_back(encode_feature(t, ps, t.row(thumbnail(g, d.end_thumb, percept).features)));
    } else {
      es.t_start.push_back(t.constant(Mat::Zero(1, cfg_.sizes.feature)));
      es.t_end.push_back(es.t_start.back());
    }
    if (cfg_.arch != Architecture::SoftA)
      es.fused.push_back(fuse_direction(t, ps, es.iota.back(), es.t_start.back(), es.t_end.back()));
  }
  return es;
}

Value Network::aggregate(Tape& t, const ParamSet& ps, EpisodeState& es, Value x, const std::vector<int>& visible) const {
  const int n = static_cast<int>(visible.size());
  if (n == 0) throw ConfigurationError("no visible directions");
  for (int v : visible)
    if (v < 0 || v >= static_cast<int>(es.iota.size()))
      throw LookupError("visible direction " + std::to_string(v) + " out of range");

  if (cfg_.arch == Architecture::AllConcat) {
    if (n > cfg_.max_directions)
      throw CapacityError("all-concat agent holds " + std::to_string(cfg_.max_directions) + " directions, route has " +
                          std::to_string(n));
    std::vector<Value> parts;
    for (int v : visible) parts.push_back(es.fused[static_cast<std::size_t>(v)]);
    if (n < cfg_.max_directions)
      parts.push_back(t.constant(Mat::Zero(1, (cfg_.max_directions - n) * cfg_.sizes.mlp_width)));
    return concat_cols(parts);
  }
  if (cfg_.hard_attention()) return es.fused[static_cast<std::size_t>(visible[static_cast<std::size_t>(es.active)])];
  if (cfg_.arch == Architecture::SoftA) {
    std::vector<Value> ts, io, te;
    for (int v : visible) {
      ts.push_back(es.t_start[static_cast<std::size_t>(v)]);
      io.push_back(es.iota[static_cast<std::size_t>(v)]);
      te.push_back(es.t_end[static_cast<std::size_t>(v)]);
    }
    Value w;
    const auto mixed = soft_attend(t, ps, x, ts, io, te, &w);
    es.soft_weights = row_of(w.data());
    return fuse_direction(t, ps, mixed[0], mixed[1], mixed[2]);
  }
  // AllSum and its relatives.
  std::vector<Value> parts;
  for (int v : visible) parts.push_back(es.fused[static_cast<std::size_t>(v)]);
  return parts.size() == 1 ? parts[0] : sum_over_rows(concat_rows(parts));
}

PolicyOutput Network::step(Tape& t, const ParamSet& ps, EpisodeState& es, const std::vector<float>& observation,
                           const std::vector<int>& visible, bool waypoint_event) const {
  const Value x = encode_feature(t, ps, t.row(observation));
  std::vector<Value> parts{x};
  if (cfg_.uses_directions()) {
    if (cfg_.hard_attention()) {
      // Switch on the attention computed from this observation.
      std::vector<std::vector<double>> thumbs;
      for (int v : visible) thumbs.push_back(row_of(es.t_start.at(static_cast<std::size_t>(v)).data()));
      es.attention = hard_attend(row_of(x.data()), thumbs);
      es.active = switch_index(es.active, es.attention, cfg_.tau, waypoint_event, cfg_.switcher,
                               static_cast<int>(visible.size()));
    }
    parts.push_back(aggregate(t, ps, es, x, visible));
  }
  if (cfg_.use_prev_action) {
    Mat a = Mat::Zero(1, kActionCount);
    if (es.prev_action >= 0) a(0, es.prev_action) = 1;
    parts.push_back(t.constant(std::move(a)));
  }
  if (cfg_.use_prev_reward) parts.push_back(t.scalar(static_cast<real>(es.prev_reward)));
  const Value p = fuse_state_(t, ps, concat_cols(parts));
  es.core = core_(t, ps, p, es.core);
  PolicyOutput out;
  out.logits = policy_head_(t, ps, es.core.h);
  out.log_probs = log_softmax(out.logits);
  out.value = value_head_(t, ps, es.core.h);
  return out;
}

void Network::feedback(EpisodeState& es, Action a, double reward) {
  es.prev_action = static_cast<int>(a);
  es.prev_reward = reward;
}

Action sample_action(const Mat& log_probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int k = 0; k < kActionCount; ++k) {
    acc += std::exp(static_cast<double>(log_probs(0, k)));
    if (u < acc) return kAllActions[static_cast<std::size_t>(k)];
  }
  return kAllActions[kActionCount - 1];
}

Action greedy_action(const Mat& log_probs) {
  int best = 0;
  for (int k = 1; k < kActionCount; ++k)
    if (log_probs(0, k) > log_probs(0, best)) best = k;
  return kAllActions[static_cast<std::size_t>(best)];
}

void NeuralController::begin(const EnvContext& ctx, const StepOutcome&) {
  net_.config().check_task(ctx.task);
  tape_.clear();
  es_ = net_.begin_episode(tape_, params_, *ctx.graph, *ctx.route, ctx.percept);
}

Action NeuralController::act(const EnvContext&, const AgentState& state, const StepOutcome& last, Rng& rng) {
  if (state.t > 0) es_.prev_reward = last.reward;
  const PolicyOutput out =
      net_.step(tape_, params_, es_, last.observation.features, last.visible_directions, last.events.waypoint_reached.has_value());
  const Action a = greedy_ ? greedy_action(out.log_probs.data()) : sample_action(out.log_probs.data(), rng);
  es_.prev_action = static_cast<int>(a);
  return a;
}

}  // namespace snav::inline SNAV_REAL_NS
