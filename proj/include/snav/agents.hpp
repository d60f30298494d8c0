#pragma once

#include <string>
#include <vector>

#include "snav/agent_config.hpp"
#include "snav/autodiff.hpp"
#include "snav/env.hpp"
#include "snav/nn.hpp"
#include "snav/scripted.hpp"

namespace snav::inline SNAV_REAL_NS {

struct PolicyOutput {
  Value logits;     // 1 x 5
  Value log_probs;  // 1 x 5
  Value value;      // 1 x 1
};

// Per-episode tape state: encoded directions (computed once) and the recurrent core.
struct EpisodeState {
  std::vector<Value> iota;
  std::vector<Value> t_start;
  std::vector<Value> t_end;
  std::vector<Value> fused;
  LstmState core;
  int active = 0;  // hard attention, index into the visible list
  int prev_action = -1;
  double prev_reward = 0.0;
  AttentionState attention;
  std::vector<double> soft_weights;
};

class Network {
 public:
  // Fresh parameters.
  Network(AgentConfig cfg, ParamSet& params, Rng& rng);
  // Binds to existing parameters by name (after loading a checkpoint).
  Network(AgentConfig cfg, ParamSet& params);

  const AgentConfig& config() const { return cfg_; }
  // Same parameters, different hard-attention switching rule.
  Network with_switching(Switcher mode, double tau) const;

  // Final LSTM state over the embedded tokens; zeros for an empty sequence.
  Value encode_text(Tape& t, const ParamSet& ps, const std::vector<int>& ids) const;
  Value encode_feature(Tape& t, const ParamSet& ps, Value x) const;
  Value fuse_direction(Tape& t, const ParamSet& ps, Value iota, Value t_start, Value t_end) const;
  // Soft attention: mixing weights and the attended (iota, t_start, t_end).
  std::vector<Value> soft_attend(Tape& t, const ParamSet& ps, Value x, const std::vector<Value>& thumbs,
                                 const std::vector<Value>& iotas, const std::vector<Value>& t_ends,
                                 Value* weights = nullptr) const;

  EpisodeState begin_episode(Tape& t, const ParamSet& ps, const CityGraph& g, const Route& route,
                             const PerceptParams& percept = {}) const;
  // One policy step. `visible` indexes route directions (ignored by NoDir/NoSignal).
  PolicyOutput step(Tape& t, const ParamSet& ps, EpisodeState& es, const std::vector<float>& observation,
                    const std::vector<int>& visible, bool waypoint_event) const;
  // Records the executed action and the reward it earned for the next step's inputs.
  static void feedback(EpisodeState& es, Action a, double reward);

 private:
  void build(ParamBuilder& pb);
  Value aggregate(Tape& t, const ParamSet& ps, EpisodeState& es, Value x, const std::vector<int>& visible) const;

  AgentConfig cfg_;
  Embedding embed_;
  LstmCell text_;
  Mlp feature_;
  Mlp fuse_dir_;
  Mlp fuse_state_;
  LstmCell core_;
  Linear policy_head_;
  Linear value_head_;
  Linear att_x_;
  Linear att_t_;
  Linear att_a_;
};

// A learned agent driving an environment (evaluation and rollouts).
class NeuralController : public Controller {
 public:
  NeuralController(const Network& net, const ParamSet& params, bool greedy = false)
      : net_(net), params_(params), greedy_(greedy) {}

  std::string name() const override { return architecture_name(net_.config().arch); }
  void begin(const EnvContext& ctx, const StepOutcome& first) override;
  Action act(const EnvContext& ctx, const AgentState& state, const StepOutcome& last, Rng& rng) override;

  const EpisodeState& episode() const { return es_; }

 private:
  const Network& net_;
  const ParamSet& params_;
  bool greedy_;
  Tape tape_;
  EpisodeState es_;
};

// Samples from a categorical distribution given log-probabilities.
Action sample_action(const Mat& log_probs, Rng& rng);
Action greedy_action(const Mat& log_probs);

}  // namespace snav::inline SNAV_REAL_NS
