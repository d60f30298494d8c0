#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "snav/env.hpp"

namespace snav {

enum class Architecture : std::uint8_t {
  AllConcat, AllSum, HardA, SoftA, NoDir, NoSignal, NoText, NoThumb, Random, Forward, Forced
};

const char* architecture_name(Architecture a);
Architecture parse_architecture(const std::string& s);  // throws ParameterError

enum class Switcher : std::uint8_t { WaypointSignal, Threshold };

struct AgentSizes {
  int embed = 32;
  int text_hidden = 64;
  int feature = 128;
  int mlp_width = 256;
  int mlp_layers = 3;
  int core = 256;
  int attention = 64;  // soft attention hidden width
};

struct AgentConfig {
  Architecture arch = Architecture::AllSum;
  int max_directions = 4;  // AllConcat only
  bool use_prev_action = true;
  bool use_prev_reward = true;
  Switcher switcher = Switcher::WaypointSignal;
  double tau = 0.6;
  AgentSizes sizes;
  int obs_dim = 64;
  int vocab_size = 0;  // 0 selects the shared default vocabulary

  bool scripted() const { return arch == Architecture::Random || arch == Architecture::Forward; }
  bool uses_directions() const;
  bool uses_text() const;
  bool uses_thumbnails() const;
  // Direction aggregation family; NoText attends like HardA, NoThumb and Forced sum like AllSum.
  bool hard_attention() const { return arch == Architecture::HardA || arch == Architecture::NoText; }

  void validate() const;  // throws ConfigurationError
  // The previous reward is a waypoint signal, unavailable in list-goal.
  void check_task(const TaskSpec& task) const;
};

nlohmann::json agent_config_to_json(const AgentConfig& c);
AgentConfig agent_config_from_json(const nlohmann::json& j);

struct AttentionState {
  std::vector<double> logits;  // -||t_i - x||
  std::vector<double> probs;
  int best = 0;                // argmax, lowest index on ties
};

// Hard attention over the rows of `thumbs` for query row `x`.
AttentionState hard_attend(const std::vector<double>& x, const std::vector<std::vector<double>>& thumbs);

// Index update for hard attention. Waypoint-signal mode advances by one on a
// waypoint event; threshold mode jumps to attn.best when its probability
// exceeds tau. The result is clamped to [0, n).
int switch_index(int prev, const AttentionState& attn, double tau, bool waypoint_event, Switcher mode, int n);

}  // namespace snav
