#include "snav/agent_config.hpp"

#include <algorithm>
#include <cmath>

#include "snav/error.hpp"

namespace snav {

using nlohmann::json;

namespace {

constexpr Architecture kArchitectures[] = {
    Architecture::AllConcat, Architecture::AllSum,   Architecture::HardA,  Architecture::SoftA,
    Architecture::NoDir,     Architecture::NoSignal, Architecture::NoText, Architecture::NoThumb,
    Architecture::Random,    Architecture::Forward,  Architecture::Forced};

}  // namespace

const char* architecture_name(Architecture a) {
  switch (a) {
    case Architecture::AllConcat: return "all-concat";
    case Architecture::AllSum: return "all-sum";
    case Architecture::HardA: return "hard-a";
    case Architecture::SoftA: return "soft-a";
    case Architecture::NoDir: return "no-dir";
    case Architecture::NoSignal: return "no-signal";
    case Architecture::NoText: return "no-text";
    case Architecture::NoThumb: return "no-thumb";
    case Architecture::Random: return "random";
    case Architecture::Forward: return "forward";
    case Architecture::Forced: return "forced";
  }
  return "?";
}

Architecture parse_architecture(const std::string& s) {
  for (Architecture a : kArchitectures)
    if (s == architecture_name(a)) return a;
  std::string names;
  for (Architecture a : kArchitectures) names += std::string(names.empty() ? "" : ", ") + architecture_name(a);
  throw ParameterError("unknown architecture '" + s + "' (expected one of " + names + ")");
}

bool AgentConfig::uses_directions() const {
  return !scripted() && arch != Architecture::NoDir && arch != Architecture::NoSignal;
}

bool AgentConfig::uses_text() const { return uses_directions() && arch != Architecture::NoText; }

bool AgentConfig::uses_thumbnails() const { return uses_directions() && arch != Architecture::NoThumb; }

void AgentConfig::validate() const {
  const AgentSizes& s = sizes;
  if (s.embed < 1 || s.text_hidden < 1 || s.feature < 1 || s.mlp_width < 1 || s.mlp_layers < 1 || s.core < 1 ||
      s.attention < 1)
    throw ConfigurationError("agent sizes must be positive");
  if (obs_dim < 1) throw ConfigurationError("observation dimension must be positive");
  if (vocab_size < 0) throw ConfigurationError("vocabulary size must be nonnegative");
  if (arch == Architecture::AllConcat && max_directions < 1)
    throw ConfigurationError("all-concat needs max_directions >= 1");
  if (arch == Architecture::NoSignal && use_prev_reward)
    throw ConfigurationError("no-signal agents cannot take the previous reward as input");
  if (switcher == Switcher::Threshold && !(tau > 0.0 && tau < 1.0))
    throw ConfigurationError("threshold switching needs tau in (0, 1)");
}

void AgentConfig::check_task(const TaskSpec& task) const {
  if (!scripted() && use_prev_reward && !task.emits_waypoint_rewards())
    throw ConfigurationError(std::string("agent takes the previous reward as input, which the ") +
                             variant_name(task.variant) + " task does not provide");
}

json agent_config_to_json(const AgentConfig& c) {
  return json{{"arch", architecture_name(c.arch)},
              {"max_directions", c.max_directions},
              {"use_prev_action", c.use_prev_action},
              {"use_prev_reward", c.use_prev_reward},
              {"switcher", c.switcher == Switcher::Threshold ? "threshold" : "waypoint-signal"},
              {"tau", c.tau},
              {"obs_dim", c.obs_dim},
              {"vocab_size", c.vocab_size},
              {"sizes",
               {{"embed", c.sizes.embed},
                {"text_hidden", c.sizes.text_hidden},
                {"feature", c.sizes.feature},
                {"mlp_width", c.sizes.mlp_width},
                {"mlp_layers", c.sizes.mlp_layers},
                {"core", c.sizes.core},
                {"attention", c.sizes.attention}}}};
}

AgentConfig agent_config_from_json(const json& j) {
  AgentConfig c;
  try {
    c.arch = parse_architecture(j.value("arch", std::string(architecture_name(c.arch))));
    c.max_directions = j.value("max_directions", c.max_directions);
    c.use_prev_action = j.value("use_prev_action", c.use_prev_action);
    c.use_prev_reward = j.value("use_prev_reward", c.use_prev_reward);
    const std::string sw = j.value("switcher", std::string("waypoint-signal"));
    if (sw == "threshold")
      c.switcher = Switcher::Threshold;
    else if (sw == "waypoint-signal")
      c.switcher = Switcher::WaypointSignal;
    else
      throw ConfigurationError("unknown switcher '" + sw + "'");
    c.tau = j.value("tau", c.tau);
    c.obs_dim = j.value("obs_dim", c.obs_dim);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    if (j.contains("sizes")) {
      const json& s = j.at("sizes");
      c.sizes.embed = s.value("embed", c.sizes.embed);
      c.sizes.text_hidden = s.value("text_hidden", c.sizes.text_hidden);
      c.sizes.feature = s.value("feature", c.sizes.feature);
      c.sizes.mlp_width = s.value("mlp_width", c.sizes.mlp_width);
      c.sizes.mlp_layers = s.value("mlp_layers", c.sizes.mlp_layers);
      c.sizes.core = s.value("core", c.sizes.core);
      c.sizes.attention = s.value("attention", c.sizes.attention);
    }
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("malformed agent config: ") + e.what());
  }
  c.validate();
  return c;
}

AttentionState hard_attend(const std::vector<double>& x, const std::vector<std::vector<double>>& thumbs) {
  AttentionState a;
  if (thumbs.empty()) return a;
  for (const auto& t : thumbs) {
    double d = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) d += (t[k] - x[k]) * (t[k] - x[k]);
    a.logits.push_back(-std::sqrt(d));
  }
  const double m = *std::max_element(a.logits.begin(), a.logits.end());
  double z = 0.0;
  for (double l : a.logits) z += std::exp(l - m);
  a.best = 0;
  for (std::size_t i = 0; i < a.logits.size(); ++i) {
    a.probs.push_back(std::exp(a.logits[i] - m) / z);
    if (a.logits[i] > a.logits[static_cast<std::size_t>(a.best)]) a.best = static_cast<int>(i);
  }
  return a;
}

int switch_index(int prev, const AttentionState& attn, double tau, bool waypoint_event, Switcher mode, int n) {
  int next = prev;
  if (mode == Switcher::WaypointSignal) {
    if (waypoint_event) next = prev + 1;
  } else if (!attn.probs.empty() && attn.probs[static_cast<std::size_t>(attn.best)] > tau) {
    next = attn.best;
  }
  return std::clamp(next, 0, std::max(n - 1, 0));
}

}  // namespace snav
