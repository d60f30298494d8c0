#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "snav/agents.hpp"
#include "snav/evalharness.hpp"
#include "snav/hyperparams.hpp"

namespace snav::inline SNAV_REAL_NS {

struct TrainConfig {
  double gamma = 0.99;
  double lr = 1.5e-4;
  double entropy = 1e-3;
  double value_weight = 0.5;
  int workers = 1;
  int episodes_per_update = 8;
  long max_env_steps = 1'000'000;
  std::uint64_t seed = 1;
  TaskSpec task;  // training_mode is forced on

  void validate() const;  // throws ConfigurationError
};

enum class RolloutMode : std::uint8_t { Sample, Teacher, Student };

struct Trajectory {
  std::vector<Value> log_probs;  // 1 x 5 per step
  std::vector<Value> values;
  std::vector<Action> actions;   // executed
  std::vector<Action> targets;   // oracle actions (teacher/student modes)
  std::vector<double> rewards;
  std::vector<NodeId> nodes;     // agent node after each step
  bool goal_reached = false;
  int steps() const { return static_cast<int>(actions.size()); }
  double total_reward() const;
};

// Runs one episode on `tape` from reset to done.
Trajectory collect_episode(Tape& tape, const Network& net, const ParamSet& params, const EnvContext& ctx, Rng& rng,
                           RolloutMode mode = RolloutMode::Sample);

struct LossStats {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;  // mean per-step policy entropy
  double cross_entropy = 0.0;  // mean per-step, forced modes
};

// -sum log pi(a_t) A_t + w * sum (R_t - V_t)^2 - sigma * sum H_t, with the
// advantage A_t = R_t - V_t held constant in the first term.
Value a2c_loss(Tape& tape, const Trajectory& traj, const TrainConfig& cfg, LossStats* stats = nullptr);
// Sum over steps of -log pi(oracle action).
Value forced_loss(Tape& tape, const Trajectory& traj, LossStats* stats = nullptr);

struct TrainData {
  const CityGraph* graph = nullptr;
  std::vector<Route> routes;
  PerceptParams percept;
};

struct UpdateStats {
  long update = 0;
  long env_steps = 0;
  double mean_return = 0.0;
  double goal_rate_train = 0.0;
  double entropy = 0.0;
  double value_loss = 0.0;
  double policy_loss = 0.0;
  double cross_entropy = 0.0;
};

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const UpdateStats& s);

class Trainer {
 public:
  Trainer(const Network& net, ParamSet& params, TrainConfig cfg, TrainData data);

  // One synchronous A2C update over episodes_per_update episodes spread
  // over the workers. Gradients are summed in episode order, so results do
  // not depend on the worker count.
  UpdateStats update();
  // One supervised episode against oracle actions and one optimizer step.
  UpdateStats forced_update(RolloutMode mode);

  // Repeats update() until max_env_steps; the callback may stop early by returning false.
  std::vector<UpdateStats> train(const std::function<bool(const UpdateStats&)>& on_update = {});

  long env_steps() const { return env_steps_; }
  long updates() const { return updates_; }
  const TrainConfig& config() const { return cfg_; }
  Adam& optimizer() { return adam_; }

 private:
  EnvContext context_for(const Route& r) const;

  const Network& net_;
  ParamSet& params_;
  TrainConfig cfg_;
  TrainData data_;
  Adam adam_;
  long env_steps_ = 0;
  long updates_ = 0;
  long episodes_ = 0;
};

struct CurriculumResult {
  ParamSet phase1;
  ParamSet phase2;
  std::vector<UpdateStats> log1;
  std::vector<UpdateStats> log2;
};

// Phase 1 on step-by-step, then phase 2 on list-incremental starting from
// the phase-1 parameters. The variants in the two configs are overridden.
CurriculumResult curriculum_train(const Network& net, const ParamSet& init, TrainConfig phase1, TrainConfig phase2,
                                  const TrainData& data);

struct TauSearch {
  double best_tau = 0.0;
  std::vector<std::pair<double, double>> scores;  // (tau, goal rate)
};

// Grid search of the hard-attention threshold on validation routes; ties
// go to the smaller tau. Throws ConfigurationError for empty routes.
TauSearch tune_tau(const Network& net, const ParamSet& params, const CityGraph& g, const std::vector<Route>& routes,
                   const TaskSpec& task, const EvalOptions& opts = {});

}  // namespace snav::inline SNAV_REAL_NS
