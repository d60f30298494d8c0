#pragma once

#include <string>
#include <vector>

#include "snav/autodiff.hpp"
#include "snav/rng.hpp"

namespace snav::inline SNAV_REAL_NS {

// Declares parameters by name. In create mode they are added to the set with
// fresh initial values; in bind mode they must already exist with the given
// shape (used when rebuilding a network around loaded weights).
class ParamBuilder {
 public:
  enum class Init { Zero, Uniform, Normal };

  ParamBuilder(ParamSet& params, Rng& rng) : params_(&params), rng_(&rng) {}
  explicit ParamBuilder(ParamSet& params) : params_(&params) {}

  bool binding() const { return rng_ == nullptr; }
  // scale: half-width for Uniform, standard deviation for Normal.
  int get(const std::string& name, int rows, int cols, Init init, double scale = 0.0);
  ParamSet& params() { return *params_; }
  int requested() const { return requested_; }

 private:
  ParamSet* params_;
  Rng* rng_ = nullptr;
  int requested_ = 0;
};

struct Linear {
  int w = -1;
  int b = -1;
  int in = 0;
  int out = 0;

  // Weights uniform in +-1/sqrt(in), zero bias; `zero` zeroes the weights too.
  static Linear create(ParamBuilder& pb, const std::string& name, int in, int out, bool zero = false);
  Value operator()(Tape& t, const ParamSet& ps, Value x) const;
};

struct LstmState {
  Value h;
  Value c;
};

// Standard gated cell over the concatenation [x, h]; gate order i, f, g, o.
struct LstmCell {
  int w = -1;
  int b = -1;
  int in = 0;
  int hidden = 0;

  // Weights uniform in +-1/sqrt(in + hidden); forget-gate bias starts at 1.
  static LstmCell create(ParamBuilder& pb, const std::string& name, int in, int hidden);
  LstmState zero_state(Tape& t) const;
  LstmState operator()(Tape& t, const ParamSet& ps, Value x, const LstmState& s) const;
};

struct Embedding {
  int table = -1;
  int vocab = 0;
  int dim = 0;

  static Embedding create(ParamBuilder& pb, const std::string& name, int vocab, int dim);
  Value operator()(Tape& t, const ParamSet& ps, const std::vector<int>& ids) const;  // ids.size() x dim
};

// Dense layers with relu after each one.
struct Mlp {
  std::vector<Linear> layers;

  static Mlp create(ParamBuilder& pb, const std::string& name, int in, const std::vector<int>& widths);
  Value operator()(Tape& t, const ParamSet& ps, Value x) const;
  int out() const { return layers.back().out; }
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(const ParamSet& params, AdamConfig cfg);

  // Bias-corrected update; zeroes `grads` afterwards. Throws DivergenceError
  // (parameters untouched) when a gradient is not finite.
  void step(ParamSet& params, GradSet& grads);

  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }
  const Mat& first_moment(int i) const { return m_.at(static_cast<std::size_t>(i)); }
  const Mat& second_moment(int i) const { return v_.at(static_cast<std::size_t>(i)); }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
};

}  // namespace snav::inline SNAV_REAL_NS
