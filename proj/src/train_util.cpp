#include <cmath>

#include "snav/rng.hpp"
#include "snav/hyperparams.hpp"

namespace snav {

namespace {

double log_uniform(Rng& rng, double lo, double hi) { return std::exp(rng.uniform(std::log(lo), std::log(hi))); }

}  // namespace

Hyperparams sample_hyperparams(Rng& rng) {
  Hyperparams h;
  h.lr = log_uniform(rng, 1e-4, 2.5e-4);
  h.entropy = log_uniform(rng, 5e-4, 5e-3);
  return h;
}

std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma) {
  std::vector<double> r(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    r[i] = acc;
  }
  return r;
}

std::vector<double> tau_grid() {
  std::vector<double> g;
  for (int k = 30; k <= 90; k += 5) g.push_back(k / 100.0);
  return g;
}

}  // namespace snav
