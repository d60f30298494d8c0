#pragma once

#include <vector>

#include "snav/rng.hpp"

namespace snav {

struct Hyperparams {
  double lr = 0.0;
  double entropy = 0.0;
};

// Log-uniform draws: lr in [1e-4, 2.5e-4], entropy cost in [5e-4, 5e-3].
Hyperparams sample_hyperparams(Rng& rng);

// R_t = r_t + gamma * R_{t+1}, with R_T = r_T.
std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma);

// Threshold grid 0.30, 0.35, ..., 0.90.
std::vector<double> tau_grid();

}  // namespace snav
