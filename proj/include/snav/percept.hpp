#pragma once

#include <vector>

#include "snav/citygraph.hpp"
#include "snav/langdir.hpp"

namespace snav {

struct PerceptParams {
  int dim = 64;
  int sector_count = 12;
  double landmark_weight = 0.6;
  double street_cue_weight = 0.25;
  double traffic_cue_weight = 0.15;
  double cone_half_angle = 30.0;

  void validate() const;  // throws ParameterError
};

struct Observation {
  std::vector<float> features;  // unit norm
  Pose pose;
};

// Synthetic view from a pose: a landmark signature interpolated between
// per-node sector vectors, plus street-name and traffic-direction cues for
// edges inside the viewing cone. Depends only on (graph, node, heading).
Observation observe(const CityGraph& g, NodeId node, double heading, const PerceptParams& params = {});

// Thumbnails come from the same generator as observations.
Observation thumbnail(const CityGraph& g, const Pose& pose, const PerceptParams& params = {});

// Individual components, exposed for tests.
std::vector<double> landmark_component(const CityGraph& g, NodeId node, double heading, const PerceptParams& params);
std::vector<double> traffic_component(const CityGraph& g, NodeId node, double heading, const PerceptParams& params);

double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b);

}  // namespace snav
