#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "debias/distribution.hpp"

namespace debias {

// Per-group view of a two-label world: feature distributions for label 0 and
// label 1 plus the label mix. alpha[0] + alpha[1] == 1.
struct GroupEstimate {
  DistEstimate dist[2];
  double alpha[2] = {0.5, 0.5};

  void validate() const {
    if (!(alpha[0] >= 0.0 && alpha[1] >= 0.0)) {
      throw std::domain_error("GroupEstimate: label rates must be non-negative");
    }
    const double s = alpha[0] + alpha[1];
    if (!(s > 0.999999 && s < 1.000001)) {
      throw std::domain_error("GroupEstimate: label rates must sum to 1");
    }
  }
};

// Current belief about every group, indexed by group id.
struct PopulationEstimate {
  std::vector<GroupEstimate> groups;

  std::size_t n_groups() const { return groups.size(); }
  const GroupEstimate& group(std::size_t g) const { return groups.at(g); }
  GroupEstimate& group(std::size_t g) { return groups.at(g); }
};

// Ground truth used by generators and oracles: the same shape as an estimate
// plus the arrival mix across groups. group_weights sums to 1.
struct PopulationSpec {
  PopulationEstimate truth;
  std::vector<double> group_weights;

  void validate() const {
    if (truth.groups.empty()) {
      throw std::domain_error("PopulationSpec: at least one group required");
    }
    if (group_weights.size() != truth.groups.size()) {
      throw std::domain_error("PopulationSpec: group_weights size mismatch");
    }
    double s = 0.0;
    for (double w : group_weights) {
      if (!(w >= 0.0)) throw std::domain_error("PopulationSpec: negative group weight");
      s += w;
    }
    if (!(s > 0.999999 && s < 1.000001)) {
      throw std::domain_error("PopulationSpec: group weights must sum to 1");
    }
    for (const auto& g : truth.groups) g.validate();
  }
};

}  // namespace debias
