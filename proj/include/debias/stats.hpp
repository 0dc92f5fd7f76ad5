#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace debias {

// Empirical percentile with linear interpolation between order statistics
// (the common spreadsheet/NumPy default): index h = p * (n - 1), value
// interpolated between the two bracketing order statistics. p = 0.5 on an
// even-sized sample averages the two middle values.
inline double empirical_percentile(std::vector<double> values, double p) {
  if (values.empty()) {
    throw std::domain_error("empirical_percentile: empty sample");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error("empirical_percentile: p must lie in [0,1]");
  }
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const std::size_t i = static_cast<std::size_t>(h);
  if (i + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(i);
  return values[i] + frac * (values[i + 1] - values[i]);
}

}  // namespace debias
