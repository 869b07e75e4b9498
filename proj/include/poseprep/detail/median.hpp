#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace poseprep::detail {

// Midpoint of the two central values for even sizes. Expects a non-empty input.
inline double median(std::vector<double> v) {
  const auto n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace poseprep::detail
