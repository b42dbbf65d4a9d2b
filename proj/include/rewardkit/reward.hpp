// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>

namespace rewardkit {

/// Per-sample scoring result returned by every verifier.
struct RewardBreakdown {
  double accuracy = 0.0;  // in [0, 1]
  double format = 0.0;    // in [0, 1]
  double combined = 0.0;  // accuracy_ratio * accuracy + format_ratio * format
  std::map<std::string, double> aux_metrics;
};

inline double combine_reward(double accuracy_ratio, double accuracy,
                             double format_ratio, double format) {
  return accuracy_ratio * accuracy + format_ratio * format;
}

}  // namespace rewardkit
