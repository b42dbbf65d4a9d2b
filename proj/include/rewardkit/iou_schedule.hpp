// SPDX-License-Identifier: Apache-2.0
//
// Piecewise-constant IoU threshold as a function of training progress.

#pragma once

#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace rewardkit {

class BadProgress : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ThresholdSchedule {
 public:
  struct Stage {
    double upper_bound;  // progress at which the next stage begins
    double epsilon;

    bool operator==(const Stage&) const = default;
  };

  /// Validates: bounds strictly increasing in (0, 1] ending at 1.0,
  /// thresholds in (0, 1] and non-decreasing. Throws std::invalid_argument.
  explicit ThresholdSchedule(std::vector<Stage> stages);

  /// 0.85 below 10% of training, 0.95 until 25%, 0.99 afterwards.
  static ThresholdSchedule curriculum();
  static ThresholdSchedule fixed(double epsilon);

  /// Reads `{"bounds": [...], "thresholds": [...]}`.
  static ThresholdSchedule from_json(const nlohmann::json& spec);
  nlohmann::json to_json() const;

  const std::vector<Stage>& stages() const { return stages_; }
  bool operator==(const ThresholdSchedule&) const = default;

 private:
  std::vector<Stage> stages_;
};

/// Stage i covers [bound_{i-1}, bound_i); the last stage also includes 1.0.
/// Throws BadProgress outside [0, 1].
double dynamic_threshold(double progress, const ThresholdSchedule& schedule);

}  // namespace rewardkit
