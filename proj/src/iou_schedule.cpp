// SPDX-License-Identifier: Apache-2.0

#include "rewardkit/iou_schedule.hpp"

#include <cmath>
#include <string>

namespace rewardkit {

ThresholdSchedule::ThresholdSchedule(std::vector<Stage> stages)
    : stages_(std::move(stages)) {
  if (stages_.empty()) {
    throw std::invalid_argument("threshold schedule has no stages");
  }
  double prev_bound = 0.0;
  double prev_eps = 0.0;
  for (const auto& s : stages_) {
    if (!(s.upper_bound > prev_bound) || s.upper_bound > 1.0) {
      throw std::invalid_argument(
          "schedule bounds must increase strictly within (0, 1]");
    }
    if (!(s.epsilon > 0.0) || s.epsilon > 1.0) {
      throw std::invalid_argument("schedule thresholds must lie in (0, 1]");
    }
    if (s.epsilon < prev_eps) {
      throw std::invalid_argument("schedule thresholds must not decrease");
    }
    prev_bound = s.upper_bound;
    prev_eps = s.epsilon;
  }
  if (stages_.back().upper_bound != 1.0) {
    throw std::invalid_argument("final schedule bound must be 1.0");
  }
}

ThresholdSchedule ThresholdSchedule::curriculum() {
  return ThresholdSchedule({{0.10, 0.85}, {0.25, 0.95}, {1.0, 0.99}});
}

ThresholdSchedule ThresholdSchedule::fixed(double epsilon) {
  return ThresholdSchedule({{1.0, epsilon}});
}

ThresholdSchedule ThresholdSchedule::from_json(const nlohmann::json& spec) {
  if (!spec.is_object()) {
    throw std::invalid_argument("schedule must be a map");
  }
  const auto bounds = spec.find("bounds");
  const auto thresholds = spec.find("thresholds");
  if (bounds == spec.end() || thresholds == spec.end() || !bounds->is_array() ||
      !thresholds->is_array() || bounds->size() != thresholds->size()) {
    throw std::invalid_argument(
        "schedule needs equal-length 'bounds' and 'thresholds' lists");
  }
  std::vector<Stage> stages;
  for (std::size_t i = 0; i < bounds->size(); ++i) {
    if (!(*bounds)[i].is_number() || !(*thresholds)[i].is_number()) {
      throw std::invalid_argument("schedule entries must be numbers");
    }
    stages.push_back({(*bounds)[i].get<double>(),
                      (*thresholds)[i].get<double>()});
  }
  return ThresholdSchedule(std::move(stages));
}

nlohmann::json ThresholdSchedule::to_json() const {
  nlohmann::json bounds = nlohmann::json::array();
  nlohmann::json thresholds = nlohmann::json::array();
  for (const auto& s : stages_) {
    bounds.push_back(s.upper_bound);
    thresholds.push_back(s.epsilon);
  }
  return {{"bounds", bounds}, {"thresholds", thresholds}};
}

double dynamic_threshold(double progress, const ThresholdSchedule& schedule) {
  if (!(progress >= 0.0 && progress <= 1.0)) {
    throw BadProgress("training progress " + std::to_string(progress) +
                      " outside [0, 1]");
  }
  for (const auto& s : schedule.stages()) {
    if (progress < s.upper_bound) return s.epsilon;
  }
  return schedule.stages().back().epsilon;
}

}  // namespace rewardkit
