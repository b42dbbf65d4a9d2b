// SPDX-License-Identifier: Apache-2.0
//
// Detection and grounding rewards: thresholded IoU accuracy under a
// progress-dependent threshold, tag-count format reward, and a per-sample
// mAP computed from list order (model outputs carry no confidences).

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rewardkit/iou_schedule.hpp"
#include "rewardkit/parsing.hpp"
#include "rewardkit/reward.hpp"
#include "rewardkit/sample.hpp"

namespace rewardkit {

/// Intersection over union; 0 when the union has no area.
double iou(const Box& a, const Box& b);
inline double iou(const DetBox& a, const DetBox& b) { return iou(a.bbox, b.bbox); }

/// `iou_value` when it reaches `epsilon` (inclusive), otherwise 0.
double thresholded_iou_reward(double iou_value, double epsilon);

/// Case-insensitive ASCII comparison used for class labels.
bool labels_equal(std::string_view a, std::string_view b);

struct MatchPair {
  std::size_t gt_index;
  std::size_t pred_index;
  double iou;
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<std::size_t> unmatched_gt;
  std::vector<std::size_t> unmatched_pred;
};

/// Greedy one-to-one matching of label-equal boxes in descending IoU order,
/// ties broken by (gt index, pred index). Only pairs with IoU > 0 match.
MatchResult match_detections(std::span<const DetBox> preds,
                             std::span<const DetBox> gts);

/// Mean over ground-truth boxes of the thresholded IoU of their match.
/// With no ground truth: 1 if there are no predictions either, else 0.
double detection_accuracy_reward(std::span<const DetBox> preds,
                                 std::span<const DetBox> gts, double epsilon);

/// 0.25 for each of <think>, </think>, <answer>, </answer> that occurs
/// exactly once.
double format_reward(std::string_view response);

/// Sample-level mAP. Predictions are ranked by list order; per class the
/// area under the all-points interpolated precision curve is averaged over
/// the classes present in `gts`, then over `iou_thresholds`.
double sample_map(std::span<const DetBox> preds, std::span<const DetBox> gts,
                  std::span<const double> iou_thresholds);

/// Thresholds reported as pass rates in aux metrics.
const std::vector<double>& default_monitor_thresholds();
/// 0.50, 0.55, ..., 0.95.
const std::vector<double>& default_map_thresholds();

struct DetectionOptions {
  ThresholdSchedule schedule = ThresholdSchedule::curriculum();
  std::vector<double> monitor_thresholds = default_monitor_thresholds();
  std::vector<double> map_thresholds = default_map_thresholds();

  /// Applies `iou_schedule`, `monitor_thresholds` and `map_thresholds`
  /// overrides from a sample's verifier_parm.
  static DetectionOptions from_verifier_parm(const nlohmann::json& parm);
};

/// Key under which the pass rate at `threshold` is reported, e.g. "iou@0.50".
std::string iou_metric_key(double threshold);

/// Parses the answer block of `response` and scores it against the
/// ground-truth detection list. Unparseable answers score accuracy 0 but
/// keep their format reward. Throws std::invalid_argument if the ground
/// truth itself does not parse.
RewardBreakdown compute_detection_reward(const RewardSpec& spec,
                                         std::string_view response,
                                         double progress,
                                         const DetectionOptions& options);
RewardBreakdown compute_detection_reward(const RewardSpec& spec,
                                         std::string_view response,
                                         double progress);
RewardBreakdown compute_detection_reward(const Sample& sample,
                                         std::string_view response,
                                         double progress);

}  // namespace rewardkit
