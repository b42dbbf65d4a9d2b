// SPDX-License-Identifier: Apache-2.0

#include "rewardkit/detection.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rewardkit {

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double inter = iw > 0 && ih > 0 ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double thresholded_iou_reward(double iou_value, double epsilon) {
  return iou_value >= epsilon ? iou_value : 0.0;
}

bool labels_equal(std::string_view a, std::string_view b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](char x, char y) {
    return std::tolower(static_cast<unsigned char>(x)) ==
           std::tolower(static_cast<unsigned char>(y));
  });
}

MatchResult match_detections(std::span<const DetBox> preds,
                             std::span<const DetBox> gts) {
  std::vector<MatchPair> candidates;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    for (std::size_t p = 0; p < preds.size(); ++p) {
      if (!labels_equal(gts[g].label, preds[p].label)) continue;
      const double v = iou(gts[g], preds[p]);
      if (v > 0) candidates.push_back({g, p, v});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const MatchPair& a, const MatchPair& b) {
              if (a.iou != b.iou) return a.iou > b.iou;
              if (a.gt_index != b.gt_index) return a.gt_index < b.gt_index;
              return a.pred_index < b.pred_index;
            });

  MatchResult result;
  std::vector<bool> gt_used(gts.size(), false);
  std::vector<bool> pred_used(preds.size(), false);
  for (const auto& c : candidates) {
    if (gt_used[c.gt_index] || pred_used[c.pred_index]) continue;
    gt_used[c.gt_index] = pred_used[c.pred_index] = true;
    result.pairs.push_back(c);
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!gt_used[g]) result.unmatched_gt.push_back(g);
  }
  for (std::size_t p = 0; p < preds.size(); ++p) {
    if (!pred_used[p]) result.unmatched_pred.push_back(p);
  }
  return result;
}

namespace {

// Matched IoU per ground-truth box, 0 for unmatched ones.
std::vector<double> matched_ious(std::span<const DetBox> preds,
                                 std::span<const DetBox> gts) {
  std::vector<double> out(gts.size(), 0.0);
  for (const auto& pair : match_detections(preds, gts).pairs) {
    out[pair.gt_index] = pair.iou;
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// All-points interpolated AP for one class at one IoU threshold.
double class_average_precision(const std::vector<const DetBox*>& preds,
                               const std::vector<const DetBox*>& gts,
                               double threshold) {
  if (preds.empty()) return 0.0;
  std::vector<bool> used(gts.size(), false);
  std::vector<double> precision(preds.size());
  std::vector<double> recall(preds.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    double best = -1.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g]) continue;
      const double v = iou(*preds[k], *gts[g]);
      if (v >= threshold && v > best) {
        best = v;
        best_gt = g;
      }
    }
    if (best_gt < gts.size()) {
      used[best_gt] = true;
      ++tp;
    }
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / static_cast<double>(gts.size());
  }
  for (std::size_t k = preds.size() - 1; k-- > 0;) {
    precision[k] = std::max(precision[k], precision[k + 1]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return ap;
}

std::vector<double> number_list(const nlohmann::json& v, const char* name) {
  if (!v.is_array() || v.empty()) {
    throw std::invalid_argument(std::string(name) + " must be a non-empty list");
  }
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) {
      throw std::invalid_argument(std::string(name) + " entries must be numbers");
    }
    const double t = e.get<double>();
    if (!(t > 0.0 && t <= 1.0)) {
      throw std::invalid_argument(std::string(name) + " entries must lie in (0, 1]");
    }
    out.push_back(t);
  }
  return out;
}

}  // namespace

double detection_accuracy_reward(std::span<const DetBox> preds,
                                 std::span<const DetBox> gts, double epsilon) {
  if (gts.empty()) return preds.empty() ? 1.0 : 0.0;
  double sum = 0.0;
  for (double v : matched_ious(preds, gts)) {
    sum += thresholded_iou_reward(v, epsilon);
  }
  return sum / static_cast<double>(gts.size());
}

double format_reward(std::string_view response) {
  const TagCensus c = census_tags(response);
  int hits = 0;
  for (std::size_t n : {c.think_open, c.think_close, c.answer_open, c.answer_close}) {
    if (n == 1) ++hits;
  }
  return 0.25 * hits;
}

double sample_map(std::span<const DetBox> preds, std::span<const DetBox> gts,
                  std::span<const double> iou_thresholds) {
  if (gts.empty()) return preds.empty() ? 1.0 : 0.0;
  if (iou_thresholds.empty()) {
    throw std::invalid_argument("sample_map needs at least one IoU threshold");
  }
  std::map<std::string, std::vector<const DetBox*>> gt_by_class;
  std::map<std::string, std::vector<const DetBox*>> pred_by_class;
  for (const auto& g : gts) gt_by_class[lower(g.label)].push_back(&g);
  for (const auto& p : preds) pred_by_class[lower(p.label)].push_back(&p);

  double total = 0.0;
  for (double threshold : iou_thresholds) {
    double class_sum = 0.0;
    for (const auto& [label, class_gts] : gt_by_class) {
      static const std::vector<const DetBox*> kNone;
      auto it = pred_by_class.find(label);
      class_sum += class_average_precision(
          it == pred_by_class.end() ? kNone : it->second, class_gts, threshold);
    }
    total += class_sum / static_cast<double>(gt_by_class.size());
  }
  return total / static_cast<double>(iou_thresholds.size());
}

const std::vector<double>& default_monitor_thresholds() {
  static const std::vector<double> kThresholds = {0.50, 0.75, 0.95, 0.99};
  return kThresholds;
}

const std::vector<double>& default_map_thresholds() {
  static const std::vector<double> kThresholds = {
      0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
  return kThresholds;
}

DetectionOptions DetectionOptions::from_verifier_parm(
    const nlohmann::json& parm) {
  DetectionOptions options;
  if (!parm.is_object()) return options;
  if (auto it = parm.find("iou_schedule"); it != parm.end()) {
    options.schedule = ThresholdSchedule::from_json(*it);
  }
  if (auto it = parm.find("monitor_thresholds"); it != parm.end()) {
    options.monitor_thresholds = number_list(*it, "monitor_thresholds");
  }
  if (auto it = parm.find("map_thresholds"); it != parm.end()) {
    options.map_thresholds = number_list(*it, "map_thresholds");
  }
  return options;
}

std::string iou_metric_key(double threshold) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "iou@%.2f", threshold);
  return buf;
}

RewardBreakdown compute_detection_reward(const RewardSpec& spec,
                                         std::string_view response,
                                         double progress,
                                         const DetectionOptions& options) {
  const double epsilon = dynamic_threshold(progress, options.schedule);

  auto gt_parse = parse_detections(spec.ground_truth);
  if (auto* err = std::get_if<ParseError>(&gt_parse)) {
    throw std::invalid_argument("ground truth is not a detection list: " +
                                err->reason);
  }
  const auto& gts = std::get<std::vector<DetBox>>(gt_parse);

  RewardBreakdown out;
  out.format = format_reward(response);
  out.aux_metrics["threshold"] = epsilon;
  out.aux_metrics["num_gt"] = static_cast<double>(gts.size());

  std::optional<std::vector<DetBox>> preds;
  if (auto block = extract_answer_block(response)) {
    auto parsed = parse_detections(*block);
    if (auto* boxes = std::get_if<std::vector<DetBox>>(&parsed)) {
      preds = std::move(*boxes);
    }
  }

  if (!preds) {
    out.accuracy = 0.0;
    out.aux_metrics["parse_error"] = 1.0;
    out.aux_metrics["num_pred"] = 0.0;
    out.aux_metrics["map"] = 0.0;
    for (double t : options.monitor_thresholds) out.aux_metrics[iou_metric_key(t)] = 0.0;
  } else {
    out.accuracy = detection_accuracy_reward(*preds, gts, epsilon);
    out.aux_metrics["parse_error"] = 0.0;
    out.aux_metrics["num_pred"] = static_cast<double>(preds->size());
    out.aux_metrics["map"] = sample_map(*preds, gts, options.map_thresholds);
    const auto ious = matched_ious(*preds, gts);
    for (double t : options.monitor_thresholds) {
      double rate;
      if (gts.empty()) {
        rate = preds->empty() ? 1.0 : 0.0;
      } else {
        const auto passed = std::count_if(ious.begin(), ious.end(),
                                          [t](double v) { return v >= t; });
        rate = static_cast<double>(passed) / static_cast<double>(gts.size());
      }
      out.aux_metrics[iou_metric_key(t)] = rate;
    }
  }
  out.combined = combine_reward(spec.accuracy_ratio, out.accuracy,
                                spec.format_ratio, out.format);
  return out;
}

RewardBreakdown compute_detection_reward(const RewardSpec& spec,
                                         std::string_view response,
                                         double progress) {
  return compute_detection_reward(
      spec, response, progress,
      DetectionOptions::from_verifier_parm(spec.verifier_parm));
}

RewardBreakdown compute_detection_reward(const Sample& sample,
                                         std::string_view response,
                                         double progress) {
  if (sample.reward_model.verifier != "detection") {
    throw std::invalid_argument("sample " + sample.id() +
                                " is not routed to the detection verifier");
  }
  return compute_detection_reward(sample.reward_model, response, progress);
}

}  // namespace rewardkit
