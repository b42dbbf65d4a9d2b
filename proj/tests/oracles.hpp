// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations used by the unit tests and the
// acceptance gate. They favour brute force over speed and deliberately do
// not call into the library code they check.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rewardkit/metrics.hpp"
#include "rewardkit/parsing.hpp"
#include "rewardkit/rng.hpp"

namespace oracle {

using rewardkit::Box;
using rewardkit::DetBox;

// Overlapping occurrences of `needle`, checked at every offset.
inline std::size_t naive_count(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  if (needle.empty() || needle.size() > text.size()) return 0;
  for (std::size_t i = 0; i + needle.size() <= text.size(); ++i) {
    bool same = true;
    for (std::size_t j = 0; j < needle.size(); ++j) {
      if (text[i + j] != needle[j]) {
        same = false;
        break;
      }
    }
    if (same) ++n;
  }
  return n;
}

// Pairs every '{' with its '}' using a stack, then returns the content of
// the `\boxed{` group that starts last and is closed.
inline std::optional<std::string> last_boxed(std::string_view text) {
  std::map<std::size_t, std::size_t> close_of;
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '{') {
      stack.push_back(i);
    } else if (text[i] == '}' && !stack.empty()) {
      close_of[stack.back()] = i;
      stack.pop_back();
    }
  }
  const std::string_view key = "\\boxed{";
  std::optional<std::string> out;
  for (std::size_t i = 0; i + key.size() <= text.size(); ++i) {
    if (text.substr(i, key.size()) != key) continue;
    const std::size_t open = i + key.size() - 1;
    auto it = close_of.find(open);
    if (it == close_of.end()) continue;
    out = std::string(text.substr(open + 1, it->second - open - 1));
  }
  return out;
}

// Area of a ∩ b and a ∪ b by summing the cells of the grid spanned by all
// corner coordinates.
inline double grid_iou(const Box& a, const Box& b) {
  std::vector<double> xs = {a.x1, a.x2, b.x1, b.x2};
  std::vector<double> ys = {a.y1, a.y2, b.y1, b.y2};
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  auto inside = [](const Box& r, double cx, double cy) {
    return cx > r.x1 && cx < r.x2 && cy > r.y1 && cy < r.y2;
  };
  double inter = 0.0, uni = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double w = xs[i + 1] - xs[i];
      const double h = ys[j + 1] - ys[j];
      if (w <= 0 || h <= 0) continue;
      const double cx = 0.5 * (xs[i] + xs[i + 1]);
      const double cy = 0.5 * (ys[j] + ys[j + 1]);
      const bool in_a = inside(a, cx, cy), in_b = inside(b, cx, cy);
      if (in_a && in_b) inter += w * h;
      if (in_a || in_b) uni += w * h;
    }
  }
  return uni > 0 ? inter / uni : 0.0;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct Pair {
  std::size_t gt, pred;
  double iou;
};

// Greedy matching by repeated global arg-max over the remaining pairs.
inline std::vector<Pair> greedy_pairs(const std::vector<DetBox>& preds,
                                      const std::vector<DetBox>& gts) {
  std::vector<bool> gt_used(gts.size()), pred_used(preds.size());
  std::vector<Pair> out;
  while (true) {
    std::optional<Pair> best;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[g]) continue;
      for (std::size_t p = 0; p < preds.size(); ++p) {
        if (pred_used[p] || lower(gts[g].label) != lower(preds[p].label)) continue;
        const double v = grid_iou(gts[g].bbox, preds[p].bbox);
        if (v <= 0) continue;
        if (!best || v > best->iou) best = Pair{g, p, v};
      }
    }
    if (!best) return out;
    gt_used[best->gt] = pred_used[best->pred] = true;
    out.push_back(*best);
  }
}

// Largest total IoU over every one-to-one assignment of label-equal pairs.
inline double best_assignment_total(const std::vector<DetBox>& preds,
                                    const std::vector<DetBox>& gts) {
  std::vector<std::size_t> order(preds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Pad with "no prediction" slots so that every gt may stay unmatched.
  const std::size_t none = preds.size();
  std::vector<std::size_t> slots = order;
  for (std::size_t i = 0; i < gts.size(); ++i) slots.push_back(none);
  std::sort(slots.begin(), slots.end());
  double best = 0.0;
  do {
    double total = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const std::size_t p = slots[g];
      if (p == none || lower(gts[g].label) != lower(preds[p].label)) continue;
      total += grid_iou(gts[g].bbox, preds[p].bbox);
    }
    best = std::max(best, total);
  } while (std::next_permutation(slots.begin(), slots.end()));
  return best;
}

// Precision/recall after each prefix of the ranked predictions, recounted
// from scratch for every prefix, integrated as a step function.
inline double class_ap(const std::vector<Box>& preds, const std::vector<Box>& gts,
                       double threshold) {
  if (preds.empty()) return 0.0;
  std::vector<double> precision, recall;
  for (std::size_t k = 1; k <= preds.size(); ++k) {
    std::vector<bool> used(gts.size());
    std::size_t tp = 0;
    for (std::size_t i = 0; i < k; ++i) {
      std::optional<std::size_t> pick;
      double pick_iou = 0.0;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        const double v = grid_iou(preds[i], gts[g]);
        if (used[g] || v < threshold) continue;
        if (!pick || v > pick_iou) {
          pick = g;
          pick_iou = v;
        }
      }
      if (pick) {
        used[*pick] = true;
        ++tp;
      }
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gts.size()));
  }
  std::set<double> levels(recall.begin(), recall.end());
  levels.insert(0.0);
  double ap = 0.0, prev = 0.0;
  for (double r : levels) {
    if (r == 0.0) continue;
    double p_interp = 0.0;
    for (std::size_t k = 0; k < recall.size(); ++k) {
      if (recall[k] >= r) p_interp = std::max(p_interp, precision[k]);
    }
    ap += (r - prev) * p_interp;
    prev = r;
  }
  return ap;
}

inline double sample_map(const std::vector<DetBox>& preds,
                         const std::vector<DetBox>& gts,
                         const std::vector<double>& thresholds) {
  if (gts.empty()) return preds.empty() ? 1.0 : 0.0;
  std::set<std::string> classes;
  for (const auto& g : gts) classes.insert(lower(g.label));
  double total = 0.0;
  for (double t : thresholds) {
    double sum = 0.0;
    for (const auto& c : classes) {
      std::vector<Box> p, g;
      for (const auto& b : preds) {
        if (lower(b.label) == c) p.push_back(b.bbox);
      }
      for (const auto& b : gts) {
        if (lower(b.label) == c) g.push_back(b.bbox);
      }
      sum += class_ap(p, g, t);
    }
    total += sum / static_cast<double>(classes.size());
  }
  return total / static_cast<double>(thresholds.size());
}

// Offline recomputation of SourceMetrics from a raw event log.
inline std::map<std::string, rewardkit::SourceMetrics> replay(
    const std::vector<rewardkit::MetricsEvent>& log) {
  std::map<std::string, std::vector<const rewardkit::MetricsEvent*>> by_source;
  for (const auto& e : log) by_source[e.data_source].push_back(&e);
  std::map<std::string, rewardkit::SourceMetrics> out;
  for (const auto& [source, events] : by_source) {
    rewardkit::SourceMetrics m;
    const double n = static_cast<double>(events.size());
    m.count = events.size();
    double len_c = 0, len_i = 0, map_sum = 0;
    std::map<std::string, double> iou_sum;
    for (const auto* e : events) {
      m.reward_mean += e->reward / n;
      m.accuracy_mean += e->accuracy / n;
      m.format_mean += e->format / n;
      m.length_mean += static_cast<double>(e->length) / n;
      if (e->correct) {
        ++m.correct_count;
        len_c += static_cast<double>(e->length);
      } else {
        len_i += static_cast<double>(e->length);
      }
      if (e->truncated) ++m.truncated_count;
      if (e->reflection) {
        ++m.reflection_count;
        if (e->correct) ++m.reflection_correct_count;
      }
      if (!e->iou_pass.empty()) {
        ++m.iou_count;
        for (const auto& [k, v] : e->iou_pass) iou_sum[k] += v;
      }
      if (e->map) {
        ++m.map_count;
        map_sum += *e->map;
      }
    }
    const std::uint64_t incorrect = m.count - m.correct_count;
    if (m.correct_count) m.length_correct_mean = len_c / static_cast<double>(m.correct_count);
    if (incorrect) m.length_incorrect_mean = len_i / static_cast<double>(incorrect);
    m.truncation_rate = static_cast<double>(m.truncated_count) / n;
    m.reflection_ratio = static_cast<double>(m.reflection_count) / n;
    if (m.reflection_count) {
      m.reflection_correct_ratio = static_cast<double>(m.reflection_correct_count) /
                                   static_cast<double>(m.reflection_count);
    }
    for (const auto& [k, v] : iou_sum) {
      m.iou_pass_rate[k] = v / static_cast<double>(m.iou_count);
    }
    if (m.map_count) m.map_mean = map_sum / static_cast<double>(m.map_count);
    out[source] = m;
  }
  return out;
}

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline bool close(const std::optional<double>& a, const std::optional<double>& b,
                  double tol) {
  if (a.has_value() != b.has_value()) return false;
  return !a || close(*a, *b, tol);
}

// Empty string when equal, otherwise the first differing field.
inline std::string compare(const rewardkit::SourceMetrics& got,
                           const rewardkit::SourceMetrics& want, double tol) {
  if (got.count != want.count) return "count";
  if (got.correct_count != want.correct_count) return "correct_count";
  if (got.truncated_count != want.truncated_count) return "truncated_count";
  if (got.reflection_count != want.reflection_count) return "reflection_count";
  if (got.reflection_correct_count != want.reflection_correct_count) {
    return "reflection_correct_count";
  }
  if (got.iou_count != want.iou_count) return "iou_count";
  if (got.map_count != want.map_count) return "map_count";
  if (got.truncation_rate != want.truncation_rate) return "truncation_rate";
  if (got.reflection_ratio != want.reflection_ratio) return "reflection_ratio";
  if (got.reflection_correct_ratio != want.reflection_correct_ratio) {
    return "reflection_correct_ratio";
  }
  if (!close(got.reward_mean, want.reward_mean, tol)) return "reward_mean";
  if (!close(got.accuracy_mean, want.accuracy_mean, tol)) return "accuracy_mean";
  if (!close(got.format_mean, want.format_mean, tol)) return "format_mean";
  if (!close(got.length_mean, want.length_mean, tol)) return "length_mean";
  if (!close(got.length_correct_mean, want.length_correct_mean, tol)) {
    return "length_correct_mean";
  }
  if (!close(got.length_incorrect_mean, want.length_incorrect_mean, tol)) {
    return "length_incorrect_mean";
  }
  if (!close(got.map_mean, want.map_mean, tol)) return "map_mean";
  if (got.iou_pass_rate.size() != want.iou_pass_rate.size()) return "iou_pass_rate";
  for (const auto& [k, v] : want.iou_pass_rate) {
    auto it = got.iou_pass_rate.find(k);
    if (it == got.iou_pass_rate.end() || !close(it->second, v, tol)) {
      return "iou_pass_rate " + k;
    }
  }
  return {};
}

// Random scene generators shared by tests and the acceptance gate.
inline Box random_box(rewardkit::Rng& rng, double extent = 10.0) {
  const double x1 = rewardkit::uniform(rng, 0.0, extent);
  const double y1 = rewardkit::uniform(rng, 0.0, extent);
  const double x2 = x1 + rewardkit::uniform(rng, 0.1, extent / 2);
  const double y2 = y1 + rewardkit::uniform(rng, 0.1, extent / 2);
  return Box{x1, y1, x2, y2};
}

inline std::vector<DetBox> random_scene(rewardkit::Rng& rng, std::size_t max_boxes,
                                        std::size_t labels) {
  static const char* kNames[] = {"cat", "dog", "car", "bus", "cup"};
  std::vector<DetBox> out(rewardkit::uniform_index(rng, max_boxes + 1));
  for (auto& b : out) {
    b.label = kNames[rewardkit::uniform_index(rng, labels)];
    b.bbox = random_box(rng);
  }
  return out;
}

// Predictions that perturb ground-truth boxes, drop some and add strays, so
// that IoUs spread over the whole threshold range.
inline std::vector<DetBox> perturbed(rewardkit::Rng& rng,
                                     const std::vector<DetBox>& gts,
                                     std::size_t labels) {
  static const char* kNames[] = {"cat", "dog", "car", "bus", "cup"};
  std::vector<DetBox> out;
  for (const auto& g : gts) {
    if (rewardkit::bernoulli(rng, 0.2)) continue;
    DetBox p = g;
    const double s = rewardkit::uniform(rng, 0.0, 0.6);
    p.bbox = rewardkit::normalize_corners(
        g.bbox.x1 + s * rewardkit::uniform(rng, -1, 1), g.bbox.y1 + s * rewardkit::uniform(rng, -1, 1),
        g.bbox.x2 + s * rewardkit::uniform(rng, -1, 1), g.bbox.y2 + s * rewardkit::uniform(rng, -1, 1));
    out.push_back(p);
  }
  const std::size_t extra = rewardkit::uniform_index(rng, 3);
  for (std::size_t i = 0; i < extra && out.size() < 5; ++i) {
    DetBox p;
    p.label = kNames[rewardkit::uniform_index(rng, labels)];
    p.bbox = random_box(rng);
    out.push_back(p);
  }
  rewardkit::shuffle(out, rng);
  return out;
}

}  // namespace oracle
