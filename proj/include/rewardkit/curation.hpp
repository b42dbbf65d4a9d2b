// SPDX-License-Identifier: Apache-2.0
//
// Two-stage data curation: per-sample rule filters for each task family,
// then a difficulty filter driven by precomputed pass-rate scores, then the
// global balancing passes.
//
// Rule ids, checked in this order within a family:
//   reasoning           mcq_filter, symbol_filter, length_filter
//   detection           bad_annotation, box_count, box_area
//   grounding           bad_annotation, box_area, complex_label
//   counting, ocr       non_english, unverifiable_label
// Difficulty ids: too_easy (pass@8 == 1), out_of_band (cumulative IoU
// reward outside [2, 10]).
// Balancing ids: single_multi_ratio, category_balance.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rewardkit/sample.hpp"

namespace rewardkit {

enum class TaskFamily { kReasoning, kDetection, kGrounding, kCounting, kOcr, kOther };

std::string_view to_string(TaskFamily family);
/// math/puzzle/science/chart map to reasoning; the perception tags map to
/// themselves; anything else is kOther.
TaskFamily family_from_ability(std::string_view ability);
std::optional<TaskFamily> parse_family(std::string_view name);

struct FilterDecision {
  bool keep = true;
  std::string rule_id;  // set when dropped

  static FilterDecision Keep() { return {}; }
  static FilterDecision Drop(std::string rule) { return {false, std::move(rule)}; }
};

struct CurationConfig {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path scores_path;  // empty: no difficulty stage
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;      // empty: nothing written
  std::filesystem::path report_path;  // empty: nothing written

  std::map<std::string, TaskFamily> family_by_source;  // overrides ability
  std::map<std::string, int> repeat_by_source;         // duplication factor
  std::size_t max_answer_chars = 20;
  std::size_t max_boxes_per_category = 10;
  double max_box_area = 0.5;
  std::size_t max_label_words = 6;
  double min_ascii_ratio = 0.9;
  std::size_t single_parts = 1;  // single-box : multi-box target
  std::size_t multi_parts = 2;

  /// Reads the optional keys of a curation config document
  /// (`families`, `repeat`, thresholds); paths come from the CLI.
  static CurationConfig from_json(const nlohmann::json& doc);
};

FilterDecision rule_filter_reasoning(const Sample& sample,
                                     std::size_t max_answer_chars = 20);

/// Rewrites absolute box coordinates into image-relative ones using
/// `image_width`/`image_height` from verifier_parm. Returns false when the
/// ground truth does not parse or absolute boxes lack an image size.
bool to_relative_coordinates(Sample& sample);

/// Expects relative coordinates (see to_relative_coordinates).
FilterDecision rule_filter_detection(const Sample& sample,
                                     std::size_t max_boxes_per_category = 10,
                                     double max_box_area = 0.5);
FilterDecision rule_filter_grounding(const Sample& sample,
                                     double max_box_area = 0.5,
                                     std::size_t max_label_words = 6);
FilterDecision rule_filter_text_perception(const Sample& sample,
                                           double min_ascii_ratio = 0.9);

/// Dispatches to the filter of `family` after coordinate conversion; the
/// sample is updated in place.
FilterDecision apply_rule_filters(Sample& sample, TaskFamily family,
                                  const CurationConfig& config);

struct DifficultyScore {
  std::optional<double> pass_at_8;              // in [0, 1]
  std::optional<double> cumulative_iou_reward;  // >= 0
};
using DifficultyScores = std::map<std::string, DifficultyScore>;

/// JSONL, one `{"id": ..., "pass_at_8": x}` or
/// `{"id": ..., "cumulative_iou_reward": x}` object per line.
DifficultyScores load_scores(const std::filesystem::path& path);

class MissingScore : public std::runtime_error {
 public:
  explicit MissingScore(std::string id);
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

/// Reasoning keeps 0 <= pass@8 < 1; detection and grounding keep
/// 2 <= cumulative IoU reward <= 10. Counting, OCR and other families are
/// filtered on pass@8 only when a score exists.
FilterDecision difficulty_filter(const Sample& sample,
                                 const DifficultyScores& scores,
                                 TaskFamily family);

/// Number of ground-truth boxes, or nullopt if the ground truth is not a
/// detection list.
std::optional<std::size_t> box_count(const Sample& sample);

struct RatioOutcome {
  std::vector<Sample> kept;
  std::size_t dropped_single = 0;
  std::size_t dropped_multi = 0;
  std::vector<std::string> warnings;
};

/// Downsamples whichever of the single-box / multi-box groups is
/// over-represented so that |single| : |multi| = single_parts : multi_parts
/// (floor rounding). Never upsamples; samples with no box count pass
/// through. `is_candidate` marks which samples take part (all by default).
RatioOutcome enforce_single_multi_ratio(
    const std::vector<Sample>& samples, std::uint64_t seed,
    std::size_t single_parts = 1, std::size_t multi_parts = 2,
    const std::vector<bool>* is_candidate = nullptr);

struct SourceCuration {
  std::size_t input = 0;
  std::map<std::string, std::size_t> dropped_by_rule;
  std::size_t dropped_by_difficulty = 0;
  std::map<std::string, std::size_t> difficulty_by_rule;
  std::map<std::string, std::size_t> dropped_by_balance;
  std::size_t kept = 0;
  std::size_t emitted = 0;  // kept plus duplicates
};

struct DropRecord {
  std::string id;
  std::string data_source;
  std::string stage;  // "rule" | "difficulty" | "balance"
  std::string rule_id;
};

struct CurationReport {
  std::map<std::string, SourceCuration> sources;
  std::vector<DropRecord> drops;
  std::vector<std::string> warnings;

  /// input == kept + every dropped count, per source.
  bool reconciles() const;
  nlohmann::json to_json() const;
};

struct CurationResult {
  std::vector<Sample> curated;
  CurationReport report;
};

/// Deterministic for a given seed. Writes `<out_dir>/curated.jsonl` and the
/// report when the respective paths are set.
CurationResult run_pipeline(const CurationConfig& config);

/// Same pipeline over in-memory samples and scores; writes nothing.
CurationResult curate(std::vector<Sample> samples, const DifficultyScores* scores,
                      const CurationConfig& config);

}  // namespace rewardkit
