// SPDX-License-Identifier: Apache-2.0
//
// Per-data-source training monitors: reward means, IoU pass rates, mAP,
// response lengths split by correctness, truncation and reflection rates.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rewardkit/reward.hpp"
#include "rewardkit/sample.hpp"

namespace rewardkit {

enum class LengthUnit { kCharacters, kWhitespaceTokens };

std::string_view to_string(LengthUnit unit);
std::size_t measure_length(std::string_view response, LengthUnit unit);

struct ReflectionConfig {
  std::vector<std::string> words = default_words();
  /// A response counts as correct when its accuracy exceeds this.
  double correctness_threshold = 0.0;

  /// Fifteen lowercase phrases. Not a canonical list; override as needed.
  static std::vector<std::string> default_words();
  bool matches(std::string_view response) const;
};

struct SourceMetrics {
  std::uint64_t count = 0;
  double reward_mean = 0.0;
  double accuracy_mean = 0.0;
  double format_mean = 0.0;
  std::uint64_t iou_count = 0;  // events that carried IoU pass rates
  std::map<std::string, double> iou_pass_rate;  // empty when iou_count == 0
  std::uint64_t map_count = 0;
  std::optional<double> map_mean;
  double length_mean = 0.0;
  std::uint64_t correct_count = 0;
  std::optional<double> length_correct_mean;
  std::optional<double> length_incorrect_mean;
  std::uint64_t truncated_count = 0;
  double truncation_rate = 0.0;
  std::uint64_t reflection_count = 0;
  std::uint64_t reflection_correct_count = 0;
  double reflection_ratio = 0.0;
  std::optional<double> reflection_correct_ratio;  // undefined without reflections

  nlohmann::json to_json() const;
};

/// One scored response, as seen by the monitor.
struct MetricsEvent {
  std::int64_t step = 0;
  std::string data_source;
  double reward = 0.0;
  double accuracy = 0.0;
  double format = 0.0;
  std::size_t length = 0;
  bool truncated = false;
  bool correct = false;
  bool reflection = false;
  std::map<std::string, double> iou_pass;  // only detection-style results
  std::optional<double> map;
};

class LengthMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MetricsMonitor {
 public:
  struct Options {
    ReflectionConfig reflection;
    LengthUnit length_unit = LengthUnit::kCharacters;
    std::vector<double> iou_thresholds = {0.50, 0.75, 0.95, 0.99};
    std::size_t shards = 8;
  };

  MetricsMonitor();
  explicit MetricsMonitor(Options options);
  ~MetricsMonitor();

  /// Safe to call from many threads. A response is truncated when its
  /// length reaches `max_len` (0 disables the check). Throws LengthMismatch
  /// unless the three lists have equal length.
  void record_batch(std::span<const Sample> samples,
                    std::span<const std::string> responses,
                    std::span<const RewardBreakdown> breakdowns,
                    std::size_t max_len, std::int64_t step = 0);
  void record_batch(std::span<const std::string> data_sources,
                    std::span<const std::string> responses,
                    std::span<const RewardBreakdown> breakdowns,
                    std::size_t max_len, std::int64_t step = 0);

  /// Builds the event the monitor would record for one response.
  MetricsEvent make_event(std::string data_source, std::string_view response,
                          const RewardBreakdown& breakdown, std::size_t max_len,
                          std::int64_t step) const;

  /// Running totals per data source over every completed record_batch.
  std::map<std::string, SourceMetrics> snapshot() const;
  /// Same, keyed by (step, data source).
  std::map<std::pair<std::int64_t, std::string>, SourceMetrics> per_step() const;

  /// One line per (step, data_source), sorted, with sorted keys. Every row
  /// carries the length unit.
  void export_jsonl(const std::filesystem::path& path) const;
  std::string export_jsonl_string() const;

  const Options& options() const { return options_; }

 private:
  struct Accumulator;
  struct Shard;

  Shard& shard_for_this_thread();
  std::vector<std::string> iou_keys() const;

  Options options_;
  std::vector<std::unique_ptr<Shard>> shards_;
};

}  // namespace rewardkit
