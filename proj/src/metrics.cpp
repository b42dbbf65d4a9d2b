// SPDX-License-Identifier: Apache-2.0

#include "rewardkit/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "rewardkit/detection.hpp"

namespace rewardkit {

std::string_view to_string(LengthUnit unit) {
  switch (unit) {
    case LengthUnit::kCharacters: return "chars";
    case LengthUnit::kWhitespaceTokens: return "whitespace_tokens";
  }
  return "chars";
}

std::size_t measure_length(std::string_view response, LengthUnit unit) {
  std::size_t n = 0;
  if (unit == LengthUnit::kCharacters) {
    // UTF-8 code points: count every byte that is not a continuation byte.
    for (unsigned char c : response) {
      if ((c & 0xC0) != 0x80) ++n;
    }
    return n;
  }
  bool in_token = false;
  for (unsigned char c : response) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_token) ++n;
    in_token = !space;
  }
  return n;
}

std::vector<std::string> ReflectionConfig::default_words() {
  return {"re-check",       "re-think",        "verify",
          "wait",           "let me check",    "double-check",
          "on second thought", "re-examine",   "re-evaluate",
          "reconsider",     "to confirm",      "sanity check",
          "let me verify",  "correct myself",  "mistake"};
}

bool ReflectionConfig::matches(std::string_view response) const {
  std::string lowered(response);
  for (auto& c : lowered) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return std::any_of(words.begin(), words.end(), [&](const std::string& w) {
    return !w.empty() && lowered.find(w) != std::string::npos;
  });
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json SourceMetrics::to_json() const {
  return {{"count", count},
          {"reward_mean", reward_mean},
          {"accuracy_mean", accuracy_mean},
          {"format_mean", format_mean},
          {"iou_count", iou_count},
          {"iou_pass_rate", iou_pass_rate},
          {"map_count", map_count},
          {"map_mean", optional_json(map_mean)},
          {"length_mean", length_mean},
          {"correct_count", correct_count},
          {"length_correct_mean", optional_json(length_correct_mean)},
          {"length_incorrect_mean", optional_json(length_incorrect_mean)},
          {"truncated_count", truncated_count},
          {"truncation_rate", truncation_rate},
          {"reflection_count", reflection_count},
          {"reflection_correct_count", reflection_correct_count},
          {"reflection_ratio", reflection_ratio},
          {"reflection_correct_ratio", optional_json(reflection_correct_ratio)}};
}

struct MetricsMonitor::Accumulator {
  std::uint64_t count = 0;
  double reward_sum = 0, accuracy_sum = 0, format_sum = 0, length_sum = 0;
  std::uint64_t correct = 0;
  double correct_length_sum = 0, incorrect_length_sum = 0;
  std::uint64_t truncated = 0, reflection = 0, reflection_correct = 0;
  std::uint64_t iou_count = 0;
  std::map<std::string, double> iou_sum;
  std::uint64_t map_count = 0;
  double map_sum = 0;

  void add(const MetricsEvent& e) {
    ++count;
    reward_sum += e.reward;
    accuracy_sum += e.accuracy;
    format_sum += e.format;
    const double len = static_cast<double>(e.length);
    length_sum += len;
    if (e.correct) {
      ++correct;
      correct_length_sum += len;
    } else {
      incorrect_length_sum += len;
    }
    if (e.truncated) ++truncated;
    if (e.reflection) {
      ++reflection;
      if (e.correct) ++reflection_correct;
    }
    if (!e.iou_pass.empty()) {
      ++iou_count;
      for (const auto& [k, v] : e.iou_pass) iou_sum[k] += v;
    }
    if (e.map) {
      ++map_count;
      map_sum += *e.map;
    }
  }

  void merge(const Accumulator& o) {
    count += o.count;
    reward_sum += o.reward_sum;
    accuracy_sum += o.accuracy_sum;
    format_sum += o.format_sum;
    length_sum += o.length_sum;
    correct += o.correct;
    correct_length_sum += o.correct_length_sum;
    incorrect_length_sum += o.incorrect_length_sum;
    truncated += o.truncated;
    reflection += o.reflection;
    reflection_correct += o.reflection_correct;
    iou_count += o.iou_count;
    for (const auto& [k, v] : o.iou_sum) iou_sum[k] += v;
    map_count += o.map_count;
    map_sum += o.map_sum;
  }

  SourceMetrics finish() const {
    SourceMetrics m;
    m.count = count;
    if (count == 0) return m;
    const double n = static_cast<double>(count);
    m.reward_mean = reward_sum / n;
    m.accuracy_mean = accuracy_sum / n;
    m.format_mean = format_sum / n;
    m.length_mean = length_sum / n;
    m.correct_count = correct;
    if (correct > 0) {
      m.length_correct_mean = correct_length_sum / static_cast<double>(correct);
    }
    if (count > correct) {
      m.length_incorrect_mean =
          incorrect_length_sum / static_cast<double>(count - correct);
    }
    m.truncated_count = truncated;
    m.truncation_rate = static_cast<double>(truncated) / n;
    m.reflection_count = reflection;
    m.reflection_correct_count = reflection_correct;
    m.reflection_ratio = static_cast<double>(reflection) / n;
    if (reflection > 0) {
      m.reflection_correct_ratio =
          static_cast<double>(reflection_correct) / static_cast<double>(reflection);
    }
    m.iou_count = iou_count;
    if (iou_count > 0) {
      for (const auto& [k, v] : iou_sum) {
        m.iou_pass_rate[k] = v / static_cast<double>(iou_count);
      }
    }
    m.map_count = map_count;
    if (map_count > 0) m.map_mean = map_sum / static_cast<double>(map_count);
    return m;
  }
};

struct MetricsMonitor::Shard {
  std::mutex mu;
  std::map<std::pair<std::int64_t, std::string>, Accumulator> cells;
};

MetricsMonitor::MetricsMonitor() : MetricsMonitor(Options{}) {}

MetricsMonitor::MetricsMonitor(Options options) : options_(std::move(options)) {
  const std::size_t n = std::max<std::size_t>(options_.shards, 1);
  for (std::size_t i = 0; i < n; ++i) shards_.push_back(std::make_unique<Shard>());
}

MetricsMonitor::~MetricsMonitor() = default;

MetricsMonitor::Shard& MetricsMonitor::shard_for_this_thread() {
  const std::size_t h = std::hash<std::thread::id>{}(std::this_thread::get_id());
  return *shards_[h % shards_.size()];
}

std::vector<std::string> MetricsMonitor::iou_keys() const {
  std::vector<std::string> keys;
  for (double t : options_.iou_thresholds) keys.push_back(iou_metric_key(t));
  return keys;
}

MetricsEvent MetricsMonitor::make_event(std::string data_source,
                                        std::string_view response,
                                        const RewardBreakdown& breakdown,
                                        std::size_t max_len,
                                        std::int64_t step) const {
  MetricsEvent e;
  e.step = step;
  e.data_source = std::move(data_source);
  e.reward = breakdown.combined;
  e.accuracy = breakdown.accuracy;
  e.format = breakdown.format;
  e.length = measure_length(response, options_.length_unit);
  e.truncated = max_len > 0 && e.length >= max_len;
  e.correct = breakdown.accuracy > options_.reflection.correctness_threshold;
  e.reflection = options_.reflection.matches(response);
  for (const auto& key : iou_keys()) {
    if (auto it = breakdown.aux_metrics.find(key); it != breakdown.aux_metrics.end()) {
      e.iou_pass[key] = it->second;
    }
  }
  if (auto it = breakdown.aux_metrics.find("map"); it != breakdown.aux_metrics.end()) {
    e.map = it->second;
  }
  return e;
}

void MetricsMonitor::record_batch(std::span<const std::string> data_sources,
                                  std::span<const std::string> responses,
                                  std::span<const RewardBreakdown> breakdowns,
                                  std::size_t max_len, std::int64_t step) {
  if (data_sources.size() != responses.size() ||
      responses.size() != breakdowns.size()) {
    throw LengthMismatch("record_batch: " + std::to_string(data_sources.size()) +
                         " samples, " + std::to_string(responses.size()) +
                         " responses, " + std::to_string(breakdowns.size()) +
                         " breakdowns");
  }
  if (data_sources.empty()) return;

  std::vector<MetricsEvent> events;
  events.reserve(data_sources.size());
  for (std::size_t i = 0; i < data_sources.size(); ++i) {
    events.push_back(
        make_event(data_sources[i], responses[i], breakdowns[i], max_len, step));
  }
  Shard& shard = shard_for_this_thread();
  std::lock_guard lock(shard.mu);
  for (const auto& e : events) shard.cells[{e.step, e.data_source}].add(e);
}

void MetricsMonitor::record_batch(std::span<const Sample> samples,
                                  std::span<const std::string> responses,
                                  std::span<const RewardBreakdown> breakdowns,
                                  std::size_t max_len, std::int64_t step) {
  std::vector<std::string> sources;
  sources.reserve(samples.size());
  for (const auto& s : samples) sources.push_back(s.data_source);
  record_batch(std::span<const std::string>(sources), responses, breakdowns,
               max_len, step);
}

std::map<std::pair<std::int64_t, std::string>, SourceMetrics>
MetricsMonitor::per_step() const {
  std::vector<std::unique_lock<std::mutex>> locks;
  for (const auto& s : shards_) locks.emplace_back(s->mu);
  std::map<std::pair<std::int64_t, std::string>, Accumulator> merged;
  for (const auto& s : shards_) {
    for (const auto& [key, acc] : s->cells) merged[key].merge(acc);
  }
  locks.clear();
  std::map<std::pair<std::int64_t, std::string>, SourceMetrics> out;
  for (const auto& [key, acc] : merged) out[key] = acc.finish();
  return out;
}

std::map<std::string, SourceMetrics> MetricsMonitor::snapshot() const {
  std::vector<std::unique_lock<std::mutex>> locks;
  for (const auto& s : shards_) locks.emplace_back(s->mu);
  std::map<std::string, Accumulator> merged;
  for (const auto& s : shards_) {
    for (const auto& [key, acc] : s->cells) merged[key.second].merge(acc);
  }
  locks.clear();
  std::map<std::string, SourceMetrics> out;
  for (const auto& [source, acc] : merged) out[source] = acc.finish();
  return out;
}

std::string MetricsMonitor::export_jsonl_string() const {
  std::ostringstream out;
  const auto keys = iou_keys();
  for (const auto& [key, m] : per_step()) {
    nlohmann::json row = m.to_json();
    // Every configured threshold appears, null when the source had no
    // IoU-bearing results.
    nlohmann::json rates = nlohmann::json::object();
    for (const auto& k : keys) {
      auto it = m.iou_pass_rate.find(k);
      rates[k] = it == m.iou_pass_rate.end() ? nlohmann::json(nullptr)
                                             : nlohmann::json(it->second);
    }
    row["iou_pass_rate"] = std::move(rates);
    row["step"] = key.first;
    row["data_source"] = key.second;
    row["length_unit"] = to_string(options_.length_unit);
    out << row.dump() << '\n';
  }
  return out.str();
}

void MetricsMonitor::export_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << export_jsonl_string();
  if (!out) throw IoFailure("write error on " + path.string());
}

}  // namespace rewardkit
