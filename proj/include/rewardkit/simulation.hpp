// SPDX-License-Identifier: Apache-2.0
//
// Closed-loop training simulation: prompt building, mock rollouts, remote
// reward scoring, group advantages, the clipped objective and per-source
// metrics, one batch per step.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rewardkit/grpo.hpp"
#include "rewardkit/iou_schedule.hpp"
#include "rewardkit/metrics.hpp"
#include "rewardkit/mock_policy.hpp"
#include "rewardkit/prompt_pool.hpp"
#include "rewardkit/sample.hpp"

namespace rewardkit {

enum class RewardTransport {
  kHttp,    // in-process server on an ephemeral port, reached via RewardClient
  kDirect,  // RewardService::handle_batch without the network hop
};

struct SimulationConfig {
  std::filesystem::path dataset;  // used when `samples` is empty
  std::vector<Sample> samples;
  std::size_t steps = 50;
  std::size_t group_size = kDefaultGroupSize;
  std::size_t prompts_per_step = 4;
  std::uint64_t seed = 0;
  PolicyConfig policy;
  /// Overrides the detection threshold schedule of every detection item.
  std::optional<ThresholdSchedule> schedule;
  ClipConfig clip;
  std::size_t reuse_factor = 1;  // objective evaluations per rollout batch
  std::size_t max_len = 0;       // truncation limit for metrics, 0 disables
  std::size_t server_workers = 4;
  RewardTransport transport = RewardTransport::kHttp;

  /// Keys: dataset, steps, group_size, prompts_per_step, seed, policy,
  /// schedule ("dynamic" | number | {"bounds", "thresholds"}), clip
  /// {eps_low, eps_high, std_floor}, reuse_factor, max_len, server.workers,
  /// transport ("http" | "direct"). Relative dataset paths resolve against
  /// `base_dir`.
  static SimulationConfig from_json(const nlohmann::json& doc,
                                    const std::filesystem::path& base_dir = {});
  static SimulationConfig load(const std::filesystem::path& path);
};

struct StepRecord {
  std::size_t step = 0;  // 1-based
  double progress = 0.0;
  std::optional<double> detection_threshold;  // when detection items ran
  double reward_mean = 0.0;
  double accuracy_mean = 0.0;
  double format_mean = 0.0;
  std::map<std::string, double> accuracy_by_task;
  double objective = 0.0;
  std::size_t zero_signal_groups = 0;
  std::map<std::string, double> signal_by_task;  // mean of A_i * R_i
  std::map<std::string, double> skill_after;
  std::size_t items = 0;

  nlohmann::json to_json() const;
};

struct Trajectory {
  std::vector<StepRecord> steps;
  std::string metrics_jsonl;  // MetricsMonitor export, one row per (step, source)

  std::string to_jsonl() const;
};

/// Runs `config.steps` steps with training_progress = (step - 1) / steps.
/// Deterministic for a fixed seed. Reward service failures propagate.
Trajectory run_simulation(const SimulationConfig& config);

/// Writes trajectory.jsonl and metrics.jsonl into `out_dir`.
void write_trajectory(const Trajectory& trajectory,
                      const std::filesystem::path& out_dir);

struct ScheduleCurve {
  std::string name;
  Trajectory trajectory;
};

struct ScheduleComparison {
  std::vector<ScheduleCurve> curves;  // fixed-0.5, fixed-0.99, dynamic

  /// step, progress, then one accuracy column per schedule.
  std::string to_csv() const;
  nlohmann::json report() const;
};

/// Paired-seed runs of `base` under fixed 0.5, fixed 0.99 and the
/// curriculum schedule.
ScheduleComparison compare_schedules(const SimulationConfig& base);

}  // namespace rewardkit
