// SPDX-License-Identifier: Apache-2.0
//
// Scripted stand-in for a trained policy. Response quality is driven by a
// per-task skill in [0, 1]; "learning" is a fixed skill increment.

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "json.hpp"
#include "rewardkit/rng.hpp"
#include "rewardkit/sample.hpp"

namespace rewardkit {

struct PolicyConfig {
  std::map<std::string, double> skill;  // keyed by verifier name
  double default_skill = 0.5;
  double box_jitter = 0.1;         // max corner shift, as a fraction of box size, at skill 0
  double wrong_answer_prob = 0.0;  // extra chance of a wrong math answer
  double format_error_prob = 0.05; // at skill 0
  double reflection_prob = 0.1;
  double learning_rate_sim = 0.02;
  bool frozen = false;  // disables skill updates

  /// Reads the optional `policy` section of a simulation config.
  static PolicyConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

class MockPolicy {
 public:
  explicit MockPolicy(PolicyConfig config);

  /// One rollout for `sample`. Every call consumes the same number of
  /// draws from `rng` regardless of outcome, so paired runs stay aligned.
  std::string respond(const Sample& sample, Rng& rng) const;

  double skill(const std::string& task) const;
  /// Adds learning_rate_sim to the task's skill when `signal` is positive
  /// (capped at 1). No-op for a frozen policy. Returns the new skill.
  double update(const std::string& task, double signal);

  const PolicyConfig& config() const { return config_; }

 private:
  std::string math_response(const Sample& sample, Rng& rng, double skill) const;
  std::string detection_response(const Sample& sample, Rng& rng,
                                 double skill) const;

  PolicyConfig config_;
};

}  // namespace rewardkit
