// SPDX-License-Identifier: Apache-2.0
//
// Pluggable verifiers and the name-keyed registry the server routes through.

#pragma once

#include <map>
#include <memory>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rewardkit/reward.hpp"
#include "rewardkit/sample.hpp"

namespace rewardkit {

/// One scoring unit of a batch: the response plus the reward fields of the
/// sample it answers.
struct RewardItem {
  std::string id;
  std::string data_source;
  std::string ability;
  std::string verifier;
  nlohmann::json verifier_parm = nlohmann::json::object();
  std::string response;
  std::string answer;
  std::string ground_truth;
  double accuracy_ratio = 1.0;
  double format_ratio = 0.0;

  RewardSpec reward_spec() const;
  static RewardItem from_sample(const Sample& sample, std::string response,
                                std::string id = {});
};

/// Verifiers must be reentrant: the server calls `score` concurrently.
class Verifier {
 public:
  virtual ~Verifier() = default;
  virtual RewardBreakdown score(const RewardItem& item,
                                double training_progress) const = 0;
};

class MathVerifier final : public Verifier {
 public:
  RewardBreakdown score(const RewardItem& item,
                        double training_progress) const override;
};

class DetectionVerifier final : public Verifier {
 public:
  RewardBreakdown score(const RewardItem& item,
                        double training_progress) const override;
};

class DuplicateName : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class VerifierRegistry {
 public:
  /// Registry with "math" and "detection" already registered.
  static std::shared_ptr<VerifierRegistry> with_builtins();

  /// Throws DuplicateName if `name` is taken.
  void register_verifier(const std::string& name,
                         std::shared_ptr<const Verifier> verifier);

  /// nullptr when no verifier has that name.
  std::shared_ptr<const Verifier> find(const std::string& name) const;

  /// Registered names in sorted order.
  std::vector<std::string> names() const;

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<const Verifier>> verifiers_;
};

}  // namespace rewardkit
