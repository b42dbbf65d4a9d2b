// SPDX-License-Identifier: Apache-2.0

#include "rewardkit/verifier.hpp"

#include <mutex>

#include "rewardkit/detection.hpp"
#include "rewardkit/math_verifier.hpp"

namespace rewardkit {

RewardSpec RewardItem::reward_spec() const {
  RewardSpec spec;
  spec.answer = answer;
  spec.ground_truth = ground_truth;
  spec.accuracy_ratio = accuracy_ratio;
  spec.format_ratio = format_ratio;
  spec.verifier = verifier;
  spec.verifier_parm = verifier_parm.is_null() ? nlohmann::json::object()
                                               : verifier_parm;
  return spec;
}

RewardItem RewardItem::from_sample(const Sample& sample, std::string response,
                                   std::string id) {
  RewardItem item;
  item.id = id.empty() ? sample.id() : std::move(id);
  item.data_source = sample.data_source;
  item.ability = sample.ability;
  item.verifier = sample.reward_model.verifier;
  item.verifier_parm = sample.reward_model.verifier_parm;
  item.response = std::move(response);
  item.answer = sample.reward_model.answer;
  item.ground_truth = sample.reward_model.ground_truth;
  item.accuracy_ratio = sample.reward_model.accuracy_ratio;
  item.format_ratio = sample.reward_model.format_ratio;
  return item;
}

RewardBreakdown MathVerifier::score(const RewardItem& item, double) const {
  return compute_math_reward(item.reward_spec(), item.response);
}

RewardBreakdown DetectionVerifier::score(const RewardItem& item,
                                         double training_progress) const {
  return compute_detection_reward(item.reward_spec(), item.response,
                                  training_progress);
}

std::shared_ptr<VerifierRegistry> VerifierRegistry::with_builtins() {
  auto registry = std::make_shared<VerifierRegistry>();
  registry->register_verifier("math", std::make_shared<MathVerifier>());
  registry->register_verifier("detection", std::make_shared<DetectionVerifier>());
  return registry;
}

void VerifierRegistry::register_verifier(
    const std::string& name, std::shared_ptr<const Verifier> verifier) {
  if (name.empty()) throw std::invalid_argument("verifier name is empty");
  if (!verifier) throw std::invalid_argument("verifier is null");
  std::unique_lock lock(mu_);
  if (!verifiers_.emplace(name, std::move(verifier)).second) {
    throw DuplicateName("verifier '" + name + "' is already registered");
  }
}

std::shared_ptr<const Verifier> VerifierRegistry::find(
    const std::string& name) const {
  std::shared_lock lock(mu_);
  auto it = verifiers_.find(name);
  return it == verifiers_.end() ? nullptr : it->second;
}

std::vector<std::string> VerifierRegistry::names() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  out.reserve(verifiers_.size());
  for (const auto& [name, _] : verifiers_) out.push_back(name);
  return out;
}

}  // namespace rewardkit
