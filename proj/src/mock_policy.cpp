// SPDX-License-Identifier: Apache-2.0

#include "rewardkit/mock_policy.hpp"

#include <algorithm>
#include <stdexcept>

#include "rewardkit/detection.hpp"
#include "rewardkit/parsing.hpp"

namespace rewardkit {

namespace {

const char* const kFiller[] = {"first", "consider", "the", "given", "values",
                               "then", "combine", "them", "and", "simplify",
                               "carefully", "so", "we", "get", "next"};
const char* const kReflections[] = {"Wait, let me re-check that step.",
                                    "Let me verify the result again.",
                                    "Hmm, let me re-think this part."};

std::string filler(double u) {
  const std::size_t words = 5 + static_cast<std::size_t>(u * 40.0);
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i > 0) out += ' ';
    out += kFiller[i % std::size(kFiller)];
  }
  return out;
}

double check_unit(const nlohmann::json& doc, const char* key, double fallback) {
  const double v = doc.value(key, fallback);
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string("policy.") + key + " must lie in [0, 1]");
  }
  return v;
}

}  // namespace

PolicyConfig PolicyConfig::from_json(const nlohmann::json& doc) {
  PolicyConfig c;
  if (!doc.is_object()) return c;
  if (auto it = doc.find("skill"); it != doc.end()) {
    if (it->is_number()) {
      c.default_skill = it->get<double>();
    } else {
      for (const auto& [task, v] : it->items()) c.skill[task] = v.get<double>();
    }
  }
  c.default_skill = check_unit(doc, "default_skill", c.default_skill);
  for (auto& [task, v] : c.skill) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("skill for '" + task + "' must lie in [0, 1]");
    }
  }
  c.box_jitter = doc.value("box_jitter", c.box_jitter);
  if (!(c.box_jitter >= 0.0)) throw std::invalid_argument("policy.box_jitter must be >= 0");
  c.wrong_answer_prob = check_unit(doc, "wrong_answer_prob", c.wrong_answer_prob);
  c.format_error_prob = check_unit(doc, "format_error_prob", c.format_error_prob);
  c.reflection_prob = check_unit(doc, "reflection_prob", c.reflection_prob);
  c.learning_rate_sim = doc.value("learning_rate_sim", c.learning_rate_sim);
  c.frozen = doc.value("frozen", c.frozen);
  return c;
}

nlohmann::json PolicyConfig::to_json() const {
  return {{"skill", skill},
          {"default_skill", default_skill},
          {"box_jitter", box_jitter},
          {"wrong_answer_prob", wrong_answer_prob},
          {"format_error_prob", format_error_prob},
          {"reflection_prob", reflection_prob},
          {"learning_rate_sim", learning_rate_sim},
          {"frozen", frozen}};
}

MockPolicy::MockPolicy(PolicyConfig config) : config_(std::move(config)) {}

double MockPolicy::skill(const std::string& task) const {
  auto it = config_.skill.find(task);
  return it == config_.skill.end() ? config_.default_skill : it->second;
}

double MockPolicy::update(const std::string& task, double signal) {
  const double current = skill(task);
  if (config_.frozen || !(signal > 0.0)) return current;
  return config_.skill[task] = std::min(1.0, current + config_.learning_rate_sim);
}

std::string MockPolicy::respond(const Sample& sample, Rng& rng) const {
  const std::string& task = sample.reward_model.verifier;
  if (task == "detection") return detection_response(sample, rng, skill(task));
  return math_response(sample, rng, skill(task));
}

namespace {

std::string wrap(const std::string& reasoning, const std::string& answer,
                 bool broken_format) {
  if (broken_format) {
    return "<think>" + reasoning + "\n<answer>" + answer + "</answer><answer>";
  }
  return "<think>" + reasoning + "</think>\n<answer>" + answer + "</answer>";
}

}  // namespace

std::string MockPolicy::math_response(const Sample& sample, Rng& rng,
                                      double skill) const {
  const double u_correct = uniform01(rng);
  const double u_format = uniform01(rng);
  const double u_reflect = uniform01(rng);
  const double u_len = uniform01(rng);

  const std::string& gold = sample.reward_model.ground_truth;
  const bool correct = u_correct < skill * (1.0 - config_.wrong_answer_prob);
  const std::string answer = correct ? gold : gold + "1";

  std::string reasoning = filler(u_len);
  if (u_reflect < config_.reflection_prob) {
    reasoning += ' ';
    reasoning += kReflections[static_cast<std::size_t>(u_reflect * 1e6) %
                              std::size(kReflections)];
  }
  const bool broken = u_format < config_.format_error_prob * (1.0 - skill);
  return wrap(reasoning, "\\boxed{" + answer + "}", broken);
}

std::string MockPolicy::detection_response(const Sample& sample, Rng& rng,
                                           double skill) const {
  const double u_format = uniform01(rng);
  const double u_reflect = uniform01(rng);
  const double u_len = uniform01(rng);

  std::vector<DetBox> gts;
  auto parsed = parse_detections(sample.reward_model.ground_truth);
  if (auto* boxes = std::get_if<std::vector<DetBox>>(&parsed)) gts = std::move(*boxes);

  const double miss_prob = 0.3 * (1.0 - skill);
  const double amplitude = config_.box_jitter * (1.0 - skill);
  std::vector<DetBox> preds;
  for (const auto& gt : gts) {
    const double u_miss = uniform01(rng);
    double d[4];
    for (double& x : d) x = uniform(rng, -1.0, 1.0);
    if (u_miss < miss_prob) continue;
    const double w = gt.bbox.width(), h = gt.bbox.height();
    const auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
    DetBox p;
    p.label = gt.label;
    p.bbox = normalize_corners(clamp01(gt.bbox.x1 + d[0] * amplitude * w),
                               clamp01(gt.bbox.y1 + d[1] * amplitude * h),
                               clamp01(gt.bbox.x2 + d[2] * amplitude * w),
                               clamp01(gt.bbox.y2 + d[3] * amplitude * h));
    preds.push_back(std::move(p));
  }
  const double u_fp = uniform01(rng);
  double f[4];
  for (double& x : f) x = uniform01(rng);
  if (!gts.empty() && u_fp < 0.2 * (1.0 - skill)) {
    DetBox p;
    p.label = gts.front().label;
    p.bbox = normalize_corners(f[0], f[1], f[2], f[3]);
    preds.push_back(std::move(p));
  }

  std::string answer = detections_to_json(preds);
  std::replace(answer.begin(), answer.end(), '"', '\'');

  std::string reasoning = filler(u_len);
  if (u_reflect < config_.reflection_prob) {
    reasoning += ' ';
    reasoning += kReflections[static_cast<std::size_t>(u_reflect * 1e6) %
                              std::size(kReflections)];
  }
  const bool broken = u_format < config_.format_error_prob * (1.0 - skill);
  return wrap(reasoning, answer, broken);
}

}  // namespace rewardkit
