// SPDX-License-Identifier: Apache-2.0

#include "rewardkit/prompt_pool.hpp"

#include <set>
#include <stdexcept>

#include "rewardkit/detection.hpp"
#include "rewardkit/parsing.hpp"

namespace rewardkit {

PromptPool PromptPool::defaults() {
  PromptPool pool;
  pool.group_a = {
      "Let's think step by step.",
      "Work through the problem one step at a time.",
      "Reason about it carefully before answering.",
      "Break the problem into small steps and solve each in turn.",
      "Think it through step by step.",
      "Go through your reasoning one step after another.",
      "Lay out your reasoning in order before giving a result.",
      "Take it slowly and reason step by step.",
      "Solve this by working through each step.",
      "Explain your thinking step by step first.",
  };
  pool.group_b = {
      "Place the answer in \\boxed{}.",
      "Put the final answer inside \\boxed{}.",
      "Write your final answer within \\boxed{}.",
      "Give the final result in \\boxed{}.",
      "Enclose the final answer in \\boxed{}.",
      "Wrap your final answer in \\boxed{}.",
      "Report the answer as \\boxed{answer}.",
      "End with the final answer in \\boxed{}.",
      "State the final answer using \\boxed{}.",
      "Present the final answer inside \\boxed{}.",
  };
  return pool;
}

std::string detection_prompt(const std::vector<std::string>& labels) {
  std::string joined;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0) joined += ", ";
    joined += labels[i];
  }
  return "Please detect all instances of the following category within the "
         "image:\n" +
         joined +
         ". \n"
         "\n"
         "Let's think step by step and output the final answer in <answer> "
         "and </answer> tags.\n"
         "For example:\n"
         "Your detailed reasoning process here.\n"
         "<answer>\n"
         "[{'bbox_2d': [x1,y1,x2,y2],'label': label_name}]\n"
         "</answer>";
}

namespace {

std::string base_instruction(const Sample& sample) {
  for (auto it = sample.prompt.rbegin(); it != sample.prompt.rend(); ++it) {
    if (it->role == "user") return it->content;
  }
  return sample.prompt.empty() ? std::string() : sample.prompt.back().content;
}

}  // namespace

BuiltPrompt build_prompt(const Sample& sample, const PromptPool& pool, Rng& rng) {
  BuiltPrompt out;
  const std::string& verifier = sample.reward_model.verifier;
  if (verifier == "math") {
    if (pool.group_a.empty() || pool.group_b.empty()) {
      throw std::invalid_argument("prompt pool groups must not be empty");
    }
    out.group_a = uniform_index(rng, pool.group_a.size());
    out.group_b = uniform_index(rng, pool.group_b.size());
    out.text = base_instruction(sample);
    if (!out.text.empty()) out.text += ' ';
    out.text += pool.group_a[*out.group_a] + ' ' + pool.group_b[*out.group_b];
    return out;
  }
  if (verifier == "detection") {
    std::vector<std::string> labels;
    std::set<std::string> seen;
    auto parsed = parse_detections(sample.reward_model.ground_truth);
    if (auto* boxes = std::get_if<std::vector<DetBox>>(&parsed)) {
      for (const auto& b : *boxes) {
        if (seen.insert(b.label).second) labels.push_back(b.label);
      }
    }
    out.text = detection_prompt(labels);
    return out;
  }
  out.text = base_instruction(sample);
  return out;
}

}  // namespace rewardkit
