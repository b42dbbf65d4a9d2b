// SPDX-License-Identifier: Apache-2.0
//
// Chain-of-thought prompt augmentation. Math prompts get one sentence from
// each of two paraphrase groups appended; detection prompts use a fixed
// query template.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rewardkit/rng.hpp"
#include "rewardkit/sample.hpp"

namespace rewardkit {

struct PromptPool {
  std::vector<std::string> group_a;  // step-by-step reasoning cues
  std::vector<std::string> group_b;  // boxed-answer cues

  /// Ten sentences per group, written for this library.
  static PromptPool defaults();
};

struct BuiltPrompt {
  std::string text;
  std::optional<std::size_t> group_a;  // indices of the appended picks
  std::optional<std::size_t> group_b;
};

/// Detection query with `{LABEL}` replaced by `labels` joined with ", ".
std::string detection_prompt(const std::vector<std::string>& labels);

/// Base instruction is the last user message of the sample. Math samples
/// get one uniform pick from each group (a first, then b); detection
/// samples get the detection template over their unique ground-truth
/// labels in first-seen order; others are returned unchanged. Throws
/// std::invalid_argument if a group is empty.
BuiltPrompt build_prompt(const Sample& sample, const PromptPool& pool, Rng& rng);

}  // namespace rewardkit
