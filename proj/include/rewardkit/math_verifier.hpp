// SPDX-License-Identifier: Apache-2.0
//
// Binary accuracy reward for answers that reduce to a short literal:
// integers, decimals, simple fractions, percentages and plain words.
// This is a deliberately small subset of symbolic equivalence checking.

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "rewardkit/reward.hpp"
#include "rewardkit/sample.hpp"

namespace rewardkit {

struct NormalizedAnswer {
  enum class Kind { kNumeric, kFraction, kPercentage, kText };

  Kind kind = Kind::kText;
  std::optional<double> numeric_value;  // set for the three numeric kinds
  std::optional<std::string> text_value;  // set for kText

  bool is_numeric() const { return kind != Kind::kText; }
};

NormalizedAnswer normalize_answer(std::string_view text);

inline constexpr double kAnswerRelTol = 1e-6;
inline constexpr double kAnswerAbsTol = 1e-9;

/// True iff both answers normalize to the same value. Empty answers never
/// verify.
bool verify_answer(std::string_view pred, std::string_view gold);

/// Scores a response whose final answer sits in `\boxed{}`. The format
/// component is only evaluated when `format_ratio > 0`.
RewardBreakdown compute_math_reward(const RewardSpec& spec,
                                    std::string_view response);

/// Throws std::invalid_argument unless the sample routes to "math".
RewardBreakdown compute_math_reward(const Sample& sample,
                                    std::string_view response);

}  // namespace rewardkit
