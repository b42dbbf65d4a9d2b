// SPDX-License-Identifier: Apache-2.0
//
// Group-relative advantages and the token-level clipped surrogate with
// asymmetric clipping. There is no reference model and no KL term.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rewardkit {

inline constexpr std::size_t kDefaultGroupSize = 8;

struct ClipConfig {
  double eps_low = 0.2;
  double eps_high = 0.28;
  double std_floor = 1e-8;

  /// Throws std::invalid_argument unless 0 < eps_low <= eps_high < 1 and
  /// std_floor >= 0.
  void validate() const;
};

/// (R_i - mean) / std with the population standard deviation. Groups whose
/// std falls below `std_floor` carry no signal and get all-zero advantages.
/// Throws std::invalid_argument for groups smaller than 2.
std::vector<double> group_advantages(std::span<const double> rewards,
                                     double std_floor = 1e-8);

/// min(r * A, clip(r, 1 - eps_low, 1 + eps_high) * A).
double clipped_token_objective(double ratio, double advantage,
                               const ClipConfig& cfg = {});

/// d/d(ratio) of clipped_token_objective: `advantage` where the unclipped
/// branch is active (including the kink), 0 where the clipped one is.
double objective_grad_wrt_ratio(double ratio, double advantage,
                                const ClipConfig& cfg = {});

/// Token ratios of one response together with its broadcast advantage.
struct ResponseTokens {
  std::vector<double> ratios;
  double advantage = 0.0;
};

struct TokenBatch {
  std::vector<ResponseTokens> responses;
};

/// Mean of the clipped objective over all tokens of all responses, with a
/// single normalization by the total token count. Throws
/// std::invalid_argument for empty responses or non-positive ratios.
double batch_objective(const TokenBatch& batch, const ClipConfig& cfg = {});

/// Training loss is the negated objective.
inline double batch_loss(const TokenBatch& batch, const ClipConfig& cfg = {}) {
  return -batch_objective(batch, cfg);
}

}  // namespace rewardkit
