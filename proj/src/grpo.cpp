// SPDX-License-Identifier: Apache-2.0

#include "rewardkit/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rewardkit {

void ClipConfig::validate() const {
  if (!(eps_low > 0.0 && eps_low <= eps_high && eps_high < 1.0)) {
    throw std::invalid_argument("clip config needs 0 < eps_low <= eps_high < 1");
  }
  if (!(std_floor >= 0.0)) {
    throw std::invalid_argument("std_floor must be non-negative");
  }
}

std::vector<double> group_advantages(std::span<const double> rewards,
                                     double std_floor) {
  if (rewards.size() < 2) {
    throw std::invalid_argument("a reward group needs at least 2 rollouts");
  }
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std = std::sqrt(var / n);

  std::vector<double> out(rewards.size(), 0.0);
  if (!(std >= std_floor) || std == 0.0) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    out[i] = (rewards[i] - mean) / std;
  }
  return out;
}

double clipped_token_objective(double ratio, double advantage,
                               const ClipConfig& cfg) {
  const double clipped =
      std::clamp(ratio, 1.0 - cfg.eps_low, 1.0 + cfg.eps_high);
  return std::min(ratio * advantage, clipped * advantage);
}

double objective_grad_wrt_ratio(double ratio, double advantage,
                                const ClipConfig& cfg) {
  const double clipped =
      std::clamp(ratio, 1.0 - cfg.eps_low, 1.0 + cfg.eps_high);
  return ratio * advantage <= clipped * advantage ? advantage : 0.0;
}

double batch_objective(const TokenBatch& batch, const ClipConfig& cfg) {
  double sum = 0.0;
  std::size_t tokens = 0;
  for (const auto& response : batch.responses) {
    if (response.ratios.empty()) {
      throw std::invalid_argument("every response needs at least one token");
    }
    for (double r : response.ratios) {
      if (!(r > 0.0)) {
        throw std::invalid_argument("importance ratios must be positive");
      }
      sum += clipped_token_objective(r, response.advantage, cfg);
    }
    tokens += response.ratios.size();
  }
  if (tokens == 0) return 0.0;
  return sum / static_cast<double>(tokens);
}

}  // namespace rewardkit
