// SPDX-License-Identifier: Apache-2.0
//
// JSON wire format of POST /v1/verify. Field names are normative; see
// docs/schema/reward_request.schema.json and reward_response.schema.json.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rewardkit/reward.hpp"
#include "rewardkit/verifier.hpp"

namespace rewardkit {

struct RewardRequest {
  std::string batch_id;
  double training_progress = 0.0;
  std::vector<RewardItem> items;
};

struct ItemResult {
  std::string id;
  double combined = 0.0;
  double accuracy = 0.0;
  double format = 0.0;
  std::map<std::string, double> aux_metrics;
  std::optional<std::string> error;
};

struct RewardResponse {
  std::string batch_id;
  std::vector<ItemResult> results;
};

/// Protocol-level rejection of a whole batch.
class MalformedRequest : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

nlohmann::json to_json(const RewardItem& item);
nlohmann::json to_json(const RewardRequest& request);
nlohmann::json to_json(const ItemResult& result);
nlohmann::json to_json(const RewardResponse& response);

/// Validates the request shape: non-empty items, unique item ids, progress
/// in [0, 1]. Throws MalformedRequest.
RewardRequest request_from_json(const nlohmann::json& doc);
RewardResponse response_from_json(const nlohmann::json& doc);

}  // namespace rewardkit
