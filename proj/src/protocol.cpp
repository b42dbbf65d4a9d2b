// SPDX-License-Identifier: Apache-2.0

#include "rewardkit/protocol.hpp"

#include <set>

namespace rewardkit {
namespace {

using nlohmann::json;

const json& field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw MalformedRequest(where + ": missing '" + key + "'");
  }
  return *it;
}

std::string string_field(const json& obj, const char* key,
                         const std::string& where, bool required = true) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) throw MalformedRequest(where + ": missing '" + key + "'");
    return {};
  }
  if (!it->is_string()) {
    throw MalformedRequest(where + ": '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

double number_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number()) {
    throw MalformedRequest(where + ": '" + key + "' must be a number");
  }
  return v.get<double>();
}

RewardItem item_from_json(const json& v, std::size_t index) {
  const std::string where = "items[" + std::to_string(index) + "]";
  if (!v.is_object()) throw MalformedRequest(where + ": expected an object");
  RewardItem item;
  item.id = string_field(v, "id", where);
  if (item.id.empty()) throw MalformedRequest(where + ": empty id");
  item.data_source = string_field(v, "data_source", where, false);
  item.ability = string_field(v, "ability", where, false);
  item.verifier = string_field(v, "verifier", where);
  item.response = string_field(v, "response", where);
  item.answer = string_field(v, "answer", where, false);
  item.ground_truth = string_field(v, "ground_truth", where);
  item.accuracy_ratio = number_field(v, "accuracy_ratio", where);
  item.format_ratio = number_field(v, "format_ratio", where);
  if (auto it = v.find("verifier_parm"); it != v.end() && !it->is_null()) {
    if (!it->is_object()) {
      throw MalformedRequest(where + ": 'verifier_parm' must be a map");
    }
    item.verifier_parm = *it;
  }
  return item;
}

}  // namespace

json to_json(const RewardItem& item) {
  return {{"id", item.id},
          {"data_source", item.data_source},
          {"ability", item.ability},
          {"verifier", item.verifier},
          {"verifier_parm", item.verifier_parm.is_null() ? json::object()
                                                         : item.verifier_parm},
          {"response", item.response},
          {"answer", item.answer},
          {"ground_truth", item.ground_truth},
          {"accuracy_ratio", item.accuracy_ratio},
          {"format_ratio", item.format_ratio}};
}

json to_json(const RewardRequest& request) {
  json items = json::array();
  for (const auto& item : request.items) items.push_back(to_json(item));
  return {{"batch_id", request.batch_id},
          {"training_progress", request.training_progress},
          {"items", std::move(items)}};
}

json to_json(const ItemResult& result) {
  return {{"id", result.id},
          {"combined", result.combined},
          {"accuracy", result.accuracy},
          {"format", result.format},
          {"aux_metrics", result.aux_metrics},
          {"error", result.error ? json(*result.error) : json(nullptr)}};
}

json to_json(const RewardResponse& response) {
  json results = json::array();
  for (const auto& r : response.results) results.push_back(to_json(r));
  return {{"batch_id", response.batch_id}, {"results", std::move(results)}};
}

RewardRequest request_from_json(const json& doc) {
  if (!doc.is_object()) throw MalformedRequest("request must be an object");
  RewardRequest request;
  request.batch_id = string_field(doc, "batch_id", "request");
  request.training_progress = number_field(doc, "training_progress", "request");
  if (!(request.training_progress >= 0.0 && request.training_progress <= 1.0)) {
    throw MalformedRequest("request: training_progress outside [0, 1]");
  }
  const json& items = field(doc, "items", "request");
  if (!items.is_array()) throw MalformedRequest("request: 'items' must be a list");
  if (items.empty()) throw MalformedRequest("request: 'items' is empty");

  std::set<std::string> ids;
  request.items.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    RewardItem item = item_from_json(items[i], i);
    if (!ids.insert(item.id).second) {
      throw MalformedRequest("request: duplicate item id '" + item.id + "'");
    }
    request.items.push_back(std::move(item));
  }
  return request;
}

RewardResponse response_from_json(const json& doc) {
  if (!doc.is_object()) throw MalformedRequest("response must be an object");
  RewardResponse response;
  response.batch_id = string_field(doc, "batch_id", "response");
  const json& results = field(doc, "results", "response");
  if (!results.is_array()) {
    throw MalformedRequest("response: 'results' must be a list");
  }
  for (std::size_t i = 0; i < results.size(); ++i) {
    const json& r = results[i];
    const std::string where = "results[" + std::to_string(i) + "]";
    if (!r.is_object()) throw MalformedRequest(where + ": expected an object");
    ItemResult out;
    out.id = string_field(r, "id", where);
    out.combined = number_field(r, "combined", where);
    out.accuracy = number_field(r, "accuracy", where);
    out.format = number_field(r, "format", where);
    if (auto it = r.find("aux_metrics"); it != r.end() && it->is_object()) {
      for (const auto& [k, v] : it->items()) {
        if (v.is_number()) out.aux_metrics[k] = v.get<double>();
      }
    }
    if (auto it = r.find("error"); it != r.end() && it->is_string()) {
      out.error = it->get<std::string>();
    }
    response.results.push_back(std::move(out));
  }
  return response;
}

}  // namespace rewardkit
