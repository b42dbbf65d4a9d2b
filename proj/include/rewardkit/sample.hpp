// SPDX-License-Identifier: Apache-2.0
//
// Sample-level record format. Every training record carries its own reward
// weights and the name of the verifier that scores it, so routing and
// weighting are data, not code.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace rewardkit {

using Json = nlohmann::json;

struct PromptMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;

  bool operator==(const PromptMessage&) const = default;
};

struct RewardSpec {
  std::string answer;
  std::string ground_truth;
  double accuracy_ratio = 1.0;
  double format_ratio = 0.0;
  std::string verifier;
  // Scalars, lists of scalars, or one level of maps holding those.
  Json verifier_parm = Json::object();
  Json extras = Json::object();

  bool operator==(const RewardSpec&) const = default;
};

struct ExtraInfo {
  std::string id;
  std::string image_path;
  Json extras = Json::object();

  bool operator==(const ExtraInfo&) const = default;
};

struct Sample {
  std::string data_source;
  std::vector<std::string> images;  // opaque references, never decoded
  std::vector<PromptMessage> prompt;
  std::string ability;
  RewardSpec reward_model;
  ExtraInfo extra_info;
  // Unknown top-level keys, kept for forward compatibility.
  Json extras = Json::object();

  const std::string& id() const { return extra_info.id; }
  bool operator==(const Sample&) const = default;
};

class SchemaError : public std::runtime_error {
 public:
  enum class Kind { kMissingField, kBadType, kInvalidValue };

  SchemaError(Kind kind, std::string field, const std::string& detail = {});

  Kind kind() const { return kind_; }
  const std::string& field() const { return field_; }

 private:
  Kind kind_;
  std::string field_;
};

std::string_view to_string(SchemaError::Kind kind);

/// Builds a Sample from one decoded record, validating every field.
/// Throws SchemaError. Unknown verifiers are accepted here; the reward
/// server reports them per item.
Sample parse_sample(const Json& record);

/// Inverse of parse_sample. Always emits the full key set, including an
/// empty `verifier_parm` map.
Json serialize_sample(const Sample& sample);

/// Parses one line of a dataset file.
Sample parse_sample_line(std::string_view line);

/// Compact single-line encoding used in dataset files. Keys are sorted, so
/// the output is byte-stable.
std::string sample_to_line(const Sample& sample);

/// True for the eight task tags used in curated data.
bool is_known_ability(std::string_view ability);

/// Reads every record of a dataset file. Throws IoFailure or SchemaError
/// (the latter prefixed with the line number).
std::vector<Sample> load_dataset(const std::filesystem::path& path);

void write_dataset(const std::filesystem::path& path,
                   const std::vector<Sample>& samples);

class IoFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Violation {
  std::size_t line = 0;  // 1-based
  std::string id;        // empty when the record has no readable id
  std::string kind;      // "malformed_json", "missing_field", ...
  std::string detail;
};

struct ValidationReport {
  std::size_t total = 0;
  std::size_t valid = 0;
  std::size_t invalid = 0;
  std::size_t warnings = 0;
  std::map<std::string, std::size_t> by_kind;
  std::map<std::string, std::size_t> invalid_by_source;
  std::map<std::string, std::size_t> total_by_source;
  std::vector<Violation> violations;
  std::vector<Violation> warning_list;

  Json to_json() const;
};

/// Checks a dataset file record by record. Never throws on content; only an
/// unreadable path raises IoFailure.
ValidationReport validate_dataset(const std::filesystem::path& path);
ValidationReport validate_lines(const std::vector<std::string>& lines);

}  // namespace rewardkit
