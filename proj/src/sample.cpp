// SPDX-License-Identifier: Apache-2.0

#include "rewardkit/sample.hpp"

#include <array>
#include <fstream>
#include <set>
#include <sstream>

namespace rewardkit {
namespace {

constexpr std::array<std::string_view, 8> kKnownAbilities = {
    "math", "puzzle", "science", "chart",
    "detection", "grounding", "counting", "ocr"};

const std::set<std::string, std::less<>> kTopLevelKeys = {
    "data_source", "images", "prompt", "ability", "reward_model", "extra_info"};
const std::set<std::string, std::less<>> kRewardKeys = {
    "answer", "ground_truth", "accuracy_ratio", "format_ratio", "verifier",
    "verifier_parm"};
const std::set<std::string, std::less<>> kExtraInfoKeys = {"id", "image_path"};

std::string join_path(std::string_view parent, std::string_view key) {
  if (parent.empty()) return std::string(key);
  return std::string(parent) + "." + std::string(key);
}

const Json& require(const Json& obj, std::string_view key,
                    std::string_view parent) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError(SchemaError::Kind::kMissingField, join_path(parent, key));
  }
  return *it;
}

std::string as_string(const Json& v, const std::string& field) {
  if (!v.is_string()) {
    throw SchemaError(SchemaError::Kind::kBadType, field, "expected string");
  }
  return v.get<std::string>();
}

double as_number(const Json& v, const std::string& field) {
  if (!v.is_number()) {
    throw SchemaError(SchemaError::Kind::kBadType, field, "expected number");
  }
  return v.get<double>();
}

std::string optional_string(const Json& obj, std::string_view key,
                            std::string_view parent) {
  auto it = obj.find(key);
  if (it == obj.end()) return {};
  return as_string(*it, join_path(parent, key));
}

Json collect_extras(const Json& obj,
                    const std::set<std::string, std::less<>>& known) {
  Json extras = Json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.contains(it.key())) extras[it.key()] = it.value();
  }
  return extras;
}

bool is_scalar(const Json& v) {
  return v.is_null() || v.is_boolean() || v.is_number() || v.is_string();
}

bool is_scalar_or_scalar_list(const Json& v) {
  if (is_scalar(v)) return true;
  if (!v.is_array()) return false;
  for (const auto& e : v) {
    if (!is_scalar(e)) return false;
  }
  return true;
}

void check_verifier_parm(const Json& parm) {
  const std::string base = "reward_model.verifier_parm";
  if (!parm.is_object()) {
    throw SchemaError(SchemaError::Kind::kBadType, base, "expected map");
  }
  for (auto it = parm.begin(); it != parm.end(); ++it) {
    const Json& v = it.value();
    if (is_scalar_or_scalar_list(v)) continue;
    if (v.is_object()) {
      for (const auto& [k, inner] : v.items()) {
        if (!is_scalar_or_scalar_list(inner)) {
          throw SchemaError(SchemaError::Kind::kBadType,
                            base + "." + it.key() + "." + k,
                            "nested value too deep");
        }
      }
      continue;
    }
    throw SchemaError(SchemaError::Kind::kBadType, base + "." + it.key(),
                      "unsupported value");
  }
}

PromptMessage parse_message(const Json& v, std::size_t index) {
  const std::string field = "prompt[" + std::to_string(index) + "]";
  if (!v.is_object()) {
    throw SchemaError(SchemaError::Kind::kBadType, field, "expected map");
  }
  PromptMessage msg;
  msg.role = as_string(require(v, "role", field), field + ".role");
  msg.content = as_string(require(v, "content", field), field + ".content");
  if (msg.role != "system" && msg.role != "user" && msg.role != "assistant") {
    throw SchemaError(SchemaError::Kind::kInvalidValue, field + ".role",
                      "unknown role '" + msg.role + "'");
  }
  if (msg.content.empty()) {
    throw SchemaError(SchemaError::Kind::kInvalidValue, field + ".content",
                      "empty content");
  }
  return msg;
}

RewardSpec parse_reward_spec(const Json& v) {
  if (!v.is_object()) {
    throw SchemaError(SchemaError::Kind::kBadType, "reward_model",
                      "expected map");
  }
  RewardSpec spec;
  spec.answer = optional_string(v, "answer", "reward_model");
  spec.ground_truth = as_string(require(v, "ground_truth", "reward_model"),
                                "reward_model.ground_truth");
  spec.accuracy_ratio = as_number(require(v, "accuracy_ratio", "reward_model"),
                                  "reward_model.accuracy_ratio");
  spec.format_ratio = as_number(require(v, "format_ratio", "reward_model"),
                                "reward_model.format_ratio");
  spec.verifier = as_string(require(v, "verifier", "reward_model"),
                            "reward_model.verifier");
  if (auto it = v.find("verifier_parm"); it != v.end() && !it->is_null()) {
    check_verifier_parm(*it);
    spec.verifier_parm = *it;
  }
  spec.extras = collect_extras(v, kRewardKeys);

  if (spec.accuracy_ratio < 0.0) {
    throw SchemaError(SchemaError::Kind::kInvalidValue,
                      "reward_model.accuracy_ratio", "negative");
  }
  if (spec.format_ratio < 0.0) {
    throw SchemaError(SchemaError::Kind::kInvalidValue,
                      "reward_model.format_ratio", "negative");
  }
  if (!(spec.accuracy_ratio + spec.format_ratio > 0.0)) {
    throw SchemaError(SchemaError::Kind::kInvalidValue, "reward_model",
                      "accuracy_ratio + format_ratio must be positive");
  }
  if (spec.verifier.empty()) {
    throw SchemaError(SchemaError::Kind::kInvalidValue, "reward_model.verifier",
                      "empty");
  }
  return spec;
}

ExtraInfo parse_extra_info(const Json& v) {
  if (!v.is_object()) {
    throw SchemaError(SchemaError::Kind::kBadType, "extra_info", "expected map");
  }
  ExtraInfo info;
  info.id = as_string(require(v, "id", "extra_info"), "extra_info.id");
  info.image_path = optional_string(v, "image_path", "extra_info");
  info.extras = collect_extras(v, kExtraInfoKeys);
  if (info.id.empty()) {
    throw SchemaError(SchemaError::Kind::kInvalidValue, "extra_info.id",
                      "empty");
  }
  return info;
}

void merge_extras(Json& out, const Json& extras) {
  for (auto it = extras.begin(); it != extras.end(); ++it) {
    out[it.key()] = it.value();
  }
}

}  // namespace

SchemaError::SchemaError(Kind kind, std::string field, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + "(" + field + ")" +
                         (detail.empty() ? "" : ": " + detail)),
      kind_(kind),
      field_(std::move(field)) {}

std::string_view to_string(SchemaError::Kind kind) {
  switch (kind) {
    case SchemaError::Kind::kMissingField: return "MissingField";
    case SchemaError::Kind::kBadType: return "BadType";
    case SchemaError::Kind::kInvalidValue: return "InvalidValue";
  }
  return "SchemaError";
}

Sample parse_sample(const Json& record) {
  if (!record.is_object()) {
    throw SchemaError(SchemaError::Kind::kBadType, "<record>", "expected map");
  }
  Sample s;
  s.data_source = as_string(require(record, "data_source", ""), "data_source");
  if (s.data_source.empty()) {
    throw SchemaError(SchemaError::Kind::kInvalidValue, "data_source", "empty");
  }

  if (auto it = record.find("images"); it != record.end()) {
    if (!it->is_array()) {
      throw SchemaError(SchemaError::Kind::kBadType, "images", "expected list");
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
      s.images.push_back(
          as_string((*it)[i], "images[" + std::to_string(i) + "]"));
    }
  }

  const Json& prompt = require(record, "prompt", "");
  if (!prompt.is_array()) {
    throw SchemaError(SchemaError::Kind::kBadType, "prompt", "expected list");
  }
  if (prompt.empty()) {
    throw SchemaError(SchemaError::Kind::kInvalidValue, "prompt", "empty");
  }
  for (std::size_t i = 0; i < prompt.size(); ++i) {
    s.prompt.push_back(parse_message(prompt[i], i));
  }

  s.ability = optional_string(record, "ability", "");
  s.reward_model = parse_reward_spec(require(record, "reward_model", ""));
  s.extra_info = parse_extra_info(require(record, "extra_info", ""));
  s.extras = collect_extras(record, kTopLevelKeys);
  return s;
}

Json serialize_sample(const Sample& s) {
  Json prompt = Json::array();
  for (const auto& m : s.prompt) {
    prompt.push_back({{"content", m.content}, {"role", m.role}});
  }
  Json reward = {
      {"answer", s.reward_model.answer},
      {"ground_truth", s.reward_model.ground_truth},
      {"accuracy_ratio", s.reward_model.accuracy_ratio},
      {"format_ratio", s.reward_model.format_ratio},
      {"verifier", s.reward_model.verifier},
      {"verifier_parm", s.reward_model.verifier_parm.is_null()
                            ? Json::object()
                            : s.reward_model.verifier_parm},
  };
  merge_extras(reward, s.reward_model.extras);

  Json extra = {{"id", s.extra_info.id},
                {"image_path", s.extra_info.image_path}};
  merge_extras(extra, s.extra_info.extras);

  Json out = {
      {"data_source", s.data_source},
      {"images", s.images},
      {"prompt", std::move(prompt)},
      {"ability", s.ability},
      {"reward_model", std::move(reward)},
      {"extra_info", std::move(extra)},
  };
  merge_extras(out, s.extras);
  return out;
}

Sample parse_sample_line(std::string_view line) {
  Json record = Json::parse(line.begin(), line.end(), nullptr, false);
  if (record.is_discarded()) {
    throw SchemaError(SchemaError::Kind::kBadType, "<record>", "malformed JSON");
  }
  return parse_sample(record);
}

std::string sample_to_line(const Sample& sample) {
  return serialize_sample(sample).dump();
}

bool is_known_ability(std::string_view ability) {
  for (auto known : kKnownAbilities) {
    if (known == ability) return true;
  }
  return false;
}

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw IoFailure("read error on " + path.string());
  return lines;
}

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace

std::vector<Sample> load_dataset(const std::filesystem::path& path) {
  std::vector<Sample> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    try {
      out.push_back(parse_sample_line(lines[i]));
    } catch (const SchemaError& e) {
      throw SchemaError(e.kind(), e.field(),
                        path.string() + ":" + std::to_string(i + 1));
    }
  }
  return out;
}

void write_dataset(const std::filesystem::path& path,
                   const std::vector<Sample>& samples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write " + path.string());
  for (const auto& s : samples) out << sample_to_line(s) << '\n';
  if (!out) throw IoFailure("write error on " + path.string());
}

Json ValidationReport::to_json() const {
  auto encode = [](const std::vector<Violation>& list) {
    Json arr = Json::array();
    for (const auto& v : list) {
      arr.push_back({{"line", v.line},
                     {"id", v.id},
                     {"kind", v.kind},
                     {"detail", v.detail}});
    }
    return arr;
  };
  return {{"total", total},
          {"valid", valid},
          {"invalid", invalid},
          {"warnings", warnings},
          {"by_kind", by_kind},
          {"invalid_by_source", invalid_by_source},
          {"total_by_source", total_by_source},
          {"violations", encode(violations)},
          {"warning_list", encode(warning_list)}};
}

namespace {

std::string kind_slug(SchemaError::Kind kind) {
  switch (kind) {
    case SchemaError::Kind::kMissingField: return "missing_field";
    case SchemaError::Kind::kBadType: return "bad_type";
    case SchemaError::Kind::kInvalidValue: return "invalid_value";
  }
  return "schema_error";
}

// Best-effort extraction for reporting; tolerates any shape.
std::string peek_string(const Json& record, std::string_view outer,
                        std::string_view inner = {}) {
  if (!record.is_object()) return {};
  auto it = record.find(outer);
  if (it == record.end()) return {};
  if (inner.empty()) return it->is_string() ? it->get<std::string>() : "";
  if (!it->is_object()) return {};
  auto jt = it->find(inner);
  if (jt == it->end() || !jt->is_string()) return {};
  return jt->get<std::string>();
}

}  // namespace

ValidationReport validate_lines(const std::vector<std::string>& lines) {
  ValidationReport report;
  std::set<std::string> seen_ids;

  auto flag = [&](std::size_t line, std::string id, std::string source,
                  std::string kind, std::string detail) {
    ++report.invalid;
    ++report.by_kind[kind];
    ++report.invalid_by_source[source.empty() ? "<unknown>" : source];
    report.violations.push_back(
        {line, std::move(id), std::move(kind), std::move(detail)});
  };

  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    const std::size_t lineno = i + 1;
    ++report.total;

    Json record = Json::parse(lines[i], nullptr, false);
    if (record.is_discarded()) {
      ++report.total_by_source["<unknown>"];
      flag(lineno, "", "", "malformed_json", "not a JSON value");
      continue;
    }
    const std::string source = peek_string(record, "data_source");
    const std::string raw_id = peek_string(record, "extra_info", "id");
    ++report.total_by_source[source.empty() ? "<unknown>" : source];

    Sample sample;
    try {
      sample = parse_sample(record);
    } catch (const SchemaError& e) {
      flag(lineno, raw_id, source, kind_slug(e.kind()), e.what());
      continue;
    } catch (const std::exception& e) {
      flag(lineno, raw_id, source, "malformed_record", e.what());
      continue;
    }

    if (!seen_ids.insert(sample.id()).second) {
      flag(lineno, sample.id(), source, "duplicate_id",
           "id already used earlier in file");
      continue;
    }
    ++report.valid;
    if (!is_known_ability(sample.ability)) {
      ++report.warnings;
      report.warning_list.push_back({lineno, sample.id(), "unknown_ability",
                                     "ability '" + sample.ability + "'"});
    }
  }
  return report;
}

ValidationReport validate_dataset(const std::filesystem::path& path) {
  return validate_lines(read_lines(path));
}

}  // namespace rewardkit
