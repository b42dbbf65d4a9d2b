// SPDX-License-Identifier: Apache-2.0

#include "rewardkit/parsing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rewardkit {

Box normalize_corners(double x1, double y1, double x2, double y2) {
  return Box{std::min(x1, x2), std::min(y1, y2), std::max(x1, x2),
             std::max(y1, y2)};
}

std::optional<std::string> extract_boxed(std::string_view text) {
  constexpr std::string_view kOpen = "\\boxed{";
  std::optional<std::string> last;
  for (std::size_t start = text.find(kOpen); start != std::string_view::npos;
       start = text.find(kOpen, start + 1)) {
    const std::size_t body = start + kOpen.size();
    int depth = 1;
    std::size_t i = body;
    for (; i < text.size(); ++i) {
      if (text[i] == '{') {
        ++depth;
      } else if (text[i] == '}') {
        if (--depth == 0) break;
      }
    }
    if (depth == 0) last = std::string(text.substr(body, i - body));
  }
  return last;
}

namespace {

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string_view strip_code_fence(std::string_view s) {
  s = trim(s);
  if (!s.starts_with("```")) return s;
  const auto newline = s.find('\n');
  if (newline == std::string_view::npos) return s;
  s.remove_prefix(newline + 1);
  s = trim(s);
  if (s.ends_with("```")) s.remove_suffix(3);
  return trim(s);
}

}  // namespace

TagCensus census_tags(std::string_view text) {
  return TagCensus{count_occurrences(text, kThinkOpen),
                   count_occurrences(text, kThinkClose),
                   count_occurrences(text, kAnswerOpen),
                   count_occurrences(text, kAnswerClose)};
}

std::optional<std::string> extract_answer_block(std::string_view text) {
  const auto open = text.find(kAnswerOpen);
  if (open == std::string_view::npos) return std::nullopt;
  const auto body = open + kAnswerOpen.size();
  const auto close = text.find(kAnswerClose, body);
  if (close == std::string_view::npos) return std::nullopt;
  return std::string(text.substr(body, close - body));
}

std::string requote_single_quoted(std::string_view text) {
  enum class State { kOutside, kSingle, kDouble };
  State state = State::kOutside;
  std::string out;
  out.reserve(text.size() + 8);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    switch (state) {
      case State::kOutside:
        if (c == '\'') {
          state = State::kSingle;
          out += '"';
        } else {
          if (c == '"') state = State::kDouble;
          out += c;
        }
        break;
      case State::kSingle:
        if (c == '\\' && i + 1 < text.size()) {
          const char next = text[++i];
          if (next == '\'') {
            out += '\'';
          } else {
            out += '\\';
            out += next;
          }
        } else if (c == '"') {
          out += "\\\"";
        } else if (c == '\'') {
          state = State::kOutside;
          out += '"';
        } else {
          out += c;
        }
        break;
      case State::kDouble:
        out += c;
        if (c == '\\' && i + 1 < text.size()) {
          out += text[++i];
        } else if (c == '"') {
          state = State::kOutside;
        }
        break;
    }
  }
  return out;
}

DetectionParse parse_detections(std::string_view text) {
  const std::string body = requote_single_quoted(strip_code_fence(text));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    return ParseError{e.byte, "invalid JSON"};
  }
  if (doc.is_object()) doc = nlohmann::json::array({std::move(doc)});
  if (!doc.is_array()) return ParseError{0, "expected a list of detections"};

  std::vector<DetBox> boxes;
  boxes.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& e = doc[i];
    const std::string where = "element " + std::to_string(i) + ": ";
    if (!e.is_object()) return ParseError{0, where + "expected an object"};
    auto bb = e.find("bbox_2d");
    if (bb == e.end() || !bb->is_array() || bb->size() != 4) {
      return ParseError{0, where + "bbox_2d must hold 4 numbers"};
    }
    double v[4];
    for (std::size_t k = 0; k < 4; ++k) {
      if (!(*bb)[k].is_number()) {
        return ParseError{0, where + "bbox_2d must hold 4 numbers"};
      }
      v[k] = (*bb)[k].get<double>();
      if (!std::isfinite(v[k])) {
        return ParseError{0, where + "non-finite coordinate"};
      }
    }
    auto label = e.find("label");
    if (label == e.end() || !label->is_string()) {
      return ParseError{0, where + "label must be a string"};
    }
    DetBox box;
    box.label = label->get<std::string>();
    box.bbox = normalize_corners(v[0], v[1], v[2], v[3]);
    box.reordered = v[0] > v[2] || v[1] > v[3];
    boxes.push_back(std::move(box));
  }
  return boxes;
}

std::string detections_to_json(std::span<const DetBox> boxes) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& b : boxes) {
    arr.push_back({{"bbox_2d", {b.bbox.x1, b.bbox.y1, b.bbox.x2, b.bbox.y2}},
                   {"label", b.label}});
  }
  return arr.dump();
}

std::set<std::string> default_spurious_tokens() {
  return {"<|image_pad|>", "<|video_pad|>", "<|vision_start|>",
          "<|vision_end|>"};
}

std::set<std::string> spurious_tokens_from_config(
    const nlohmann::json& config) {
  const auto parsing = config.find("parsing");
  if (parsing == config.end() || !parsing->is_object()) {
    return default_spurious_tokens();
  }
  const auto list = parsing->find("spurious_tokens");
  if (list == parsing->end()) return default_spurious_tokens();
  if (!list->is_array()) {
    throw std::invalid_argument("parsing.spurious_tokens must be a list");
  }
  std::set<std::string> out;
  for (const auto& t : *list) {
    if (!t.is_string()) {
      throw std::invalid_argument("parsing.spurious_tokens entries must be strings");
    }
    out.insert(t.get<std::string>());
  }
  if (out.empty()) {
    throw std::invalid_argument("parsing.spurious_tokens must not be empty");
  }
  return out;
}

StripResult strip_spurious_tokens(std::span<const std::string> tokens,
                                  const std::set<std::string>& blocklist) {
  if (blocklist.empty()) {
    throw std::invalid_argument("spurious-token blocklist is empty");
  }
  StripResult result;
  result.tokens.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (blocklist.contains(t)) {
      ++result.removed;
    } else {
      result.tokens.push_back(t);
    }
  }
  return result;
}

}  // namespace rewardkit
