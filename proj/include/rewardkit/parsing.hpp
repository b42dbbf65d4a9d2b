// SPDX-License-Identifier: Apache-2.0
//
// Extraction of verifiable payloads from raw model responses.

#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace rewardkit {

/// Literal occurrence counts of the four format tags.
struct TagCensus {
  std::size_t think_open = 0;    // <think>
  std::size_t think_close = 0;   // </think>
  std::size_t answer_open = 0;   // <answer>
  std::size_t answer_close = 0;  // </answer>

  bool operator==(const TagCensus&) const = default;
};

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";

/// Axis-aligned box, corners ordered so that x1 <= x2 and y1 <= y2.
struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool operator==(const Box&) const = default;
};

/// Reorders corners into (min, min, max, max).
Box normalize_corners(double x1, double y1, double x2, double y2);

struct DetBox {
  std::string label;
  Box bbox;
  bool reordered = false;  // input corners were inverted

  bool operator==(const DetBox&) const = default;
};

struct ParseError {
  std::size_t position = 0;
  std::string reason;
};

using DetectionParse = std::variant<std::vector<DetBox>, ParseError>;

/// Content of the last balanced `\boxed{...}` group, or nullopt.
std::optional<std::string> extract_boxed(std::string_view text);

TagCensus census_tags(std::string_view text);

/// Text between the first `<answer>` and the next `</answer>`.
std::optional<std::string> extract_answer_block(std::string_view text);

/// Parses a COCO-style detection list. Accepts strict JSON, the
/// single-quoted variant that prompts usually show, an optional markdown
/// code fence, and a bare object in place of a one-element list.
DetectionParse parse_detections(std::string_view text);

/// Rewrites single-quoted string literals into JSON double-quoted ones.
std::string requote_single_quoted(std::string_view text);

/// Serializes boxes in strict JSON using the `bbox_2d`/`label` keys.
std::string detections_to_json(std::span<const DetBox> boxes);

std::set<std::string> default_spurious_tokens();

/// Reads `parsing.spurious_tokens` from a config document, falling back to
/// the default blocklist when the key is absent.
std::set<std::string> spurious_tokens_from_config(const nlohmann::json& config);

struct StripResult {
  std::vector<std::string> tokens;
  std::size_t removed = 0;
};

/// Drops every token present in `blocklist`, preserving the order of the
/// rest. Throws std::invalid_argument when the blocklist is empty.
StripResult strip_spurious_tokens(std::span<const std::string> tokens,
                                  const std::set<std::string>& blocklist);

}  // namespace rewardkit
