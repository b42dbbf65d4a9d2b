// SPDX-License-Identifier: Apache-2.0

#include "rewardkit/math_verifier.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <stdexcept>

#include "rewardkit/detection.hpp"
#include "rewardkit/parsing.hpp"

namespace rewardkit {
namespace {

std::string trim_copy(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

// \text{abc} -> abc, for each wrapper command; unbalanced groups are left
// untouched.
void unwrap_commands(std::string& s) {
  static constexpr std::string_view kWrappers[] = {
      "\\text{", "\\textbf{", "\\mathrm{", "\\mbox{", "\\textrm{"};
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto open : kWrappers) {
      const auto start = s.find(open);
      if (start == std::string::npos) continue;
      const auto body = start + open.size();
      int depth = 1;
      std::size_t i = body;
      for (; i < s.size(); ++i) {
        if (s[i] == '{') ++depth;
        if (s[i] == '}' && --depth == 0) break;
      }
      if (depth != 0) continue;
      s = s.substr(0, start) + s.substr(body, i - body) + s.substr(i + 1);
      changed = true;
    }
  }
}

std::optional<double> parse_plain_number(const std::string& s) {
  static const std::regex kDecimal(
      R"(^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$)");
  static const std::regex kGrouped(R"(^[+-]?\d{1,3}(,\d{3})+(\.\d+)?$)");
  if (std::regex_match(s, kDecimal)) return std::strtod(s.c_str(), nullptr);
  if (std::regex_match(s, kGrouped)) {
    std::string digits;
    std::copy_if(s.begin(), s.end(), std::back_inserter(digits),
                 [](char c) { return c != ','; });
    return std::strtod(digits.c_str(), nullptr);
  }
  return std::nullopt;
}

std::optional<double> parse_fraction(const std::string& s) {
  static const std::regex kLatex(R"(^([+-]?)\\frac\{([^{}]+)\}\{([^{}]+)\}$)");
  static const std::regex kSlash(R"(^([+-]?[0-9.]+)/([+-]?[0-9.]+)$)");
  std::smatch m;
  std::optional<double> num, den;
  double sign = 1.0;
  if (std::regex_match(s, m, kLatex)) {
    sign = m[1] == "-" ? -1.0 : 1.0;
    num = parse_plain_number(trim_copy(m[2].str()));
    den = parse_plain_number(trim_copy(m[3].str()));
  } else if (std::regex_match(s, m, kSlash)) {
    num = parse_plain_number(m[1].str());
    den = parse_plain_number(m[2].str());
  } else {
    return std::nullopt;
  }
  if (!num || !den || *den == 0.0) return std::nullopt;
  return sign * *num / *den;
}

std::string to_text_form(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace

NormalizedAnswer normalize_answer(std::string_view text) {
  std::string s = trim_copy(text);
  s.erase(std::remove(s.begin(), s.end(), '$'), s.end());
  unwrap_commands(s);
  replace_all(s, "\\dfrac", "\\frac");
  replace_all(s, "\\tfrac", "\\frac");
  for (std::string_view spacing : {"\\!", "\\,", "\\;", "\\ "}) {
    replace_all(s, spacing, "");
  }
  s = trim_copy(s);
  while (!s.empty() && s.back() == '.') {
    s.pop_back();
    s = trim_copy(s);
  }

  NormalizedAnswer out;
  std::string core = s;
  bool percent = false;
  if (core.ends_with("\\%")) {
    core.resize(core.size() - 2);
    percent = true;
  } else if (core.ends_with("%")) {
    core.pop_back();
    percent = true;
  }
  core = trim_copy(core);

  if (auto v = parse_plain_number(core)) {
    out.kind = percent ? NormalizedAnswer::Kind::kPercentage
                       : NormalizedAnswer::Kind::kNumeric;
    out.numeric_value = percent ? *v / 100.0 : *v;
    return out;
  }
  if (auto v = parse_fraction(core)) {
    out.kind = percent ? NormalizedAnswer::Kind::kPercentage
                       : NormalizedAnswer::Kind::kFraction;
    out.numeric_value = percent ? *v / 100.0 : *v;
    return out;
  }
  out.kind = NormalizedAnswer::Kind::kText;
  out.text_value = to_text_form(s);
  return out;
}

bool verify_answer(std::string_view pred, std::string_view gold) {
  const NormalizedAnswer a = normalize_answer(pred);
  const NormalizedAnswer b = normalize_answer(gold);
  if (a.is_numeric() && b.is_numeric()) {
    const double x = *a.numeric_value;
    const double y = *b.numeric_value;
    if (!std::isfinite(x) || !std::isfinite(y)) return false;
    const double tol =
        std::max(kAnswerRelTol * std::max(std::abs(x), std::abs(y)),
                 kAnswerAbsTol);
    return std::abs(x - y) <= tol;
  }
  if (a.is_numeric() || b.is_numeric()) return false;
  if (a.text_value->empty() || b.text_value->empty()) return false;
  return *a.text_value == *b.text_value;
}

RewardBreakdown compute_math_reward(const RewardSpec& spec,
                                    std::string_view response) {
  RewardBreakdown out;
  const auto boxed = extract_boxed(response);
  out.accuracy = boxed && verify_answer(*boxed, spec.ground_truth) ? 1.0 : 0.0;
  if (spec.format_ratio > 0.0) out.format = format_reward(response);
  out.combined = combine_reward(spec.accuracy_ratio, out.accuracy,
                                spec.format_ratio, out.format);
  out.aux_metrics["has_boxed"] = boxed ? 1.0 : 0.0;
  return out;
}

RewardBreakdown compute_math_reward(const Sample& sample,
                                    std::string_view response) {
  if (sample.reward_model.verifier != "math") {
    throw std::invalid_argument("sample " + sample.id() +
                                " is not routed to the math verifier");
  }
  return compute_math_reward(sample.reward_model, response);
}

}  // namespace rewardkit
