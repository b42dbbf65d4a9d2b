// SPDX-License-Identifier: Apache-2.0
//
// Hand-rolled random generators for property tests.

#pragma once

#include <string>
#include <vector>

#include "rewardkit/rng.hpp"
#include "rewardkit/sample.hpp"

namespace gen {

using rewardkit::Rng;

inline std::string word(Rng& rng, std::size_t max_len = 8) {
  static const char kAlpha[] = "abcdefghijklmnopqrstuvwxyz0123456789 _-";
  std::string s(1 + rewardkit::uniform_index(rng, max_len), 'a');
  for (auto& c : s) c = kAlpha[rewardkit::uniform_index(rng, sizeof(kAlpha) - 1)];
  return s;
}

// Arbitrary text including quotes, escapes and multi-byte characters.
inline std::string text(Rng& rng, std::size_t max_len = 24) {
  static const std::vector<std::string> kPieces = {
      "a", "Z", "7", " ", "\"", "'", "\\", "{", "}", "\n", "\t",
      "\xC3\xA9", "\xE4\xB8\xAD", "<think>", "</answer>", "$", "%"};
  std::string s;
  const auto n = rewardkit::uniform_index(rng, max_len + 1);
  for (std::size_t i = 0; i < n; ++i) {
    s += kPieces[rewardkit::uniform_index(rng, kPieces.size())];
  }
  return s;
}

inline rewardkit::Json parm_value(Rng& rng, int depth) {
  switch (rewardkit::uniform_index(rng, depth > 0 ? 6 : 5)) {
    case 0: return static_cast<std::int64_t>(rewardkit::uniform_index(rng, 1000));
    case 1: return rewardkit::uniform(rng, -5, 5);
    case 2: return word(rng);
    case 3: return rewardkit::bernoulli(rng, 0.5);
    case 4: {
      rewardkit::Json list = rewardkit::Json::array();
      for (std::size_t i = rewardkit::uniform_index(rng, 4); i > 0; --i) {
        list.push_back(rewardkit::uniform(rng, 0, 1));
      }
      return list;
    }
    default: {
      rewardkit::Json m = rewardkit::Json::object();
      for (std::size_t i = rewardkit::uniform_index(rng, 3); i > 0; --i) {
        m[word(rng)] = parm_value(rng, depth - 1);
      }
      return m;
    }
  }
}

inline rewardkit::Sample sample(Rng& rng, const std::string& id) {
  static const char* kAbilities[] = {"math", "puzzle", "science", "chart", "detection",
                                     "grounding", "counting", "ocr"};
  static const char* kRoles[] = {"system", "user", "assistant"};
  rewardkit::Sample s;
  s.data_source = "src_" + word(rng, 4);
  for (std::size_t i = rewardkit::uniform_index(rng, 3); i > 0; --i) {
    s.images.push_back("images/" + word(rng) + ".jpg");
  }
  const std::size_t turns = 1 + rewardkit::uniform_index(rng, 3);
  for (std::size_t i = 0; i < turns; ++i) {
    s.prompt.push_back({kRoles[rewardkit::uniform_index(rng, 3)], "q" + text(rng)});
  }
  s.ability = kAbilities[rewardkit::uniform_index(rng, 8)];
  auto& rm = s.reward_model;
  rm.answer = text(rng, 6);
  rm.ground_truth = text(rng, 10);
  rm.accuracy_ratio = static_cast<double>(rewardkit::uniform_index(rng, 11)) / 10.0;
  rm.format_ratio = 1.0 - rm.accuracy_ratio + 0.125;
  rm.verifier = rewardkit::bernoulli(rng, 0.5) ? "math" : "detection";
  for (std::size_t i = rewardkit::uniform_index(rng, 3); i > 0; --i) {
    rm.verifier_parm[word(rng)] = parm_value(rng, 1);
  }
  s.extra_info.id = id;
  s.extra_info.image_path = s.images.empty() ? "" : s.images.front();
  return s;
}

}  // namespace gen
