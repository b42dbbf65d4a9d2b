// SPDX-License-Identifier: Apache-2.0
//
// Seeded synthetic datasets for the simulation loop and the curation
// fixture. Nothing here reads images; box coordinates are relative.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rewardkit/curation.hpp"
#include "rewardkit/sample.hpp"

namespace rewardkit {

/// Addition and fraction word problems routed to the math verifier.
std::vector<Sample> make_math_dataset(std::size_t n, std::uint64_t seed);

/// One to three boxes per sample over a small label set, relative
/// coordinates, routed to the detection verifier.
std::vector<Sample> make_detection_dataset(std::size_t n, std::uint64_t seed);

struct PlantedDrop {
  std::string stage;  // "rule" | "difficulty"
  std::string rule_id;
};

struct CurationFixture {
  std::vector<Sample> samples;  // 100 records
  DifficultyScores scores;
  std::map<std::string, PlantedDrop> planted;  // by sample id
  std::size_t planted_rule_drops = 0;          // 17
  CurationConfig config;                       // families and seed
};

/// 40 reasoning, 45 detection, 10 counting and 5 OCR records with 17
/// planted rule violations and a handful of planted difficulty drops.
/// Surviving detection samples are 18 single-box to 20 multi-box.
CurationFixture make_curation_fixture(std::uint64_t seed);

/// pass@8 in {0, 1/8, ..., 1} for reasoning-like samples and a cumulative
/// IoU reward in [0, 16] for detection-like ones.
DifficultyScores synthetic_scores(const std::vector<Sample>& samples,
                                  std::uint64_t seed);

}  // namespace rewardkit
