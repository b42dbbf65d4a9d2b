// SPDX-License-Identifier: Apache-2.0

#include "rewardkit/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "rewardkit/parsing.hpp"
#include "rewardkit/rng.hpp"

namespace rewardkit {

namespace {

const char* const kLabels[] = {"cat", "dog", "car", "person", "bicycle"};

Sample make_sample(std::string source, std::string ability, std::string verifier,
                   std::string id, std::string question, std::string gold) {
  Sample s;
  s.data_source = std::move(source);
  s.ability = std::move(ability);
  s.prompt.push_back({"user", std::move(question)});
  s.reward_model.ground_truth = std::move(gold);
  s.reward_model.verifier = std::move(verifier);
  if (s.reward_model.verifier == "detection") {
    s.reward_model.accuracy_ratio = 0.9;
    s.reward_model.format_ratio = 0.1;
  }
  s.extra_info.id = std::move(id);
  return s;
}

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%03zu", prefix, i);
  return buf;
}

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

// Relative box with sides in [lo, hi] placed uniformly inside the image.
Box random_box(Rng& rng, double lo, double hi) {
  const double w = round3(uniform(rng, lo, hi));
  const double h = round3(uniform(rng, lo, hi));
  const double x = round3(uniform(rng, 0.0, 1.0 - w));
  const double y = round3(uniform(rng, 0.0, 1.0 - h));
  return Box{x, y, round3(x + w), round3(y + h)};
}

std::string boxes_json(const std::vector<DetBox>& boxes) {
  return detections_to_json(boxes);
}

std::string detection_question(const std::vector<DetBox>& boxes) {
  std::string q = "Detect:";
  for (const auto& b : boxes) q += " " + b.label;
  return q;
}

}  // namespace

std::vector<Sample> make_math_dataset(std::size_t n, std::uint64_t seed) {
  Rng rng = substream(seed, 11);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = 2 + uniform_index(rng, 90);
    const auto b = 2 + uniform_index(rng, 90);
    std::string question, gold;
    if (uniform_index(rng, 4) == 0) {
      question = "What is " + std::to_string(a) + "/" + std::to_string(b) +
                 " written as a fraction?";
      gold = std::to_string(a) + "/" + std::to_string(b);
    } else {
      question = "What is " + std::to_string(a) + " + " + std::to_string(b) + "?";
      gold = std::to_string(a + b);
    }
    out.push_back(make_sample("synthetic_math", "math", "math",
                              numbered("math", i), question, gold));
  }
  return out;
}

std::vector<Sample> make_detection_dataset(std::size_t n, std::uint64_t seed) {
  Rng rng = substream(seed, 12);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t count = 1 + uniform_index(rng, 3);
    std::vector<DetBox> boxes;
    for (std::size_t k = 0; k < count; ++k) {
      DetBox b;
      b.label = kLabels[uniform_index(rng, std::size(kLabels))];
      b.bbox = random_box(rng, 0.1, 0.4);
      boxes.push_back(std::move(b));
    }
    out.push_back(make_sample("synthetic_det", "detection", "detection",
                              numbered("det", i), detection_question(boxes),
                              boxes_json(boxes)));
  }
  return out;
}

CurationFixture make_curation_fixture(std::uint64_t seed) {
  CurationFixture fx;
  fx.config.seed = seed;
  Rng rng = substream(seed, 13);
  std::size_t next = 0;
  auto id = [&] { return numbered("fx", next++); };
  auto plant = [&](const Sample& s, const char* stage, const char* rule) {
    fx.planted[s.id()] = {stage, rule};
  };

  // Reasoning: 8 rule violations, 3 too easy.
  auto math = [&](std::string question, std::string gold) {
    fx.samples.push_back(make_sample("fx_math", "math", "math", id(),
                                     std::move(question), std::move(gold)));
    return fx.samples.back();
  };
  plant(math("Which is prime?\nA. 4\nB. 6\nC. 7\nD. 9", "7"), "rule", "mcq_filter");
  plant(math("Pick the larger value: (A) 3 or (B) 8.", "B"), "rule", "mcq_filter");
  plant(math("Is 17 a prime number?", "True"), "rule", "mcq_filter");
  plant(math("Solve 2x = 10.", "x=5"), "rule", "symbol_filter");
  plant(math("List the roots of x^2 - 3x + 2.", "[1, 2]"), "rule", "symbol_filter");
  plant(math("Name the value of f at 3.", "f(3)"), "rule", "symbol_filter");
  plant(math("Write 10^25 - 1 in full.", std::string(25, '9')), "rule", "length_filter");
  plant(math("Spell out 121.", "one hundred and twenty-one"), "rule", "length_filter");
  for (int i = 0; i < 32; ++i) {
    const auto a = 10 + uniform_index(rng, 80);
    const auto b = 10 + uniform_index(rng, 80);
    const Sample& s = math("What is " + std::to_string(a) + " + " +
                               std::to_string(b) + "?",
                           std::to_string(a + b));
    double pass = static_cast<double>(uniform_index(rng, 8)) / 8.0;
    if (i < 3) {
      pass = 1.0;
      plant(s, "difficulty", "too_easy");
    } else if (i == 3) {
      pass = 0.0;
    }
    fx.scores[s.id()].pass_at_8 = pass;
  }
  // Rule-dropped reasoning samples still carry scores.
  for (const auto& s : fx.samples) {
    if (!fx.scores.count(s.id())) fx.scores[s.id()].pass_at_8 = 0.5;
  }

  // Detection: 5 rule violations, then 19 single-box and 21 multi-box
  // samples of which one of each falls outside the IoU band.
  auto det = [&](const std::vector<DetBox>& boxes, std::string gold) {
    fx.samples.push_back(make_sample("fx_det", "detection", "detection", id(),
                                     detection_question(boxes), std::move(gold)));
    return &fx.samples.back();
  };
  auto small_boxes = [&](std::size_t n, bool same_label) {
    std::vector<DetBox> boxes;
    for (std::size_t k = 0; k < n; ++k) {
      DetBox b;
      b.label = same_label ? "car" : kLabels[k % std::size(kLabels)];
      b.bbox = random_box(rng, 0.05, 0.2);
      boxes.push_back(std::move(b));
    }
    return boxes;
  };
  for (int i = 0; i < 2; ++i) {
    auto boxes = small_boxes(11, true);
    plant(*det(boxes, boxes_json(boxes)), "rule", "box_count");
  }
  for (int i = 0; i < 2; ++i) {
    auto boxes = small_boxes(1 + i, false);
    boxes[0].bbox = Box{0.1, 0.1, 0.85, 0.9};  // area 0.6
    plant(*det(boxes, boxes_json(boxes)), "rule", "box_area");
  }
  plant(*det(small_boxes(1, false), "[{'bbox_2d': [1, 2, 3], 'label': 'cat'}]"),
        "rule", "bad_annotation");
  for (int i = 0; i < 40; ++i) {
    const bool single = i < 19;
    auto boxes = small_boxes(single ? 1 : 2 + uniform_index(rng, 2), false);
    std::string gold = boxes_json(boxes);
    const bool absolute = i == 5 || i == 25;
    if (absolute) {
      std::vector<DetBox> scaled = boxes;
      for (auto& b : scaled) {
        b.bbox = Box{b.bbox.x1 * 640, b.bbox.y1 * 480, b.bbox.x2 * 640,
                     b.bbox.y2 * 480};
      }
      gold = boxes_json(scaled);
    }
    Sample* s = det(boxes, gold);
    if (absolute) {
      s->reward_model.verifier_parm = {{"image_width", 640}, {"image_height", 480}};
    }
    double cumulative = round3(uniform(rng, 2.0, 10.0));
    if (i == 0) cumulative = 2.0;
    if (i == 19) cumulative = 10.0;
    if (i == 1 || i == 20) {
      cumulative = i == 1 ? 1.5 : 11.0;
      plant(*s, "difficulty", "out_of_band");
    }
    fx.scores[s->id()].cumulative_iou_reward = cumulative;
  }
  for (const auto& s : fx.samples) {
    if (s.ability == "detection" && !fx.scores[s.id()].cumulative_iou_reward) {
      fx.scores[s.id()].cumulative_iou_reward = 5.0;
    }
  }

  // Counting: 2 rule violations, 8 clean samples over three categories.
  auto text_task = [&](const char* source, const char* ability,
                       std::string question, std::string gold) {
    fx.samples.push_back(make_sample(source, ability, "math", id(),
                                     std::move(question), std::move(gold)));
    return &fx.samples.back();
  };
  plant(*text_task("fx_count", "counting",
                   "\xE5\x9B\xBE\xE7\x89\x87\xE9\x87\x8C\xE6\x9C\x89\xE5\x87\xA0"
                   "\xE4\xB8\xAA\xE8\x8B\xB9\xE6\x9E\x9C\xEF\xBC\x9F",
                   "3"),
        "rule", "non_english");
  plant(*text_task("fx_count", "counting", "How many birds are there?", ""),
        "rule", "unverifiable_label");
  const char* categories[] = {"apple", "apple", "apple", "apple",
                              "coin",  "coin",  "bird",  "bird"};
  for (const char* category : categories) {
    Sample* s = text_task("fx_count", "counting",
                          std::string("How many ") + category + "s are there?",
                          std::to_string(1 + uniform_index(rng, 9)));
    s->reward_model.verifier_parm = {{"category", category}};
  }

  // OCR: 2 rule violations, 3 clean samples, one of them too easy.
  plant(*text_task("fx_ocr", "ocr", "What text is shown?",
                   "\xE6\x9D\xB1\xE4\xBA\xAC\xE3\x82\xBF\xE3\x83\xAF\xE3\x83\xBC"),
        "rule", "non_english");
  plant(*text_task("fx_ocr", "ocr", "What text is on the sign?", "  "), "rule",
        "unverifiable_label");
  const Sample* easy = text_task("fx_ocr", "ocr", "Read the sign.", "STOP");
  fx.scores[easy->id()].pass_at_8 = 1.0;
  plant(*easy, "difficulty", "too_easy");
  text_task("fx_ocr", "ocr", "Read the door label.", "EXIT 12");
  fx.scores[fx.samples.back().id()].pass_at_8 = 0.25;
  text_task("fx_ocr", "ocr", "Read the shop sign.", "OPEN");

  for (const auto& [_, p] : fx.planted) {
    if (p.stage == "rule") ++fx.planted_rule_drops;
  }
  return fx;
}

DifficultyScores synthetic_scores(const std::vector<Sample>& samples,
                                  std::uint64_t seed) {
  Rng rng = substream(seed, 14);
  DifficultyScores scores;
  for (const auto& s : samples) {
    const double u = uniform01(rng);
    const auto k = uniform_index(rng, 9);
    DifficultyScore& d = scores[s.id()];
    if (s.reward_model.verifier == "detection") {
      d.cumulative_iou_reward = round3(16.0 * u);
    } else {
      d.pass_at_8 = static_cast<double>(k) / 8.0;
    }
  }
  return scores;
}

}  // namespace rewardkit
