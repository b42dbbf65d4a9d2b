// SPDX-License-Identifier: Apache-2.0

#include "rewardkit/curation.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>

#include "rewardkit/math_verifier.hpp"
#include "rewardkit/parsing.hpp"
#include "rewardkit/rng.hpp"

namespace rewardkit {

std::string_view to_string(TaskFamily family) {
  switch (family) {
    case TaskFamily::kReasoning: return "reasoning";
    case TaskFamily::kDetection: return "detection";
    case TaskFamily::kGrounding: return "grounding";
    case TaskFamily::kCounting: return "counting";
    case TaskFamily::kOcr: return "ocr";
    case TaskFamily::kOther: return "other";
  }
  return "other";
}

TaskFamily family_from_ability(std::string_view ability) {
  if (ability == "math" || ability == "puzzle" || ability == "science" ||
      ability == "chart") {
    return TaskFamily::kReasoning;
  }
  if (ability == "detection") return TaskFamily::kDetection;
  if (ability == "grounding") return TaskFamily::kGrounding;
  if (ability == "counting") return TaskFamily::kCounting;
  if (ability == "ocr") return TaskFamily::kOcr;
  return TaskFamily::kOther;
}

std::optional<TaskFamily> parse_family(std::string_view name) {
  for (auto f : {TaskFamily::kReasoning, TaskFamily::kDetection,
                 TaskFamily::kGrounding, TaskFamily::kCounting, TaskFamily::kOcr,
                 TaskFamily::kOther}) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

CurationConfig CurationConfig::from_json(const nlohmann::json& doc) {
  CurationConfig c;
  if (!doc.is_object()) return c;
  if (auto it = doc.find("families"); it != doc.end()) {
    for (const auto& [source, name] : it->items()) {
      auto family = parse_family(name.get<std::string>());
      if (!family) {
        throw std::invalid_argument("unknown task family '" +
                                    name.get<std::string>() + "'");
      }
      c.family_by_source[source] = *family;
    }
  }
  if (auto it = doc.find("repeat"); it != doc.end()) {
    for (const auto& [source, n] : it->items()) {
      if (!n.is_number_integer() || n.get<int>() < 1) {
        throw std::invalid_argument("repeat factor for '" + source +
                                    "' must be a positive integer");
      }
      c.repeat_by_source[source] = n.get<int>();
    }
  }
  c.seed = doc.value("seed", c.seed);
  c.max_answer_chars = doc.value("max_answer_chars", c.max_answer_chars);
  c.max_boxes_per_category =
      doc.value("max_boxes_per_category", c.max_boxes_per_category);
  c.max_box_area = doc.value("max_box_area", c.max_box_area);
  c.max_label_words = doc.value("max_label_words", c.max_label_words);
  c.min_ascii_ratio = doc.value("min_ascii_ratio", c.min_ascii_ratio);
  if (auto it = doc.find("single_multi_ratio"); it != doc.end()) {
    if (!it->is_array() || it->size() != 2) {
      throw std::invalid_argument("single_multi_ratio must be [single, multi]");
    }
    c.single_parts = (*it)[0].get<std::size_t>();
    c.multi_parts = (*it)[1].get<std::size_t>();
  }
  return c;
}

namespace {

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::string trimmed(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool looks_like_multiple_choice(const Sample& sample) {
  const std::string gold = trimmed(sample.reward_model.ground_truth);
  if (gold.size() == 1 && gold[0] >= 'A' && gold[0] <= 'E') return true;
  const std::string g = lower(gold);
  if (g == "true" || g == "false") return true;

  static const std::regex kOptionLine(R"(^\s*\(?([A-E])[\.\):]\s+\S)");
  std::set<char> letters;
  for (const auto& msg : sample.prompt) {
    std::size_t start = 0;
    while (start <= msg.content.size()) {
      auto end = msg.content.find('\n', start);
      if (end == std::string::npos) end = msg.content.size();
      const std::string line = msg.content.substr(start, end - start);
      std::smatch m;
      if (std::regex_search(line, m, kOptionLine)) letters.insert(m[1].str()[0]);
      start = end + 1;
    }
  }
  return letters.size() >= 2;
}

std::optional<std::vector<DetBox>> ground_truth_boxes(const Sample& sample) {
  auto parsed = parse_detections(sample.reward_model.ground_truth);
  if (auto* boxes = std::get_if<std::vector<DetBox>>(&parsed)) {
    return std::move(*boxes);
  }
  return std::nullopt;
}

std::optional<double> parm_number(const Sample& sample, const char* key) {
  const auto& parm = sample.reward_model.verifier_parm;
  if (!parm.is_object()) return std::nullopt;
  auto it = parm.find(key);
  if (it == parm.end() || !it->is_number()) return std::nullopt;
  return it->get<double>();
}

bool any_box_too_large(const std::vector<DetBox>& boxes, double max_area) {
  return std::any_of(boxes.begin(), boxes.end(), [&](const DetBox& b) {
    return b.bbox.area() > max_area;
  });
}

std::size_t word_count(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (unsigned char c : s) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

double ascii_ratio(std::string_view s) {
  std::size_t total = 0, ascii = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) == 0x80) continue;  // continuation byte
    ++total;
    if (c < 0x80) ++ascii;
  }
  return total == 0 ? 1.0 : static_cast<double>(ascii) / static_cast<double>(total);
}

std::string category_of(const Sample& sample) {
  const auto& parm = sample.reward_model.verifier_parm;
  if (parm.is_object()) {
    auto it = parm.find("category");
    if (it != parm.end() && it->is_string()) return it->get<std::string>();
  }
  return sample.reward_model.ground_truth;
}

TaskFamily family_of(const Sample& s, const CurationConfig& config) {
  if (auto it = config.family_by_source.find(s.data_source);
      it != config.family_by_source.end()) {
    return it->second;
  }
  return family_from_ability(s.ability);
}

}  // namespace

FilterDecision rule_filter_reasoning(const Sample& sample,
                                     std::size_t max_answer_chars) {
  if (looks_like_multiple_choice(sample)) return FilterDecision::Drop("mcq_filter");
  const std::string& gold = sample.reward_model.ground_truth;
  if (gold.find_first_of("=[]();") != std::string::npos) {
    return FilterDecision::Drop("symbol_filter");
  }
  if (utf8_length(gold) > max_answer_chars) {
    return FilterDecision::Drop("length_filter");
  }
  return FilterDecision::Keep();
}

bool to_relative_coordinates(Sample& sample) {
  auto boxes = ground_truth_boxes(sample);
  if (!boxes) return false;
  const bool absolute = std::any_of(boxes->begin(), boxes->end(), [](const DetBox& b) {
    return b.bbox.x2 > 1.0 || b.bbox.y2 > 1.0;
  });
  if (!absolute) return true;
  const auto w = parm_number(sample, "image_width");
  const auto h = parm_number(sample, "image_height");
  if (!w || !h || *w <= 0 || *h <= 0) return false;
  for (auto& b : *boxes) {
    b.bbox = Box{b.bbox.x1 / *w, b.bbox.y1 / *h, b.bbox.x2 / *w, b.bbox.y2 / *h};
  }
  sample.reward_model.ground_truth = detections_to_json(*boxes);
  return true;
}

FilterDecision rule_filter_detection(const Sample& sample,
                                     std::size_t max_boxes_per_category,
                                     double max_box_area) {
  const auto boxes = ground_truth_boxes(sample);
  if (!boxes) return FilterDecision::Drop("bad_annotation");
  std::map<std::string, std::size_t> per_category;
  for (const auto& b : *boxes) ++per_category[lower(b.label)];
  for (const auto& [_, n] : per_category) {
    if (n > max_boxes_per_category) return FilterDecision::Drop("box_count");
  }
  if (any_box_too_large(*boxes, max_box_area)) return FilterDecision::Drop("box_area");
  return FilterDecision::Keep();
}

FilterDecision rule_filter_grounding(const Sample& sample, double max_box_area,
                                     std::size_t max_label_words) {
  const auto boxes = ground_truth_boxes(sample);
  if (!boxes) return FilterDecision::Drop("bad_annotation");
  if (any_box_too_large(*boxes, max_box_area)) return FilterDecision::Drop("box_area");
  for (const auto& b : *boxes) {
    if (word_count(b.label) > max_label_words) {
      return FilterDecision::Drop("complex_label");
    }
  }
  return FilterDecision::Keep();
}

FilterDecision rule_filter_text_perception(const Sample& sample,
                                           double min_ascii_ratio) {
  std::string text = sample.reward_model.ground_truth;
  for (const auto& m : sample.prompt) text += m.content;
  if (ascii_ratio(text) < min_ascii_ratio) return FilterDecision::Drop("non_english");
  const std::string& gold = sample.reward_model.ground_truth;
  if (!verify_answer(gold, gold)) return FilterDecision::Drop("unverifiable_label");
  return FilterDecision::Keep();
}

FilterDecision apply_rule_filters(Sample& sample, TaskFamily family,
                                  const CurationConfig& config) {
  switch (family) {
    case TaskFamily::kReasoning:
      return rule_filter_reasoning(sample, config.max_answer_chars);
    case TaskFamily::kDetection:
      if (!to_relative_coordinates(sample)) return FilterDecision::Drop("bad_annotation");
      return rule_filter_detection(sample, config.max_boxes_per_category,
                                   config.max_box_area);
    case TaskFamily::kGrounding:
      if (!to_relative_coordinates(sample)) return FilterDecision::Drop("bad_annotation");
      return rule_filter_grounding(sample, config.max_box_area,
                                   config.max_label_words);
    case TaskFamily::kCounting:
    case TaskFamily::kOcr:
      return rule_filter_text_perception(sample, config.min_ascii_ratio);
    case TaskFamily::kOther:
      return FilterDecision::Keep();
  }
  return FilterDecision::Keep();
}

DifficultyScores load_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path.string());
  DifficultyScores scores;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(lineno);
    auto doc = nlohmann::json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("id") ||
        !doc["id"].is_string()) {
      throw std::invalid_argument(where + ": expected {\"id\": ..., ...}");
    }
    DifficultyScore& s = scores[doc["id"].get<std::string>()];
    if (auto it = doc.find("pass_at_8"); it != doc.end()) {
      const double v = it->get<double>();
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument(where + ": pass_at_8 outside [0, 1]");
      }
      s.pass_at_8 = v;
    }
    if (auto it = doc.find("cumulative_iou_reward"); it != doc.end()) {
      const double v = it->get<double>();
      if (!(v >= 0.0)) {
        throw std::invalid_argument(where + ": negative cumulative_iou_reward");
      }
      s.cumulative_iou_reward = v;
    }
  }
  return scores;
}

MissingScore::MissingScore(std::string id)
    : std::runtime_error("MissingScore(" + id + ")"), id_(std::move(id)) {}

FilterDecision difficulty_filter(const Sample& sample,
                                 const DifficultyScores& scores,
                                 TaskFamily family) {
  auto it = scores.find(sample.id());
  const DifficultyScore* score = it == scores.end() ? nullptr : &it->second;

  switch (family) {
    case TaskFamily::kDetection:
    case TaskFamily::kGrounding: {
      if (!score || !score->cumulative_iou_reward) throw MissingScore(sample.id());
      const double c = *score->cumulative_iou_reward;
      return c >= 2.0 && c <= 10.0 ? FilterDecision::Keep()
                                   : FilterDecision::Drop("out_of_band");
    }
    case TaskFamily::kReasoning:
      if (!score || !score->pass_at_8) throw MissingScore(sample.id());
      [[fallthrough]];
    default:
      if (!score || !score->pass_at_8) return FilterDecision::Keep();
      return *score->pass_at_8 < 1.0 ? FilterDecision::Keep()
                                     : FilterDecision::Drop("too_easy");
  }
}

std::optional<std::size_t> box_count(const Sample& sample) {
  auto boxes = ground_truth_boxes(sample);
  if (!boxes) return std::nullopt;
  return boxes->size();
}

RatioOutcome enforce_single_multi_ratio(const std::vector<Sample>& samples,
                                        std::uint64_t seed,
                                        std::size_t single_parts,
                                        std::size_t multi_parts,
                                        const std::vector<bool>* is_candidate) {
  if (single_parts == 0 || multi_parts == 0) {
    throw std::invalid_argument("ratio parts must be positive");
  }
  std::vector<std::size_t> singles, multis;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (is_candidate && !(*is_candidate)[i]) continue;
    const auto n = box_count(samples[i]);
    if (!n || *n == 0) continue;
    (*n == 1 ? singles : multis).push_back(i);
  }

  RatioOutcome out;
  std::vector<bool> drop(samples.size(), false);
  Rng rng = substream(seed, 1);
  auto downsample = [&](const std::vector<std::size_t>& group, std::size_t keep) {
    std::vector<bool> keep_mask(group.size(), false);
    for (auto k : sample_indices(group.size(), keep, rng)) keep_mask[k] = true;
    for (std::size_t k = 0; k < group.size(); ++k) {
      if (!keep_mask[k]) drop[group[k]] = true;
    }
    return group.size() - keep;
  };

  if (singles.empty() && !multis.empty()) {
    out.warnings.push_back("no single-box samples; multi-box samples kept as is");
  } else if (multis.empty() && !singles.empty()) {
    out.warnings.push_back("no multi-box samples; single-box samples kept as is");
  } else if (!singles.empty()) {
    // singles * multi_parts vs multis * single_parts decides which side is over.
    if (singles.size() * multi_parts > multis.size() * single_parts) {
      const std::size_t target = multis.size() * single_parts / multi_parts;
      out.dropped_single = downsample(singles, target);
    } else if (multis.size() * single_parts > singles.size() * multi_parts) {
      const std::size_t target = singles.size() * multi_parts / single_parts;
      out.dropped_multi = downsample(multis, target);
    }
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!drop[i]) out.kept.push_back(samples[i]);
  }
  return out;
}

bool CurationReport::reconciles() const {
  for (const auto& [_, s] : sources) {
    std::size_t dropped = s.dropped_by_difficulty;
    for (const auto& [__, n] : s.dropped_by_rule) dropped += n;
    for (const auto& [__, n] : s.dropped_by_balance) dropped += n;
    if (s.input != s.kept + dropped) return false;
  }
  return true;
}

nlohmann::json CurationReport::to_json() const {
  nlohmann::json src = nlohmann::json::object();
  std::size_t input = 0, kept = 0, emitted = 0;
  for (const auto& [name, s] : sources) {
    src[name] = {{"input", s.input},
                 {"dropped_by_rule", s.dropped_by_rule},
                 {"dropped_by_difficulty", s.dropped_by_difficulty},
                 {"difficulty_by_rule", s.difficulty_by_rule},
                 {"dropped_by_balance", s.dropped_by_balance},
                 {"kept", s.kept},
                 {"emitted", s.emitted}};
    input += s.input;
    kept += s.kept;
    emitted += s.emitted;
  }
  nlohmann::json drop_list = nlohmann::json::array();
  for (const auto& d : drops) {
    drop_list.push_back({{"id", d.id},
                         {"data_source", d.data_source},
                         {"stage", d.stage},
                         {"rule", d.rule_id}});
  }
  return {{"sources", src},
          {"totals", {{"input", input}, {"kept", kept}, {"emitted", emitted}}},
          {"drops", drop_list},
          {"warnings", warnings},
          {"reconciles", reconciles()}};
}

namespace {

// Caps each counting category at the median category size.
std::vector<bool> category_balance_drops(const std::vector<Sample>& samples,
                                         const std::vector<bool>& is_counting,
                                         std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_category;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (is_counting[i]) by_category[category_of(samples[i])].push_back(i);
  }
  std::vector<bool> drop(samples.size(), false);
  if (by_category.size() < 2) return drop;
  std::vector<std::size_t> sizes;
  for (const auto& [_, v] : by_category) sizes.push_back(v.size());
  std::sort(sizes.begin(), sizes.end());
  const std::size_t mid = sizes.size() / 2;
  const std::size_t cap =
      sizes.size() % 2 == 1 ? sizes[mid] : (sizes[mid - 1] + sizes[mid]) / 2;

  Rng rng = substream(seed, 2);
  for (const auto& [_, members] : by_category) {
    if (members.size() <= cap) continue;
    std::vector<bool> keep(members.size(), false);
    for (auto k : sample_indices(members.size(), cap, rng)) keep[k] = true;
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (!keep[k]) drop[members[k]] = true;
    }
  }
  return drop;
}

}  // namespace

CurationResult curate(std::vector<Sample> samples, const DifficultyScores* scores,
                      const CurationConfig& config) {
  CurationResult result;
  CurationReport& report = result.report;
  auto record_drop = [&](const Sample& s, const char* stage, const std::string& rule) {
    report.drops.push_back({s.id(), s.data_source, stage, rule});
  };

  // Stage 1: per-sample rules. Stage 2: difficulty.
  std::vector<Sample> survivors;
  std::vector<TaskFamily> families;
  for (auto& s : samples) {
    auto& src = report.sources[s.data_source];
    ++src.input;
    const TaskFamily family = family_of(s, config);
    const FilterDecision rule = apply_rule_filters(s, family, config);
    if (!rule.keep) {
      ++src.dropped_by_rule[rule.rule_id];
      record_drop(s, "rule", rule.rule_id);
      continue;
    }
    if (scores) {
      const FilterDecision diff = difficulty_filter(s, *scores, family);
      if (!diff.keep) {
        ++src.dropped_by_difficulty;
        ++src.difficulty_by_rule[diff.rule_id];
        record_drop(s, "difficulty", diff.rule_id);
        continue;
      }
    }
    survivors.push_back(std::move(s));
    families.push_back(family);
  }

  // Global balancing passes.
  std::vector<bool> is_detection(survivors.size()), is_counting(survivors.size());
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    is_detection[i] = families[i] == TaskFamily::kDetection;
    is_counting[i] = families[i] == TaskFamily::kCounting;
  }
  const std::vector<bool> balance_drop =
      category_balance_drops(survivors, is_counting, config.seed);
  std::vector<Sample> balanced;
  std::vector<bool> balanced_is_detection;
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    if (balance_drop[i]) {
      ++report.sources[survivors[i].data_source].dropped_by_balance["category_balance"];
      record_drop(survivors[i], "balance", "category_balance");
      continue;
    }
    balanced.push_back(std::move(survivors[i]));
    balanced_is_detection.push_back(is_detection[i]);
  }

  RatioOutcome ratio =
      enforce_single_multi_ratio(balanced, config.seed, config.single_parts,
                                 config.multi_parts, &balanced_is_detection);
  report.warnings.insert(report.warnings.end(), ratio.warnings.begin(),
                         ratio.warnings.end());
  std::set<std::string> kept_ids;
  for (const auto& s : ratio.kept) kept_ids.insert(s.id());
  for (const auto& s : balanced) {
    if (!kept_ids.contains(s.id())) {
      ++report.sources[s.data_source].dropped_by_balance["single_multi_ratio"];
      record_drop(s, "balance", "single_multi_ratio");
    }
  }

  // Duplication of under-covered sources.
  for (const auto& s : ratio.kept) {
    auto& src = report.sources[s.data_source];
    ++src.kept;
    int repeat = 1;
    if (auto it = config.repeat_by_source.find(s.data_source);
        it != config.repeat_by_source.end()) {
      repeat = it->second;
    }
    result.curated.push_back(s);
    for (int k = 1; k < repeat; ++k) {
      Sample copy = s;
      copy.extra_info.id = s.id() + "#dup" + std::to_string(k);
      result.curated.push_back(std::move(copy));
    }
    src.emitted += static_cast<std::size_t>(repeat);
  }
  return result;
}

CurationResult run_pipeline(const CurationConfig& config) {
  std::vector<Sample> samples;
  for (const auto& path : config.inputs) {
    auto part = load_dataset(path);
    samples.insert(samples.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
  }
  std::optional<DifficultyScores> scores;
  if (!config.scores_path.empty()) scores = load_scores(config.scores_path);

  CurationResult result = curate(std::move(samples), scores ? &*scores : nullptr, config);

  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    write_dataset(config.out_dir / "curated.jsonl", result.curated);
  }
  if (!config.report_path.empty()) {
    if (config.report_path.has_parent_path()) {
      std::filesystem::create_directories(config.report_path.parent_path());
    }
    std::ofstream out(config.report_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot write " + config.report_path.string());
    out << result.report.to_json().dump(2) << '\n';
  }
  return result;
}

}  // namespace rewardkit
