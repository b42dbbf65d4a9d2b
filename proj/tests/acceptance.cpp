// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate: one PASS/FAIL line per primary criterion. Exit status is
// non-zero when any criterion fails or exceeds its time limit.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rewardkit/client.hpp"
#include "rewardkit/curation.hpp"
#include "rewardkit/detection.hpp"
#include "rewardkit/grpo.hpp"
#include "rewardkit/iou_schedule.hpp"
#include "rewardkit/metrics.hpp"
#include "rewardkit/server.hpp"
#include "rewardkit/simulation.hpp"
#include "rewardkit/synthetic.hpp"

using namespace rewardkit;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

Outcome schedule_exactness() {
  const auto s = ThresholdSchedule::curriculum();
  const double grid[] = {0.0, 0.05, 0.0999, 0.10, 0.24, 0.25, 0.5, 1.0};
  const double want[] = {0.85, 0.85, 0.85, 0.95, 0.95, 0.99, 0.99, 0.99};
  for (std::size_t i = 0; i < std::size(grid); ++i) {
    const double got = dynamic_threshold(grid[i], s);
    if (got != want[i]) return fail("progress " + fmt(grid[i]) + " gave " + fmt(got));
  }
  return {true, "8 grid points exact"};
}

Outcome grpo_constants() {
  const std::vector<double> one_hot = {1, 0, 0, 0, 0, 0, 0, 0};
  const double winner = group_advantages(one_hot)[0];
  if (std::abs(winner - std::sqrt(7.0)) > 1e-9) return fail("winner " + fmt(winner));
  const double clipped = clipped_token_objective(1.5, 1.0);
  if (std::abs(clipped - 1.28) > 1e-12) return fail("clipped " + fmt(clipped));

  Rng rng = substream(1001, 0);
  double worst = 0.0;
  for (int g = 0; g < 10000; ++g) {
    std::vector<double> r(2 + uniform_index(rng, 15));
    for (auto& x : r) x = uniform(rng, -1, 1);
    const auto a = group_advantages(r);
    double sum = 0, ss = 0;
    for (double x : a) sum += x;
    const double mean = sum / static_cast<double>(a.size());
    for (double x : a) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(a.size()));
    worst = std::max({worst, std::abs(mean), std::abs(sd - 1.0)});
  }
  if (worst > 1e-12) return fail("normalization error " + fmt(worst));
  return {true, "sqrt(7), 1.28, 1e4 groups max error " + fmt(worst)};
}

Outcome gradient_check() {
  Rng rng = substream(1002, 0);
  const ClipConfig cfg;
  const double h = 1e-5;
  double worst = 0.0;
  int checked = 0;
  while (checked < 1000) {
    const double r = uniform(rng, 0.5, 1.6), a = uniform(rng, -3, 3);
    if (std::abs(r - (1 - cfg.eps_low)) < 10 * h || std::abs(r - (1 + cfg.eps_high)) < 10 * h) {
      continue;
    }
    const double fd =
        (clipped_token_objective(r + h, a, cfg) - clipped_token_objective(r - h, a, cfg)) / (2 * h);
    worst = std::max(worst, std::abs(objective_grad_wrt_ratio(r, a, cfg) - fd));
    ++checked;
  }
  if (worst > 1e-6) return fail("max deviation " + fmt(worst));
  return {true, "1000 points, max deviation " + fmt(worst)};
}

Outcome geometry_oracle() {
  const double hand = iou(Box{0, 0, 10, 10}, Box{5, 5, 15, 15});
  if (std::abs(hand - 1.0 / 7.0) > 1e-12) return fail("hand example " + fmt(hand));
  Rng rng = substream(1003, 0);
  const auto thresholds = default_map_thresholds();
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto gts = oracle::random_scene(rng, 5, 3);
    const auto preds = oracle::perturbed(rng, gts, 3);
    for (const auto& p : preds) {
      for (const auto& g : gts) {
        worst = std::max(worst, std::abs(iou(p, g) - oracle::grid_iou(p.bbox, g.bbox)));
      }
    }
    worst = std::max(worst, std::abs(sample_map(preds, gts, thresholds) -
                                     oracle::sample_map(preds, gts, thresholds)));
  }
  if (worst > 1e-9) return fail("max deviation " + fmt(worst));
  return {true, "1000 scenes, max deviation " + fmt(worst)};
}

Outcome format_enumeration() {
  const char* tags[] = {"<think>", "</think>", "<answer>", "</answer>"};
  int cases = 0;
  for (int code = 0; code < 81; ++code) {
    std::string text = "x";
    int singles = 0;
    for (int t = 0, c = code; t < 4; ++t, c /= 3) {
      for (int k = 0; k < c % 3; ++k) text += std::string(tags[t]) + "y";
      singles += c % 3 == 1;
    }
    if (format_reward(text) != 0.25 * singles) return fail("case " + std::to_string(code));
    ++cases;
  }
  return {true, std::to_string(cases) + " combinations exact"};
}

Outcome frozen_schedules() {
  SimulationConfig c;
  c.samples = make_detection_dataset(32, 21);
  c.steps = 50;
  c.seed = 21;
  c.policy.frozen = true;
  c.policy.default_skill = 0.6;
  c.transport = RewardTransport::kDirect;
  const auto cmp = compare_schedules(c);
  const auto& fixed = cmp.curves.at(1).trajectory.steps;
  const auto& dyn = cmp.curves.at(2).trajectory.steps;
  std::size_t strict = 0;
  for (std::size_t i = 0; i < dyn.size(); ++i) {
    const double d = dyn[i].accuracy_mean, f = fixed[i].accuracy_mean;
    if (dyn[i].progress < 0.25) {
      if (d < f) return fail("step " + std::to_string(dyn[i].step) + " dynamic below fixed");
      strict += d > f;
    } else if (d != f) {
      return fail("step " + std::to_string(dyn[i].step) + " differs after 0.25");
    }
  }
  return {true, "50 steps, dynamic strictly above on " + std::to_string(strict) +
                    " early steps, equal afterwards"};
}

RewardItem mixed_item(Rng& rng, std::size_t batch, std::size_t i) {
  RewardItem item;
  item.id = "item-" + std::to_string(i);  // shared across batches
  const auto kind = uniform_index(rng, 10);
  if (kind < 5) {
    const auto a = uniform_index(rng, 50), b = uniform_index(rng, 50);
    item.verifier = "math";
    item.ground_truth = std::to_string(a + b);
    const auto said = bernoulli(rng, 0.5) ? a + b : a + b + batch + 1;
    item.response = "<think>add</think><answer>\\boxed{" + std::to_string(said) + "}</answer>";
  } else if (kind < 9) {
    item.verifier = "detection";
    item.accuracy_ratio = 0.9;
    item.format_ratio = 0.1;
    const auto gts = oracle::random_scene(rng, 3, 2);
    item.ground_truth = detections_to_json(gts);
    item.response = "<think>look</think><answer>" +
                    detections_to_json(oracle::perturbed(rng, gts, 2)) + "</answer>";
  } else {
    item.verifier = "nonexistent";
    item.ground_truth = "1";
    item.response = "1";
  }
  return item;
}

Outcome server_integration() {
  ServerConfig cfg;
  cfg.port = 0;
  cfg.workers = 8;
  RewardServer server(cfg);
  const int port = server.start();
  const auto builtins = VerifierRegistry::with_builtins();

  std::vector<RewardRequest> batches;
  Rng rng = substream(1004, 0);
  for (std::size_t b = 0; b < 16; ++b) {
    RewardRequest req;
    req.batch_id = "batch-" + std::to_string(b);
    req.training_progress = static_cast<double>(b) / 16.0;
    for (std::size_t i = 0; i < 64; ++i) req.items.push_back(mixed_item(rng, b, i));
    batches.push_back(std::move(req));
  }

  ClientOptions options;
  options.workers = 16;
  RewardClient client({Endpoint{"127.0.0.1", port}}, options);
  const auto responses = client.submit_all(batches);
  server.stop();
  if (responses.size() != 16) return fail(std::to_string(responses.size()) + " responses");

  std::size_t errors = 0, checked = 0;
  for (const auto& resp : responses) {
    const RewardRequest* req = nullptr;
    for (const auto& b : batches) {
      if (b.batch_id == resp.batch_id) req = &b;
    }
    if (!req || resp.results.size() != req->items.size()) {
      return fail("batch " + resp.batch_id + " has the wrong shape");
    }
    for (std::size_t i = 0; i < req->items.size(); ++i) {
      const auto& item = req->items[i];
      const auto& got = resp.results[i];
      if (got.id != item.id) return fail(resp.batch_id + ": result order");
      const auto verifier = builtins->find(item.verifier);
      if (!verifier) {
        if (got.error != std::optional<std::string>("unknown verifier")) {
          return fail(resp.batch_id + "/" + item.id + ": expected a per-item error");
        }
        ++errors;
        continue;
      }
      const auto want = verifier->score(item, req->training_progress);
      if (got.error || got.combined != want.combined || got.accuracy != want.accuracy ||
          got.format != want.format || got.aux_metrics != want.aux_metrics) {
        return fail(resp.batch_id + "/" + item.id + ": differs from the direct call");
      }
      ++checked;
    }
  }
  return {true, "16x64 items, " + std::to_string(checked) + " match direct calls, " +
                    std::to_string(errors) + " isolated unknown-verifier errors"};
}

Outcome metrics_replay() {
  MetricsMonitor monitor;
  std::vector<MetricsEvent> log;
  Rng rng = substream(1005, 0);
  const char* sources[] = {"a", "b", "c", "d", "e"};
  const char* pieces[] = {"x", "word ", "wait", " re-check ", "\xE4\xB8\xAD"};
  std::size_t events = 0;
  std::int64_t step = 0;
  while (events < 10000) {
    const std::size_t n = 1 + uniform_index(rng, 64);
    std::vector<std::string> src, resp;
    std::vector<RewardBreakdown> br;
    for (std::size_t i = 0; i < n; ++i) {
      src.push_back(sources[uniform_index(rng, 5)]);
      std::string r;
      for (std::size_t k = uniform_index(rng, 16); k > 0; --k) r += pieces[uniform_index(rng, 5)];
      resp.push_back(r);
      RewardBreakdown b;
      b.accuracy = bernoulli(rng, 0.3) ? 0.0 : uniform01(rng);
      b.format = static_cast<double>(uniform_index(rng, 5)) / 4.0;
      b.combined = 0.9 * b.accuracy + 0.1 * b.format;
      if (src.back() == std::string("a") || src.back() == std::string("b")) {
        for (const char* k : {"iou@0.50", "iou@0.75", "iou@0.95", "iou@0.99"}) {
          b.aux_metrics[k] = static_cast<double>(uniform_index(rng, 3)) / 2.0;
        }
        b.aux_metrics["map"] = uniform01(rng);
      }
      br.push_back(b);
    }
    monitor.record_batch(src, resp, br, 40, step);
    for (std::size_t i = 0; i < n; ++i) {
      log.push_back(monitor.make_event(src[i], resp[i], br[i], 40, step));
    }
    events += n;
    ++step;
  }
  const auto got = monitor.snapshot();
  const auto want = oracle::replay(log);
  if (got.size() != want.size()) return fail("source count differs");
  for (const auto& [source, m] : want) {
    const std::string diff = oracle::compare(got.at(source), m, 1e-9);
    if (!diff.empty()) return fail(source + ": " + diff);
  }
  return {true, std::to_string(events) + " events over " + std::to_string(want.size()) +
                    " sources"};
}

Outcome curation_fixture() {
  const auto fx = make_curation_fixture(2024);
  const auto first = curate(fx.samples, &fx.scores, fx.config);
  const auto second = curate(fx.samples, &fx.scores, fx.config);

  std::size_t rule_drops = 0, matched = 0;
  for (const auto& d : first.report.drops) {
    if (d.stage == "balance") continue;
    rule_drops += d.stage == "rule";
    auto it = fx.planted.find(d.id);
    if (it == fx.planted.end()) return fail("unplanted drop " + d.id + " (" + d.rule_id + ")");
    if (it->second.stage != d.stage || it->second.rule_id != d.rule_id) {
      return fail(d.id + " dropped by " + d.rule_id + ", planted " + it->second.rule_id);
    }
    ++matched;
  }
  if (rule_drops != 17) return fail(std::to_string(rule_drops) + " rule drops");
  if (matched != fx.planted.size()) return fail("a planted drop survived");

  std::size_t singles = 0, multis = 0;
  for (const auto& s : first.curated) {
    if (s.ability != "detection") continue;
    (box_count(s) == 1u ? singles : multis)++;
  }
  const long gap = std::abs(2 * static_cast<long>(singles) - static_cast<long>(multis));
  if (gap > 2) {
    return fail("ratio " + std::to_string(singles) + ":" + std::to_string(multis));
  }

  auto dump = [](const CurationResult& r) {
    std::string out = r.report.to_json().dump();
    for (const auto& s : r.curated) out += serialize_sample(s).dump() + '\n';
    return out;
  };
  if (dump(first) != dump(second)) return fail("rerun differs");
  return {true, "17 rule drops, " + std::to_string(matched) + " planted drops matched, ratio " +
                    std::to_string(singles) + ":" + std::to_string(multis) +
                    ", rerun byte-identical"};
}

struct Criterion {
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"dynamic-schedule-exactness", 1.0, schedule_exactness},
      {"grpo-constants-and-normalization", 5.0, grpo_constants},
      {"gradient-finite-differences", 5.0, gradient_check},
      {"geometry-oracle", 10.0, geometry_oracle},
      {"format-reward-enumeration", 1.0, format_enumeration},
      {"frozen-schedule-comparison", 30.0, frozen_schedules},
      {"server-integration", 30.0, server_integration},
      {"metrics-replay", 10.0, metrics_replay},
      {"curation-fixture", 5.0, curation_fixture},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = fail(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (out.ok && secs > c.limit_seconds) out = fail("time limit exceeded");
    failures += !out.ok;
    std::printf("%s %s (%.3fs / %.0fs) %s\n", out.ok ? "PASS" : "FAIL", c.name, secs,
                c.limit_seconds, out.detail.c_str());
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
