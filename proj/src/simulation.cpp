// SPDX-License-Identifier: Apache-2.0

#include "rewardkit/simulation.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "rewardkit/client.hpp"
#include "rewardkit/detection.hpp"
#include "rewardkit/protocol.hpp"
#include "rewardkit/server.hpp"

namespace rewardkit {

SimulationConfig SimulationConfig::from_json(const nlohmann::json& doc,
                                             const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw std::invalid_argument("simulation config must be a map");
  SimulationConfig c;
  if (auto it = doc.find("dataset"); it != doc.end()) {
    std::filesystem::path p = it->get<std::string>();
    c.dataset = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  c.steps = doc.value("steps", c.steps);
  c.group_size = doc.value("group_size", c.group_size);
  c.prompts_per_step = doc.value("prompts_per_step", c.prompts_per_step);
  c.seed = doc.value("seed", c.seed);
  if (auto it = doc.find("policy"); it != doc.end()) {
    c.policy = PolicyConfig::from_json(*it);
  }
  if (auto it = doc.find("schedule"); it != doc.end()) {
    if (it->is_string()) {
      if (it->get<std::string>() != "dynamic") {
        throw std::invalid_argument("schedule must be \"dynamic\", a number or a map");
      }
      c.schedule = ThresholdSchedule::curriculum();
    } else if (it->is_number()) {
      c.schedule = ThresholdSchedule::fixed(it->get<double>());
    } else {
      c.schedule = ThresholdSchedule::from_json(*it);
    }
  }
  if (auto it = doc.find("clip"); it != doc.end()) {
    c.clip.eps_low = it->value("eps_low", c.clip.eps_low);
    c.clip.eps_high = it->value("eps_high", c.clip.eps_high);
    c.clip.std_floor = it->value("std_floor", c.clip.std_floor);
  }
  c.reuse_factor = doc.value("reuse_factor", c.reuse_factor);
  c.max_len = doc.value("max_len", c.max_len);
  if (auto it = doc.find("server"); it != doc.end() && it->is_object()) {
    c.server_workers = it->value("workers", c.server_workers);
  }
  const std::string transport = doc.value("transport", std::string("http"));
  if (transport == "http") {
    c.transport = RewardTransport::kHttp;
  } else if (transport == "direct") {
    c.transport = RewardTransport::kDirect;
  } else {
    throw std::invalid_argument("transport must be \"http\" or \"direct\"");
  }
  return c;
}

SimulationConfig SimulationConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return from_json(doc, path.parent_path());
}

nlohmann::json StepRecord::to_json() const {
  nlohmann::json j = {{"step", step},
                      {"progress", progress},
                      {"reward_mean", reward_mean},
                      {"accuracy_mean", accuracy_mean},
                      {"format_mean", format_mean},
                      {"accuracy_by_task", accuracy_by_task},
                      {"objective", objective},
                      {"zero_signal_groups", zero_signal_groups},
                      {"signal_by_task", signal_by_task},
                      {"skill", skill_after},
                      {"items", items}};
  j["detection_threshold"] =
      detection_threshold ? nlohmann::json(*detection_threshold) : nlohmann::json();
  return j;
}

std::string Trajectory::to_jsonl() const {
  std::string out;
  for (const auto& s : steps) out += s.to_json().dump() + '\n';
  return out;
}

namespace {

// Scores one request either through the HTTP stack or in process.
class RewardBackend {
 public:
  RewardBackend(RewardTransport transport, std::size_t workers) {
    auto registry = VerifierRegistry::with_builtins();
    if (transport == RewardTransport::kHttp) {
      ServerConfig sc;
      sc.host = "127.0.0.1";
      sc.port = 0;
      sc.workers = workers;
      server_ = std::make_unique<RewardServer>(sc, registry);
      const int port = server_->start();
      ClientOptions options;
      options.workers = 1;
      client_ = std::make_unique<RewardClient>(
          std::vector<Endpoint>{Endpoint{sc.host, port}}, options);
    } else {
      service_ = std::make_unique<RewardService>(registry, workers);
    }
  }

  ~RewardBackend() {
    if (server_) server_->stop();
  }

  RewardResponse score(const RewardRequest& request) {
    return client_ ? client_->submit_one(request) : service_->handle_batch(request);
  }

 private:
  std::unique_ptr<RewardServer> server_;
  std::unique_ptr<RewardClient> client_;
  std::unique_ptr<RewardService> service_;
};

std::vector<Sample> load_samples(const SimulationConfig& config) {
  if (!config.samples.empty()) return config.samples;
  if (config.dataset.empty()) {
    throw std::invalid_argument("simulation needs a dataset or samples");
  }
  auto samples = load_dataset(config.dataset);
  if (samples.empty()) {
    throw std::invalid_argument(config.dataset.string() + " holds no samples");
  }
  return samples;
}

void check(const SimulationConfig& c) {
  if (c.steps == 0) throw std::invalid_argument("steps must be positive");
  if (c.group_size < 2) throw std::invalid_argument("group_size must be at least 2");
  if (c.prompts_per_step == 0) {
    throw std::invalid_argument("prompts_per_step must be positive");
  }
  if (c.reuse_factor == 0) throw std::invalid_argument("reuse_factor must be positive");
  c.clip.validate();
}

std::size_t token_count(const std::string& response) {
  const std::size_t n = measure_length(response, LengthUnit::kWhitespaceTokens);
  return std::clamp<std::size_t>(n, 1, 64);
}

}  // namespace

Trajectory run_simulation(const SimulationConfig& config) {
  check(config);
  const std::vector<Sample> samples = load_samples(config);
  MockPolicy policy(config.policy);
  const PromptPool pool = PromptPool::defaults();
  MetricsMonitor monitor;
  RewardBackend backend(config.transport, config.server_workers);

  Trajectory trajectory;
  for (std::size_t step = 1; step <= config.steps; ++step) {
    const double progress =
        static_cast<double>(step - 1) / static_cast<double>(config.steps);
    Rng rng = substream(config.seed, step);
    const auto picks = sample_indices(
        samples.size(), std::min(config.prompts_per_step, samples.size()), rng);

    RewardRequest request;
    request.batch_id = "step-" + std::to_string(step);
    request.training_progress = progress;
    std::vector<const Sample*> item_samples;
    for (std::size_t p : picks) {
      const Sample& sample = samples[p];
      build_prompt(sample, pool, rng);
      for (std::size_t g = 0; g < config.group_size; ++g) {
        RewardItem item = RewardItem::from_sample(
            sample, policy.respond(sample, rng),
            sample.id() + "#" + std::to_string(request.items.size()));
        if (config.schedule && item.verifier == "detection") {
          if (!item.verifier_parm.is_object()) item.verifier_parm = nlohmann::json::object();
          item.verifier_parm["iou_schedule"] = config.schedule->to_json();
        }
        request.items.push_back(std::move(item));
        item_samples.push_back(&sample);
      }
    }

    const RewardResponse response = backend.score(request);
    std::map<std::string, const ItemResult*> by_id;
    for (const auto& r : response.results) by_id[r.id] = &r;

    StepRecord rec;
    rec.step = step;
    rec.progress = progress;
    rec.items = request.items.size();
    std::vector<RewardBreakdown> breakdowns;
    std::vector<std::string> sources, responses;
    std::vector<double> rewards;
    for (const auto& item : request.items) {
      auto it = by_id.find(item.id);
      if (it == by_id.end()) {
        throw std::runtime_error(request.batch_id + ": no result for item " + item.id);
      }
      const ItemResult& r = *it->second;
      if (r.error) {
        throw std::runtime_error(request.batch_id + ": item " + item.id + ": " + *r.error);
      }
      breakdowns.push_back({r.accuracy, r.format, r.combined, r.aux_metrics});
      sources.push_back(item.data_source);
      responses.push_back(item.response);
      rewards.push_back(r.combined);
    }

    std::map<std::string, double> acc_sum, signal_sum;
    std::map<std::string, std::size_t> task_count;
    TokenBatch tokens;
    for (std::size_t start = 0; start < rewards.size(); start += config.group_size) {
      const std::span<const double> group(rewards.data() + start, config.group_size);
      const auto adv = group_advantages(group, config.clip.std_floor);
      if (std::all_of(adv.begin(), adv.end(), [](double a) { return a == 0.0; })) {
        ++rec.zero_signal_groups;
      }
      for (std::size_t g = 0; g < config.group_size; ++g) {
        const std::size_t i = start + g;
        const std::string& task = request.items[i].verifier;
        acc_sum[task] += breakdowns[i].accuracy;
        signal_sum[task] += adv[g] * rewards[i];
        ++task_count[task];
        tokens.responses.push_back({std::vector<double>(token_count(responses[i])), adv[g]});
      }
    }

    double objective = 0.0;
    for (std::size_t pass = 0; pass < config.reuse_factor; ++pass) {
      for (auto& resp : tokens.responses) {
        for (double& r : resp.ratios) r = std::exp(uniform(rng, -0.3, 0.3));
      }
      objective += batch_objective(tokens, config.clip);
    }
    rec.objective = objective / static_cast<double>(config.reuse_factor);

    monitor.record_batch(sources, responses, breakdowns, config.max_len,
                         static_cast<std::int64_t>(step));

    const double n = static_cast<double>(rewards.size());
    for (std::size_t i = 0; i < rewards.size(); ++i) {
      rec.reward_mean += rewards[i] / n;
      rec.accuracy_mean += breakdowns[i].accuracy / n;
      rec.format_mean += breakdowns[i].format / n;
    }
    for (const auto& [task, count] : task_count) {
      rec.accuracy_by_task[task] = acc_sum[task] / static_cast<double>(count);
      rec.signal_by_task[task] = signal_sum[task] / static_cast<double>(count);
      rec.skill_after[task] = policy.update(task, rec.signal_by_task[task]);
    }
    for (const auto& item : request.items) {
      if (item.verifier == "detection") {
        rec.detection_threshold = dynamic_threshold(
            progress, DetectionOptions::from_verifier_parm(item.verifier_parm).schedule);
        break;
      }
    }
    trajectory.steps.push_back(std::move(rec));
  }
  trajectory.metrics_jsonl = monitor.export_jsonl_string();
  return trajectory;
}

void write_trajectory(const Trajectory& trajectory,
                      const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto write = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot write " + path.string());
    out << text;
  };
  write(out_dir / "trajectory.jsonl", trajectory.to_jsonl());
  write(out_dir / "metrics.jsonl", trajectory.metrics_jsonl);
}

std::string ScheduleComparison::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "step,progress";
  for (const auto& c : curves) out << ',' << c.name;
  out << '\n';
  const std::size_t steps = curves.empty() ? 0 : curves.front().trajectory.steps.size();
  for (std::size_t i = 0; i < steps; ++i) {
    const auto& first = curves.front().trajectory.steps[i];
    out << first.step << ',' << first.progress;
    for (const auto& c : curves) out << ',' << c.trajectory.steps[i].accuracy_mean;
    out << '\n';
  }
  return out.str();
}

nlohmann::json ScheduleComparison::report() const {
  nlohmann::json schedules = nlohmann::json::object();
  for (const auto& c : curves) {
    const auto& steps = c.trajectory.steps;
    double total = 0.0, early = 0.0;
    std::size_t early_n = 0;
    for (const auto& s : steps) {
      total += s.accuracy_mean;
      if (s.step <= 5) {
        early += s.accuracy_mean;
        ++early_n;
      }
    }
    schedules[c.name] = {
        {"mean_accuracy", steps.empty() ? 0.0 : total / static_cast<double>(steps.size())},
        {"mean_accuracy_first_5", early_n == 0 ? 0.0 : early / static_cast<double>(early_n)},
        {"final_skill", steps.empty() ? nlohmann::json::object()
                                      : nlohmann::json(steps.back().skill_after)}};
  }
  return {{"schedules", schedules}, {"steps", curves.empty() ? 0 : curves[0].trajectory.steps.size()}};
}

ScheduleComparison compare_schedules(const SimulationConfig& base) {
  ScheduleComparison out;
  const std::pair<const char*, ThresholdSchedule> runs[] = {
      {"fixed-0.5", ThresholdSchedule::fixed(0.5)},
      {"fixed-0.99", ThresholdSchedule::fixed(0.99)},
      {"dynamic", ThresholdSchedule::curriculum()},
  };
  for (const auto& [name, schedule] : runs) {
    SimulationConfig config = base;
    config.schedule = schedule;
    out.curves.push_back({name, run_simulation(config)});
  }
  return out;
}

}  // namespace rewardkit
