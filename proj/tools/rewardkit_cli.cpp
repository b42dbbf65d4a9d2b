// SPDX-License-Identifier: Apache-2.0
//
// rewardkit command-line front end.
//
//   rewardkit serve [--config cfg.json] [--addr host:port] [--workers n]
//   rewardkit validate data.jsonl [--json]
//   rewardkit curate --input a.jsonl b.jsonl --scores s.jsonl --seed 7 --out dir --report r.json
//   rewardkit simulate --config sim.json --out dir
//   rewardkit compare-schedules --config sim.json [--out dir]
//   rewardkit plot-data --trajectory dir/trajectory.jsonl --out curve.csv
//   rewardkit gen-fixture --kind math|detection|curation --n 64 --seed 0 --out dir

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "rewardkit/curation.hpp"
#include "rewardkit/sample.hpp"
#include "rewardkit/server.hpp"
#include "rewardkit/simulation.hpp"
#include "rewardkit/synthetic.hpp"

namespace rk = rewardkit;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw rk::IoFailure("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw rk::IoFailure("cannot write " + path.string());
  out << text;
}

void write_scores(const fs::path& path, const rk::DifficultyScores& scores) {
  std::string text;
  for (const auto& [id, s] : scores) {
    nlohmann::json row = {{"id", id}};
    if (s.pass_at_8) row["pass_at_8"] = *s.pass_at_8;
    if (s.cumulative_iou_reward) row["cumulative_iou_reward"] = *s.cumulative_iou_reward;
    text += row.dump() + '\n';
  }
  write_text(path, text);
}

int run_serve(const fs::path& config_path, const std::string& addr, int workers) {
  rk::ServerConfig config;
  if (!config_path.empty()) config = rk::ServerConfig::from_json(read_json(config_path));
  config.apply_env_overrides();
  if (!addr.empty()) {
    nlohmann::json override = {{"server", {{"addr", addr}}}};
    const auto parsed = rk::ServerConfig::from_json(override);
    config.host = parsed.host;
    config.port = parsed.port;
  }
  if (workers > 0) config.workers = static_cast<std::size_t>(workers);

  rk::RewardServer server(config);
  const int port = server.start();
  std::cerr << "rewardkit: serving on " << config.host << ":" << port << " with "
            << config.workers << " workers\n";
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
  server.stop();
  return 0;
}

int run_validate(const fs::path& path, bool as_json) {
  const auto report = rk::validate_dataset(path);
  if (as_json) {
    std::cout << report.to_json().dump(2) << '\n';
  } else {
    for (const auto& v : report.violations) {
      std::cout << path.string() << ":" << v.line << ": " << v.kind
                << (v.id.empty() ? "" : " [" + v.id + "]") << ": " << v.detail << '\n';
    }
    for (const auto& w : report.warning_list) {
      std::cout << path.string() << ":" << w.line << ": warning: " << w.kind << ": "
                << w.detail << '\n';
    }
    std::cout << report.valid << "/" << report.total << " records valid, "
              << report.warnings << " warnings\n";
  }
  return report.invalid == 0 ? 0 : 1;
}

int run_curate(rk::CurationConfig config, const fs::path& config_path) {
  if (!config_path.empty()) {
    rk::CurationConfig file = rk::CurationConfig::from_json(read_json(config_path));
    file.inputs = config.inputs;
    file.scores_path = config.scores_path;
    file.out_dir = config.out_dir;
    file.report_path = config.report_path;
    file.seed = config.seed;
    config = std::move(file);
  }
  const auto result = rk::run_pipeline(config);
  std::size_t input = 0, kept = 0;
  for (const auto& [_, s] : result.report.sources) {
    input += s.input;
    kept += s.kept;
  }
  std::cerr << "rewardkit: kept " << kept << " of " << input << " samples, emitted "
            << result.curated.size() << "\n";
  for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << '\n';
  return 0;
}

int run_simulate(const fs::path& config_path, const fs::path& out_dir) {
  const auto config = rk::SimulationConfig::load(config_path);
  const auto trajectory = rk::run_simulation(config);
  rk::write_trajectory(trajectory, out_dir);
  const auto& last = trajectory.steps.back();
  std::cerr << "rewardkit: " << trajectory.steps.size() << " steps, final reward mean "
            << last.reward_mean << ", accuracy mean " << last.accuracy_mean << '\n';
  return 0;
}

int run_compare(const fs::path& config_path, const fs::path& out_dir) {
  const auto comparison = rk::compare_schedules(rk::SimulationConfig::load(config_path));
  const std::string report = comparison.report().dump(2) + '\n';
  if (out_dir.empty()) {
    std::cout << report;
    std::cout << comparison.to_csv();
    return 0;
  }
  write_text(out_dir / "compare_report.json", report);
  write_text(out_dir / "compare_curves.csv", comparison.to_csv());
  for (const auto& c : comparison.curves) {
    rk::write_trajectory(c.trajectory, out_dir / c.name);
  }
  return 0;
}

int run_plot_data(const fs::path& trajectory_path, const fs::path& out) {
  std::ifstream in(trajectory_path);
  if (!in) throw rk::IoFailure("cannot open " + trajectory_path.string());
  std::ostringstream csv;
  csv.precision(17);
  csv << "step,progress,reward_mean,accuracy_mean,format_mean,objective,"
         "detection_threshold\n";
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = nlohmann::json::parse(line);
    csv << row.at("step").get<std::size_t>() << ',' << row.at("progress").get<double>()
        << ',' << row.at("reward_mean").get<double>() << ','
        << row.at("accuracy_mean").get<double>() << ','
        << row.at("format_mean").get<double>() << ',' << row.at("objective").get<double>()
        << ',';
    if (row.at("detection_threshold").is_number()) {
      csv << row["detection_threshold"].get<double>();
    }
    csv << '\n';
  }
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    write_text(out, csv.str());
  }
  return 0;
}

int run_gen_fixture(const std::string& kind, std::size_t n, std::uint64_t seed,
                    const fs::path& out_dir) {
  fs::create_directories(out_dir);
  if (kind == "math" || kind == "detection") {
    const auto samples = kind == "math" ? rk::make_math_dataset(n, seed)
                                        : rk::make_detection_dataset(n, seed);
    rk::write_dataset(out_dir / (kind + ".jsonl"), samples);
    write_scores(out_dir / (kind + "_scores.jsonl"), rk::synthetic_scores(samples, seed));
    return 0;
  }
  const auto fx = rk::make_curation_fixture(seed);
  rk::write_dataset(out_dir / "curation_fixture.jsonl", fx.samples);
  write_scores(out_dir / "curation_scores.jsonl", fx.scores);
  nlohmann::json planted = nlohmann::json::object();
  for (const auto& [id, p] : fx.planted) {
    planted[id] = {{"stage", p.stage}, {"rule", p.rule_id}};
  }
  write_text(out_dir / "curation_planted.json", planted.dump(2) + '\n');
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward verification, curation and training-loop simulation"};
  app.require_subcommand(1);

  auto* serve = app.add_subcommand("serve", "Run the reward server");
  fs::path serve_config;
  std::string serve_addr;
  int serve_workers = 0;
  serve->add_option("--config", serve_config, "JSON config with a `server` section")
      ->check(CLI::ExistingFile);
  serve->add_option("--addr", serve_addr, "host:port (overrides config and env)");
  serve->add_option("--workers", serve_workers, "scoring threads")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Check a dataset file record by record");
  fs::path validate_path;
  bool validate_json = false;
  validate->add_option("path", validate_path, "JSONL dataset")->required();
  validate->add_flag("--json", validate_json, "print the report as JSON");

  auto* curate = app.add_subcommand("curate", "Run the rule and difficulty filters");
  rk::CurationConfig curate_config;
  fs::path curate_config_path;
  curate->add_option("--input", curate_config.inputs, "JSONL datasets")
      ->required()
      ->check(CLI::ExistingFile);
  curate->add_option("--scores", curate_config.scores_path, "difficulty scores JSONL")
      ->check(CLI::ExistingFile);
  curate->add_option("--seed", curate_config.seed, "sampling seed");
  curate->add_option("--out", curate_config.out_dir, "output directory")->required();
  curate->add_option("--report", curate_config.report_path, "report JSON path");
  curate->add_option("--config", curate_config_path, "families, repeat factors, thresholds")
      ->check(CLI::ExistingFile);

  auto* simulate = app.add_subcommand("simulate", "Run the closed-loop simulation");
  fs::path sim_config, sim_out;
  simulate->add_option("--config", sim_config, "simulation config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--out", sim_out, "output directory")->required();

  auto* compare = app.add_subcommand("compare-schedules",
                                     "Paired runs under fixed and dynamic IoU thresholds");
  fs::path cmp_config, cmp_out;
  compare->add_option("--config", cmp_config, "simulation config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  compare->add_option("--out", cmp_out, "output directory (stdout when absent)");

  auto* plot = app.add_subcommand("plot-data", "Turn a trajectory into CSV columns");
  fs::path plot_in, plot_out;
  plot->add_option("--trajectory", plot_in, "trajectory.jsonl")
      ->required()
      ->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "CSV path (stdout when absent)");

  auto* gen = app.add_subcommand("gen-fixture", "Write synthetic datasets and scores");
  std::string gen_kind = "curation";
  std::size_t gen_n = 64;
  std::uint64_t gen_seed = 0;
  fs::path gen_out;
  gen->add_option("--kind", gen_kind, "math | detection | curation")
      ->check(CLI::IsMember({"math", "detection", "curation"}));
  gen->add_option("--n", gen_n, "number of samples (math, detection)");
  gen->add_option("--seed", gen_seed, "seed");
  gen->add_option("--out", gen_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) return run_serve(serve_config, serve_addr, serve_workers);
    if (*validate) return run_validate(validate_path, validate_json);
    if (*curate) return run_curate(curate_config, curate_config_path);
    if (*simulate) return run_simulate(sim_config, sim_out);
    if (*compare) return run_compare(cmp_config, cmp_out);
    if (*plot) return run_plot_data(plot_in, plot_out);
    if (*gen) return run_gen_fixture(gen_kind, gen_n, gen_seed, gen_out);
  } catch (const std::exception& e) {
    std::cerr << "rewardkit: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
