// SPDX-License-Identifier: Apache-2.0
//
// Asynchronous reward service. Batches arrive over HTTP, every item is
// routed by its `verifier` key and scored on a bounded worker pool.
//
//   POST /v1/verify   RewardRequest JSON -> RewardResponse JSON
//   GET  /healthz     200 "ok"
//   GET  /metrics     text counters

#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "json.hpp"
#include "rewardkit/protocol.hpp"
#include "rewardkit/verifier.hpp"
#include "rewardkit/worker_pool.hpp"

namespace rewardkit {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8000;  // 0 picks a free port
  std::size_t workers = 8;
  std::size_t max_batch_size = 4096;

  /// Reads the optional `server` section: {"addr": "host:port",
  /// "workers": n, "max_batch_size": n}.
  static ServerConfig from_json(const nlohmann::json& config);
  /// REWARD_SERVER_ADDR ("host:port") and REWARD_SERVER_WORKERS.
  void apply_env_overrides();
};

/// Transport-independent core of the server.
class RewardService {
 public:
  RewardService(std::shared_ptr<VerifierRegistry> registry,
                std::size_t workers, std::size_t max_batch_size = 4096);

  /// Scores every item concurrently. Unknown verifiers and verifier
  /// exceptions become per-item errors; only protocol violations throw
  /// MalformedRequest.
  RewardResponse handle_batch(const RewardRequest& request);

  /// Full HTTP-body round trip; returns the status code and body.
  std::pair<int, std::string> handle_json(const std::string& body);

  /// Text exposition of the monotone counters.
  std::string metrics_text() const;

  VerifierRegistry& registry() { return *registry_; }

  struct Counters {
    std::uint64_t batches_total = 0;
    std::uint64_t items_total = 0;
    std::uint64_t errors_total = 0;
    std::uint64_t rejected_batches_total = 0;
  };
  Counters counters() const;

 private:
  ItemResult score_item(const RewardItem& item, double progress);

  std::shared_ptr<VerifierRegistry> registry_;
  std::size_t max_batch_size_;
  WorkerPool pool_;

  std::atomic<std::uint64_t> batches_total_{0};
  std::atomic<std::uint64_t> items_total_{0};
  std::atomic<std::uint64_t> errors_total_{0};
  std::atomic<std::uint64_t> rejected_total_{0};

  struct Latency {
    double seconds_sum = 0.0;
    std::uint64_t count = 0;
  };
  mutable std::mutex latency_mu_;
  std::map<std::string, Latency> latency_;
};

class RewardServer {
 public:
  explicit RewardServer(
      ServerConfig config,
      std::shared_ptr<VerifierRegistry> registry = VerifierRegistry::with_builtins());
  ~RewardServer();

  RewardServer(const RewardServer&) = delete;
  RewardServer& operator=(const RewardServer&) = delete;

  /// Binds and starts serving on a background thread. Returns the bound
  /// port. Throws std::runtime_error if the address cannot be bound.
  int start();
  void stop();
  /// Blocks until stop() is called from elsewhere.
  void wait();

  int port() const { return port_; }
  const std::string& host() const { return config_.host; }
  RewardService& service() { return service_; }

 private:
  struct Http;

  ServerConfig config_;
  RewardService service_;
  std::unique_ptr<Http> http_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace rewardkit
