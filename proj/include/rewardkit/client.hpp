// SPDX-License-Identifier: Apache-2.0
//
// Native client for the reward service: proxy workers send batches to the
// endpoint with the fewest outstanding requests and retry failed sends
// with exponential backoff.

#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rewardkit/protocol.hpp"

namespace rewardkit {

struct Endpoint {
  std::string host;
  int port = 0;

  /// Accepts "host:port" or "http://host:port[/]".
  static Endpoint parse(const std::string& url);
  std::string to_string() const;
};

struct TransportReply {
  int status = 0;  // 0 means the connection failed or timed out
  std::string body;
  std::string error;
};

/// Sends one request body; implementations must be thread-safe.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportReply post(const Endpoint& endpoint, const std::string& path,
                              const std::string& body,
                              std::chrono::milliseconds timeout) = 0;
};

class HttpTransport final : public Transport {
 public:
  TransportReply post(const Endpoint& endpoint, const std::string& path,
                      const std::string& body,
                      std::chrono::milliseconds timeout) override;
};

struct ClientOptions {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{50};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds timeout{30000};
  std::size_t workers = 4;  // proxy workers used by submit()
};

class EndpointExhausted : public std::runtime_error {
 public:
  EndpointExhausted(std::string batch_id, const std::string& last_error);
  const std::string& batch_id() const { return batch_id_; }

 private:
  std::string batch_id_;
};

struct BatchOutcome {
  std::string batch_id;
  std::optional<RewardResponse> response;  // empty on failure
  std::string error;
  std::size_t endpoint = 0;  // index of the endpoint that answered last
  int attempts = 0;
  bool rejected = false;  // server answered 4xx
};

class RewardClient {
 public:
  explicit RewardClient(std::vector<Endpoint> endpoints,
                        ClientOptions options = {},
                        std::shared_ptr<Transport> transport =
                            std::make_shared<HttpTransport>());

  /// Sends one batch, retrying on connection failures and 5xx replies.
  /// Throws EndpointExhausted after the last attempt, MalformedRequest if
  /// the server rejects the batch (4xx, never retried).
  RewardResponse submit_one(const RewardRequest& request);

  /// Sends all batches concurrently and invokes `on_done` (serialized) as
  /// each completes.
  void submit(const std::vector<RewardRequest>& batches,
              const std::function<void(const BatchOutcome&)>& on_done);

  /// Completion-ordered responses. Throws EndpointExhausted for the first
  /// failed batch once every batch has finished.
  std::vector<RewardResponse> submit_all(const std::vector<RewardRequest>& batches);

  /// Batches answered successfully by each endpoint.
  std::vector<std::size_t> served_counts() const;
  std::vector<int> outstanding() const;

 private:
  BatchOutcome send_with_retry(const RewardRequest& request);
  std::size_t acquire(std::optional<std::size_t> avoid);
  void release(std::size_t index);

  std::vector<Endpoint> endpoints_;
  ClientOptions options_;
  std::shared_ptr<Transport> transport_;

  mutable std::mutex pick_mu_;
  std::unique_ptr<std::atomic<int>[]> outstanding_;
  std::unique_ptr<std::atomic<std::size_t>[]> served_;
};

}  // namespace rewardkit
