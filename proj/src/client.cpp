// SPDX-License-Identifier: Apache-2.0

#include "rewardkit/client.hpp"

#include <limits>
#include <thread>

#include "httplib.h"

namespace rewardkit {

Endpoint Endpoint::parse(const std::string& url) {
  std::string rest = url;
  if (rest.starts_with("http://")) rest = rest.substr(7);
  while (!rest.empty() && rest.back() == '/') rest.pop_back();
  const auto colon = rest.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == rest.size()) {
    throw std::invalid_argument("endpoint must look like host:port, got '" +
                                url + "'");
  }
  Endpoint e;
  e.host = rest.substr(0, colon);
  try {
    e.port = std::stoi(rest.substr(colon + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("bad port in endpoint '" + url + "'");
  }
  if (e.port <= 0 || e.port > 65535) {
    throw std::invalid_argument("port out of range in endpoint '" + url + "'");
  }
  return e;
}

std::string Endpoint::to_string() const {
  return "http://" + host + ":" + std::to_string(port);
}

TransportReply HttpTransport::post(const Endpoint& endpoint,
                                   const std::string& path,
                                   const std::string& body,
                                   std::chrono::milliseconds timeout) {
  httplib::Client cli(endpoint.host, endpoint.port);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  auto res = cli.Post(path, body, "application/json");
  if (!res) return {0, {}, httplib::to_string(res.error())};
  return {res->status, res->body, {}};
}

EndpointExhausted::EndpointExhausted(std::string batch_id,
                                     const std::string& last_error)
    : std::runtime_error("EndpointExhausted(" + batch_id + "): " + last_error),
      batch_id_(std::move(batch_id)) {}

RewardClient::RewardClient(std::vector<Endpoint> endpoints,
                           ClientOptions options,
                           std::shared_ptr<Transport> transport)
    : endpoints_(std::move(endpoints)),
      options_(options),
      transport_(std::move(transport)),
      outstanding_(std::make_unique<std::atomic<int>[]>(endpoints_.size())),
      served_(std::make_unique<std::atomic<std::size_t>[]>(endpoints_.size())) {
  if (endpoints_.empty()) {
    throw std::invalid_argument("client needs at least one endpoint");
  }
  if (options_.max_attempts < 1) {
    throw std::invalid_argument("max_attempts must be at least 1");
  }
  if (!transport_) throw std::invalid_argument("transport is null");
  for (std::size_t i = 0; i < endpoints_.size(); ++i) {
    outstanding_[i].store(0);
    served_[i].store(0);
  }
}

std::size_t RewardClient::acquire(std::optional<std::size_t> avoid) {
  std::lock_guard lock(pick_mu_);
  std::size_t best = endpoints_.size();
  int best_load = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < endpoints_.size(); ++i) {
    if (avoid && *avoid == i && endpoints_.size() > 1) continue;
    const int load = outstanding_[i].load(std::memory_order_acquire);
    if (load < best_load) {
      best_load = load;
      best = i;
    }
  }
  outstanding_[best].fetch_add(1, std::memory_order_acq_rel);
  return best;
}

void RewardClient::release(std::size_t index) {
  outstanding_[index].fetch_sub(1, std::memory_order_acq_rel);
}

BatchOutcome RewardClient::send_with_retry(const RewardRequest& request) {
  BatchOutcome outcome;
  outcome.batch_id = request.batch_id;
  const std::string body = to_json(request).dump();
  auto backoff = options_.initial_backoff;
  std::optional<std::size_t> last_failed;

  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    outcome.attempts = attempt;
    const std::size_t index = acquire(last_failed);
    outcome.endpoint = index;
    TransportReply reply;
    try {
      reply = transport_->post(endpoints_[index], "/v1/verify", body,
                               options_.timeout);
    } catch (const std::exception& e) {
      reply = {0, {}, e.what()};
    }
    release(index);

    if (reply.status == 200) {
      nlohmann::json doc = nlohmann::json::parse(reply.body, nullptr, false);
      try {
        if (doc.is_discarded()) throw MalformedRequest("response is not JSON");
        RewardResponse response = response_from_json(doc);
        if (response.batch_id != request.batch_id) {
          throw MalformedRequest("response batch_id mismatch");
        }
        served_[index].fetch_add(1, std::memory_order_relaxed);
        outcome.response = std::move(response);
        outcome.error.clear();
        return outcome;
      } catch (const MalformedRequest& e) {
        outcome.error = endpoints_[index].to_string() + ": " + e.what();
      }
    } else if (reply.status >= 400 && reply.status < 500) {
      outcome.error = "HTTP " + std::to_string(reply.status) + ": " + reply.body;
      outcome.rejected = true;
      return outcome;
    } else if (reply.status == 0) {
      outcome.error = endpoints_[index].to_string() + ": " + reply.error;
    } else {
      outcome.error = endpoints_[index].to_string() + ": HTTP " +
                      std::to_string(reply.status);
    }
    last_failed = index;
    if (attempt < options_.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(static_cast<long long>(
          static_cast<double>(backoff.count()) * options_.backoff_multiplier));
    }
  }
  return outcome;
}

RewardResponse RewardClient::submit_one(const RewardRequest& request) {
  BatchOutcome outcome = send_with_retry(request);
  if (outcome.response) return std::move(*outcome.response);
  if (outcome.rejected) throw MalformedRequest(outcome.error);
  throw EndpointExhausted(request.batch_id, outcome.error);
}

void RewardClient::submit(
    const std::vector<RewardRequest>& batches,
    const std::function<void(const BatchOutcome&)>& on_done) {
  if (batches.empty()) return;
  std::atomic<std::size_t> next{0};
  std::mutex callback_mu;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < batches.size();
         i = next.fetch_add(1)) {
      BatchOutcome outcome = send_with_retry(batches[i]);
      std::lock_guard lock(callback_mu);
      on_done(outcome);
    }
  };
  const std::size_t n = std::min(std::max<std::size_t>(options_.workers, 1),
                                 batches.size());
  std::vector<std::jthread> workers;
  workers.reserve(n);
  for (std::size_t i = 0; i < n; ++i) workers.emplace_back(worker);
}

std::vector<RewardResponse> RewardClient::submit_all(
    const std::vector<RewardRequest>& batches) {
  std::vector<RewardResponse> responses;
  std::optional<BatchOutcome> first_failure;
  submit(batches, [&](const BatchOutcome& outcome) {
    if (outcome.response) {
      responses.push_back(*outcome.response);
    } else if (!first_failure) {
      first_failure = outcome;
    }
  });
  if (first_failure) {
    if (first_failure->rejected) throw MalformedRequest(first_failure->error);
    throw EndpointExhausted(first_failure->batch_id, first_failure->error);
  }
  return responses;
}

std::vector<std::size_t> RewardClient::served_counts() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < endpoints_.size(); ++i) out.push_back(served_[i].load());
  return out;
}

std::vector<int> RewardClient::outstanding() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < endpoints_.size(); ++i) out.push_back(outstanding_[i].load());
  return out;
}

}  // namespace rewardkit
