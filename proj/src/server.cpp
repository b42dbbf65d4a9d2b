// SPDX-License-Identifier: Apache-2.0

#include "rewardkit/server.hpp"

#include <cstdlib>
#include <future>
#include <set>
#include <sstream>
#include <stdexcept>

#include "httplib.h"

namespace rewardkit {
namespace {

void parse_addr(const std::string& addr, std::string& host, int& port) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw std::invalid_argument("address must look like host:port, got '" +
                                addr + "'");
  }
  host = addr.substr(0, colon);
  try {
    port = std::stoi(addr.substr(colon + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("bad port in address '" + addr + "'");
  }
  if (port < 0 || port > 65535) {
    throw std::invalid_argument("port out of range in '" + addr + "'");
  }
}

std::size_t positive_count(const nlohmann::json& v, const char* name) {
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    throw std::invalid_argument(std::string("server.") + name +
                                " must be a positive integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

ServerConfig ServerConfig::from_json(const nlohmann::json& config) {
  ServerConfig out;
  if (!config.is_object()) return out;
  auto section = config.find("server");
  if (section == config.end()) return out;
  if (auto it = section->find("addr"); it != section->end()) {
    parse_addr(it->get<std::string>(), out.host, out.port);
  }
  if (auto it = section->find("workers"); it != section->end()) {
    out.workers = positive_count(*it, "workers");
  }
  if (auto it = section->find("max_batch_size"); it != section->end()) {
    out.max_batch_size = positive_count(*it, "max_batch_size");
  }
  return out;
}

void ServerConfig::apply_env_overrides() {
  if (const char* addr = std::getenv("REWARD_SERVER_ADDR"); addr && *addr) {
    parse_addr(addr, host, port);
  }
  if (const char* w = std::getenv("REWARD_SERVER_WORKERS"); w && *w) {
    const long n = std::strtol(w, nullptr, 10);
    if (n <= 0) {
      throw std::invalid_argument("REWARD_SERVER_WORKERS must be positive");
    }
    workers = static_cast<std::size_t>(n);
  }
}

RewardService::RewardService(std::shared_ptr<VerifierRegistry> registry,
                             std::size_t workers, std::size_t max_batch_size)
    : registry_(std::move(registry)),
      max_batch_size_(max_batch_size),
      pool_(workers) {
  if (!registry_) throw std::invalid_argument("registry is null");
}

ItemResult RewardService::score_item(const RewardItem& item, double progress) {
  ItemResult result;
  result.id = item.id;
  auto verifier = registry_->find(item.verifier);
  if (!verifier) {
    result.error = "unknown verifier";
    errors_total_.fetch_add(1, std::memory_order_relaxed);
    return result;
  }
  const auto start = std::chrono::steady_clock::now();
  try {
    RewardBreakdown b = verifier->score(item, progress);
    result.combined = b.combined;
    result.accuracy = b.accuracy;
    result.format = b.format;
    result.aux_metrics = std::move(b.aux_metrics);
  } catch (const std::exception& e) {
    result.error = e.what();
    errors_total_.fetch_add(1, std::memory_order_relaxed);
  }
  const std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - start;
  std::lock_guard lock(latency_mu_);
  auto& l = latency_[item.verifier];
  l.seconds_sum += elapsed.count();
  ++l.count;
  return result;
}

RewardResponse RewardService::handle_batch(const RewardRequest& request) {
  auto reject = [this](const std::string& why) {
    rejected_total_.fetch_add(1, std::memory_order_relaxed);
    return MalformedRequest(why);
  };
  if (request.items.empty()) throw reject("request: 'items' is empty");
  if (request.items.size() > max_batch_size_) {
    throw reject("request: batch of " + std::to_string(request.items.size()) +
                 " items exceeds max_batch_size " +
                 std::to_string(max_batch_size_));
  }
  if (!(request.training_progress >= 0.0 && request.training_progress <= 1.0)) {
    throw reject("request: training_progress outside [0, 1]");
  }
  std::set<std::string_view> ids;
  for (const auto& item : request.items) {
    if (!ids.insert(item.id).second) {
      throw reject("request: duplicate item id '" + item.id + "'");
    }
  }

  std::vector<std::future<ItemResult>> pending;
  pending.reserve(request.items.size());
  for (const auto& item : request.items) {
    pending.push_back(pool_.submit([this, &item, &request] {
      return score_item(item, request.training_progress);
    }));
  }
  RewardResponse response;
  response.batch_id = request.batch_id;
  response.results.reserve(pending.size());
  for (auto& f : pending) response.results.push_back(f.get());

  batches_total_.fetch_add(1, std::memory_order_relaxed);
  items_total_.fetch_add(request.items.size(), std::memory_order_relaxed);
  return response;
}

std::pair<int, std::string> RewardService::handle_json(const std::string& body) {
  auto error_body = [](const std::string& msg) {
    return nlohmann::json{{"error", msg}}.dump();
  };
  nlohmann::json doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded()) {
    rejected_total_.fetch_add(1, std::memory_order_relaxed);
    return {400, error_body("body is not valid JSON")};
  }
  RewardRequest request;
  try {
    request = request_from_json(doc);
  } catch (const MalformedRequest& e) {
    rejected_total_.fetch_add(1, std::memory_order_relaxed);
    return {400, error_body(e.what())};
  }
  try {
    return {200, to_json(handle_batch(request)).dump()};
  } catch (const MalformedRequest& e) {
    return {400, error_body(e.what())};
  }
}

RewardService::Counters RewardService::counters() const {
  return {batches_total_.load(), items_total_.load(), errors_total_.load(),
          rejected_total_.load()};
}

std::string RewardService::metrics_text() const {
  std::ostringstream out;
  const Counters c = counters();
  out << "batches_total " << c.batches_total << '\n';
  out << "items_total " << c.items_total << '\n';
  out << "errors_total " << c.errors_total << '\n';
  out << "rejected_batches_total " << c.rejected_batches_total << '\n';
  std::lock_guard lock(latency_mu_);
  for (const auto& [name, l] : latency_) {
    out << "verifier_latency_seconds_sum{verifier=\"" << name << "\"} "
        << l.seconds_sum << '\n';
    out << "verifier_latency_seconds_count{verifier=\"" << name << "\"} "
        << l.count << '\n';
  }
  return out.str();
}

struct RewardServer::Http {
  httplib::Server server;
};

RewardServer::RewardServer(ServerConfig config,
                           std::shared_ptr<VerifierRegistry> registry)
    : config_(std::move(config)),
      service_(std::move(registry), config_.workers, config_.max_batch_size),
      http_(std::make_unique<Http>()) {
  auto& svr = http_->server;
  svr.Post("/v1/verify", [this](const httplib::Request& req,
                                httplib::Response& res) {
    auto [status, body] = service_.handle_json(req.body);
    res.status = status;
    res.set_content(body, "application/json");
  });
  svr.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });
  svr.Get("/metrics", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(service_.metrics_text(), "text/plain; version=0.0.4");
  });
}

RewardServer::~RewardServer() { stop(); }

int RewardServer::start() {
  auto& svr = http_->server;
  if (config_.port == 0) {
    port_ = svr.bind_to_any_port(config_.host);
  } else {
    port_ = svr.bind_to_port(config_.host, config_.port) ? config_.port : -1;
  }
  if (port_ < 0) {
    throw std::runtime_error("cannot bind " + config_.host + ":" +
                             std::to_string(config_.port));
  }
  thread_ = std::thread([this] { http_->server.listen_after_bind(); });
  return port_;
}

void RewardServer::stop() {
  if (http_) http_->server.stop();
  if (thread_.joinable()) thread_.join();
}

void RewardServer::wait() {
  if (thread_.joinable()) thread_.join();
}

}  // namespace rewardkit
