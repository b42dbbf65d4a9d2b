// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "rewardkit/grpo.hpp"
#include "rewardkit/rng.hpp"

using namespace rewardkit;

namespace {

std::vector<double> random_rewards(Rng& rng, std::size_t n) {
  std::vector<double> r(n);
  for (auto& x : r) {
    x = bernoulli(rng, 0.3) ? static_cast<double>(uniform_index(rng, 3)) : uniform(rng, -2, 2);
  }
  return r;
}

// Independent restatement: two explicit passes, population variance.
std::vector<double> oracle_advantages(const std::vector<double>& r, double floor) {
  double sum = 0;
  for (double x : r) sum += x;
  const double mean = sum / static_cast<double>(r.size());
  double ss = 0;
  for (double x : r) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(r.size()));
  std::vector<double> out(r.size(), 0.0);
  if (sd < floor) return out;
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = (r[i] - mean) / sd;
  return out;
}

double brute_objective(const TokenBatch& batch, const ClipConfig& cfg) {
  double total = 0;
  std::size_t tokens = 0;
  for (const auto& resp : batch.responses) {
    for (double r : resp.ratios) {
      const double clipped = std::clamp(r, 1 - cfg.eps_low, 1 + cfg.eps_high);
      total += std::min(r * resp.advantage, clipped * resp.advantage);
      ++tokens;
    }
  }
  return total / static_cast<double>(tokens);
}

}  // namespace

TEST_CASE("group_advantages") {
  const std::vector<double> one_hit = {1, 0, 0, 0, 0, 0, 0, 0};
  const auto a = group_advantages(one_hit);
  CHECK(a[0] == doctest::Approx(std::sqrt(7.0)).epsilon(1e-12));
  for (std::size_t i = 1; i < 8; ++i) {
    CHECK(a[i] == doctest::Approx(-1.0 / std::sqrt(7.0)).epsilon(1e-12));
  }
  const std::vector<double> pair = {3, 1};
  CHECK(group_advantages(pair) == std::vector<double>{1.0, -1.0});
  const std::vector<double> flat(8, 0.7);
  CHECK(group_advantages(flat) == std::vector<double>(8, 0.0));
  const std::vector<double> single = {1.0};
  CHECK_THROWS_AS(group_advantages(single), std::invalid_argument);
}

TEST_CASE("group_advantages matches the two-pass oracle") {
  Rng rng = substream(40, 0);
  for (int i = 0; i < 10000; ++i) {
    const auto r = random_rewards(rng, 2 + uniform_index(rng, 15));
    const auto got = group_advantages(r);
    const auto want = oracle_advantages(r, 1e-8);
    for (std::size_t k = 0; k < r.size(); ++k) REQUIRE(std::abs(got[k] - want[k]) <= 1e-9);
  }
}

TEST_CASE("advantages are standardized, ordered and invariant to affine rescaling") {
  Rng rng = substream(41, 0);
  for (int i = 0; i < 3000; ++i) {
    auto r = random_rewards(rng, 2 + uniform_index(rng, 15));
    const auto a = group_advantages(r);
    const bool flat = std::all_of(a.begin(), a.end(), [](double x) { return x == 0.0; });
    double sum = 0, ss = 0;
    for (double x : a) sum += x;
    for (double x : a) ss += x * x;
    REQUIRE(std::abs(sum) <= 1e-9);
    if (!flat) REQUIRE(std::abs(ss / static_cast<double>(a.size()) - 1.0) <= 1e-9);
    for (std::size_t p = 0; p < r.size(); ++p) {
      for (std::size_t q = 0; q < r.size(); ++q) {
        if (r[p] > r[q] && !flat) REQUIRE(a[p] > a[q]);
      }
    }
    const double scale = uniform(rng, 0.1, 10), shift = uniform(rng, -5, 5);
    std::vector<double> moved(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) moved[k] = scale * r[k] + shift;
    const auto b = group_advantages(moved);
    for (std::size_t k = 0; k < r.size(); ++k) REQUIRE(std::abs(a[k] - b[k]) <= 1e-6);

    std::vector<std::size_t> perm(r.size());
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(perm, rng);
    std::vector<double> permuted(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) permuted[k] = r[perm[k]];
    const auto c = group_advantages(permuted);
    for (std::size_t k = 0; k < r.size(); ++k) REQUIRE(std::abs(c[k] - a[perm[k]]) <= 1e-12);
  }
}

TEST_CASE("clipped_token_objective") {
  const ClipConfig cfg;
  CHECK(clipped_token_objective(1.6, 1.0, cfg) == doctest::Approx(1.28).epsilon(1e-12));
  CHECK(clipped_token_objective(0.5, -1.0, cfg) == doctest::Approx(-0.8).epsilon(1e-12));
  CHECK(clipped_token_objective(1.0, 2.5, cfg) == 2.5);
  CHECK(clipped_token_objective(1.0, -2.5, cfg) == -2.5);
  CHECK(clipped_token_objective(0.5, 1.0, cfg) == 0.5);
  CHECK(clipped_token_objective(1.6, -1.0, cfg) == -1.6);
  CHECK(clipped_token_objective(1.3, 0.0, cfg) == 0.0);
}

TEST_CASE("ClipConfig::validate") {
  CHECK_NOTHROW(ClipConfig{}.validate());
  CHECK_THROWS_AS((ClipConfig{0.3, 0.2, 1e-8}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ClipConfig{0.0, 0.2, 1e-8}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ClipConfig{0.2, 1.0, 1e-8}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((ClipConfig{0.2, 0.28, -1.0}.validate()), std::invalid_argument);
}

TEST_CASE("objective is pessimistic and bounded by the clip range") {
  Rng rng = substream(42, 0);
  const ClipConfig cfg;
  for (int i = 0; i < 100000; ++i) {
    const double r = uniform(rng, 0.01, 3.0), a = uniform(rng, -4, 4);
    const double v = clipped_token_objective(r, a, cfg);
    REQUIRE(v <= r * a + 1e-15);
    const double clipped = std::clamp(r, 0.8, 1.28);
    REQUIRE(v <= clipped * a + 1e-15);
    if (a > 0) REQUIRE(v <= 1.28 * a + 1e-15);
    if (a < 0) REQUIRE(v <= 0.8 * a + 1e-15);
  }
}

TEST_CASE("batch_objective uses a single token-count normalization") {
  const ClipConfig cfg;
  TokenBatch batch;
  batch.responses.push_back({{1.0}, 2.0});
  batch.responses.push_back({{1.0, 1.0, 1.0}, -1.0});
  // (a + 3b) / 4 with a = 2, b = -1.
  CHECK(batch_objective(batch, cfg) == doctest::Approx((2.0 + 3 * -1.0) / 4.0));
  CHECK(batch_loss(batch, cfg) == -batch_objective(batch, cfg));

  TokenBatch empty_resp;
  empty_resp.responses.push_back({{}, 1.0});
  CHECK_THROWS_AS(batch_objective(empty_resp, cfg), std::invalid_argument);
  TokenBatch bad_ratio;
  bad_ratio.responses.push_back({{0.0}, 1.0});
  CHECK_THROWS_AS(batch_objective(bad_ratio, cfg), std::invalid_argument);
}

TEST_CASE("batch_objective matches the double-loop oracle and ignores order") {
  Rng rng = substream(43, 0);
  const ClipConfig cfg;
  for (int i = 0; i < 2000; ++i) {
    TokenBatch batch;
    for (std::size_t n = 1 + uniform_index(rng, 6); n > 0; --n) {
      ResponseTokens resp;
      resp.advantage = uniform(rng, -3, 3);
      for (std::size_t t = 1 + uniform_index(rng, 20); t > 0; --t) {
        resp.ratios.push_back(std::exp(uniform(rng, -0.5, 0.5)));
      }
      batch.responses.push_back(resp);
    }
    const double v = batch_objective(batch, cfg);
    REQUIRE(std::abs(v - brute_objective(batch, cfg)) <= 1e-12);
    shuffle(batch.responses, rng);
    REQUIRE(std::abs(batch_objective(batch, cfg) - v) <= 1e-12);
  }
}

TEST_CASE("gradient agrees with central differences away from the clip kinks") {
  Rng rng = substream(44, 0);
  const ClipConfig cfg;
  const double h = 1e-5;
  int checked = 0;
  while (checked < 1000) {
    const double r = uniform(rng, 0.5, 1.6), a = uniform(rng, -3, 3);
    if (std::abs(r - 0.8) < 10 * h || std::abs(r - 1.28) < 10 * h) continue;
    const double fd = (clipped_token_objective(r + h, a, cfg) -
                       clipped_token_objective(r - h, a, cfg)) / (2 * h);
    REQUIRE(std::abs(objective_grad_wrt_ratio(r, a, cfg) - fd) <= 1e-6);
    ++checked;
  }
  CHECK(objective_grad_wrt_ratio(1.5, 1.0, cfg) == 0.0);
  CHECK(objective_grad_wrt_ratio(1.5, -1.0, cfg) == -1.0);
  CHECK(objective_grad_wrt_ratio(0.5, -1.0, cfg) == 0.0);
  CHECK(objective_grad_wrt_ratio(0.5, 1.0, cfg) == 1.0);
}
