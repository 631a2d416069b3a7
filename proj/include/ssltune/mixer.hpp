#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "ssltune/digest.hpp"
#include "ssltune/error.hpp"
#include "ssltune/manifest.hpp"
#include "ssltune/percent.hpp"
#include "ssltune/rng.hpp"

namespace ssltune {

using TaskAllocation = std::array<std::uint64_t, 3>;  // rotation, colorization, correspondence

struct MixConfig {
  Percent rho;
  std::array<bool, 3> enabled{true, true, true};
  std::array<double, 3> weights{1.0, 1.0, 1.0};
  std::uint64_t seed = 0;

  void validate() const {
    double sum = 0.0;
    bool any = false;
    for (std::size_t t = 0; t < 3; ++t) {
      if (!(weights[t] >= 0.0) || !std::isfinite(weights[t]))
        throw ConfigError("task weights must be finite and >= 0");
      if (enabled[t]) {
        sum += weights[t];
        any = true;
      }
    }
    if (!rho.is_zero() && !any) throw ConfigError("rho > 0 needs at least one enabled task");
    if (any && !(sum > 0.0)) throw ConfigError("enabled task weights must sum to > 0");
  }
};

// floor(rho / 100 * n_inst), in exact integer arithmetic.
inline std::uint64_t ssl_count(const Percent& rho, std::uint64_t n_inst) {
  return rho.share_of(n_inst);
}

// Largest-remainder apportionment of `total` over the enabled tasks in
// proportion to their weights. Equal remainders go to the task earlier in
// rotation, colorization, correspondence order.
inline TaskAllocation allocate_tasks(std::uint64_t total, const MixConfig& cfg) {
  cfg.validate();
  TaskAllocation out{};
  if (total == 0) return out;
  double sum = 0.0;
  for (std::size_t t = 0; t < 3; ++t)
    if (cfg.enabled[t]) sum += cfg.weights[t];
  if (!(sum > 0.0)) throw ConfigError("no enabled task to allocate samples to");

  std::array<double, 3> remainder{-1.0, -1.0, -1.0};
  std::uint64_t assigned = 0;
  for (std::size_t t = 0; t < 3; ++t) {
    if (!cfg.enabled[t]) continue;
    const double share = double(total) * cfg.weights[t] / sum;
    const double base = std::floor(share);
    out[t] = std::uint64_t(base);
    remainder[t] = share - base;
    assigned += out[t];
  }
  // Floating error can push the floors one past the total; walk back.
  while (assigned > total) {
    std::size_t smallest = 3;
    for (std::size_t t = 0; t < 3; ++t)
      if (out[t] > 0 && (smallest == 3 || remainder[t] < remainder[smallest])) smallest = t;
    --out[smallest];
    remainder[smallest] += 1.0;
    --assigned;
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % 3) {
    if (!cfg.enabled[order[i]]) continue;
    ++out[order[i]];
    ++assigned;
  }
  return out;
}

// Takes the first allocation[t] samples of each task, in pool order.
inline std::vector<InstructionSample> select_ssl(const std::vector<InstructionSample>& pool,
                                                 const TaskAllocation& allocation) {
  TaskAllocation taken{};
  std::vector<InstructionSample> out;
  for (const auto& s : pool) {
    if (!is_ssl(s.task)) continue;
    const auto t = std::size_t(s.task);
    if (taken[t] < allocation[t]) {
      out.push_back(s);
      ++taken[t];
    }
  }
  for (std::size_t t = 0; t < 3; ++t)
    if (taken[t] < allocation[t])
      throw ConfigError("SSL pool has " + std::to_string(taken[t]) + " " +
                        std::string(to_string(TaskTag(t))) + " samples, " +
                        std::to_string(allocation[t]) + " needed");
  return out;
}

inline constexpr std::string_view kMixStreamTag = "mix";

// Union of both sample lists in a seeded uniform order. When `rho` is
// given it is recorded in the header and |d_ssl| must equal
// ssl_count(rho, |d_inst|).
inline DatasetManifest mix(const DatasetManifest& d_inst, const DatasetManifest& d_ssl,
                           std::uint64_t seed, std::optional<Percent> rho = std::nullopt,
                           Json config = Json::object()) {
  if (rho && d_ssl.samples.size() != ssl_count(*rho, d_inst.samples.size()))
    throw ConfigError("SSL set has " + std::to_string(d_ssl.samples.size()) +
                      " samples but rho=" + rho->to_string() + "% of " +
                      std::to_string(d_inst.samples.size()) + " requires " +
                      std::to_string(ssl_count(*rho, d_inst.samples.size())));
  std::unordered_set<std::string> ids;
  DatasetManifest out;
  out.samples.reserve(d_inst.samples.size() + d_ssl.samples.size());
  for (const auto* part : {&d_inst, &d_ssl})
    for (const auto& s : part->samples) {
      if (!ids.insert(s.id).second) throw DuplicateId("duplicate sample id '" + s.id + "'");
      out.samples.push_back(s);
    }
  RngStream rng = RngStream::derive(seed, kMixStreamTag, 0);
  rng.shuffle(std::span<InstructionSample>(out.samples));

  out.header.kind = "mixed";
  out.header.seed = seed;
  out.header.rho = rho;
  out.header.source_digests = Json{{"base", sha256_hex(dump_manifest(d_inst))},
                                   {"ssl", sha256_hex(dump_manifest(d_ssl))}};
  out.header.config = std::move(config);
  out.header.notes = Json{{"n_inst", d_inst.samples.size()}, {"n_ssl", d_ssl.samples.size()}};
  out.sync_counts();
  return out;
}

}  // namespace ssltune
