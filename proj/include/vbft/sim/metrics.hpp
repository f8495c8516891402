/**
 * Copyright 2026 The VBFT Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vbft/sim/checker.hpp"
#include "vbft/sim/trace.hpp"

namespace vbft::sim {

struct Metrics {
  std::string scenario;
  std::uint64_t seed = 0;
  std::uint32_t n = 0;
  std::uint32_t f = 0;
  std::string verify_mode;
  bool piggyback = true;

  std::uint64_t committed_blocks = 0;  // shortest honest final chain, genesis excluded
  double mean_latency_ms = 0;
  double p50_latency_ms = 0;
  double p99_latency_ms = 0;
  double min_latency_ms = 0;
  double max_latency_ms = 0;
  double steps_per_commit = 0;
  std::uint64_t max_steps = 0;
  double agg_verifies_per_nv = 0;
  double authenticators_per_nv = 0;
  std::uint64_t new_views = 0;
  std::uint64_t revocations = 0;
  double chain_quality = 1.0;
  std::uint64_t view_changes = 0;
  std::uint64_t blacklisted = 0;
  std::uint64_t confirmed_requests = 0;
  std::uint64_t violations = 0;
  SimTime end_time = 0;
};

Metrics compute_metrics(const Trace& trace, const CheckContext& ctx);

// Hops from proposal broadcast to the first honest commit of the block that
// ends up at `seq`. Throws InputError when no honest replica holds `seq`.
std::uint64_t count_steps(const Trace& trace, Seq seq, const CheckContext& ctx);

std::string to_json(const Metrics& m);

}  // namespace vbft::sim
