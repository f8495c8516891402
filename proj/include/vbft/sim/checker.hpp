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
#include <functional>
#include <string>
#include <vector>

#include "vbft/sim/trace.hpp"
#include "vbft/types.hpp"

namespace vbft::sim {

enum class ViolationKind : std::uint8_t {
  agreement,         // two honest final chains differ at one height
  r_safety,          // a block committed by >= f+1 honest replicas was revoked
  honest_revoked,    // a block proposed by an honest primary was revoked
  double_spend,      // a confirmed request disagrees with an honest chain
  duplicate_request, // one request committed twice in one honest chain
  vote_uniqueness,   // an honest replica voted twice in one (view, seq)
  liveness,          // more than f+1 view changes between post-GST commits
  eventual_commit,   // a block committed by one honest replica is missing at another
};

const char* to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::int64_t node = -1;
  View view = 0;
  Seq seq = 0;
  std::string detail;
};

struct CheckContext {
  std::uint32_t n = 4;
  std::uint32_t f = 1;
  std::vector<NodeId> byzantine;
  SimTime gst = 0;
  bool check_liveness = true;
  // Every honest replica should end with every block any honest replica
  // committed; only meaningful when the run was allowed to settle.
  bool check_eventual = false;
  // Primary of a view. When set, blocks certified in a Byzantine primary's
  // view are exempt from the eventual-commit check: those may be revoked
  // while held by at most f honest replicas.
  std::function<NodeId(View)> primary;

  bool honest(std::int64_t node) const;
};

std::vector<Violation> check_invariants(const Trace& trace, const CheckContext& ctx);

// Delta-debugging (ddmin) over the records; returns a 1-minimal subsequence
// for which `failing` still holds. `failing(trace)` must hold on input.
Trace shrink(const Trace& trace, const std::function<bool(const Trace&)>& failing,
             std::size_t max_tests = 2000);

}  // namespace vbft::sim
