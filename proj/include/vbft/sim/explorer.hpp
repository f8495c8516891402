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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vbft/sim/scenario.hpp"
#include "vbft/sim/checker.hpp"

namespace vbft::sim {

// Bounded-exhaustive search around one equivocating primary at n = 4.
//
// The primary of view 1 is Byzantine and equivocates on seq 1. Every message
// of views 1 and 2 either arrives after the fixed link delay or is held until
// GST; the schedule space is the product of
//   - the honest replicas receiving b1 (the rest receive b2),
//   - the receivers of the Byzantine b1 vote,
//   - each honest-to-honest vote link in view 1, delivered or held,
//   - each non-primary honest view-change to the view-2 primary, delivered or held,
//   - whether the Byzantine node takes part in view changes,
//   - the salt of b2 (labels 0 and 1 put b2 after and before b1 in id order).
// Each schedule then runs past GST until every honest replica reaches
// `target_blocks`.
struct ExploreOptions {
  SimTime gst = 200;
  std::uint64_t target_blocks = 3;
  SimTime duration = 4000;
};

struct ExploreOutcome {
  std::size_t schedules = 0;
  std::size_t violating = 0;
  std::size_t incomplete = 0;  // honest replicas short of target_blocks at the end
  // Schedules where a block held by <= f honest replicas was revoked and its
  // proposer blacklisted by every honest replica.
  std::size_t revoked_and_blacklisted = 0;
  std::vector<std::string> violations;  // first few, "<schedule>: <detail>"
  std::string witness;                  // one revoke-and-blacklist schedule
};

// Scenario of schedule number `index` in [0, equivocation_space_size()).
Scenario equivocation_schedule(std::size_t index, const ExploreOptions& opts = {});
std::size_t equivocation_space_size();

// `progress(done, total)` is called every 1024 schedules when set.
ExploreOutcome explore_equivocation(
    const ExploreOptions& opts = {},
    const std::function<void(std::size_t, std::size_t)>& progress = {});

}  // namespace vbft::sim
