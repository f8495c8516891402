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
#include <map>
#include <optional>

#include "vbft/types.hpp"

namespace vbft {

// Epoch timer with exponential back-off and the f+1 view-change
// amplification rules. Owned by a replica; never runs on its own.
class Pacemaker {
 public:
  enum class Decision : std::uint8_t { none, amplify, join };

  struct Observation {
    Decision decision = Decision::none;
    View view = 0;
  };

  explicit Pacemaker(const Config& config);

  SimTime current_timeout() const { return current_timeout_; }
  std::uint32_t consecutive_failures() const { return failures_; }
  SimTime deadline() const { return deadline_; }
  std::uint64_t epoch() const { return epoch_; }

  // Starts a fresh epoch; returns its id. Older epochs become stale.
  std::uint64_t arm(SimTime now);

  // A block was committed: back-off resets to the base timeout.
  std::uint64_t on_commit(SimTime now);

  // True exactly once per expired epoch. Doubles the timeout.
  bool on_timer(std::uint64_t epoch, SimTime now);

  // Records the highest view each sender asked for. `current` is the view the
  // caller would otherwise act on (its view, or its pending view-change
  // target). With f+1 distinct senders above `current`, returns the smallest
  // view among the f+1 highest requests.
  Observation on_vc_observed(View vc_view, NodeId sender, View current);

  std::size_t tally(View view) const;

  // Records a view-change message this replica sent itself.
  void record_own(NodeId self, View view);

  // Distinct senders whose highest request is `view` or later.
  std::size_t support(View view) const;

 private:
  Config config_;
  SimTime current_timeout_;
  SimTime deadline_ = 0;
  std::uint32_t failures_ = 0;
  std::uint64_t epoch_ = 0;
  bool fired_ = false;
  std::map<NodeId, View> requested_;  // sender -> highest requested view
};

}  // namespace vbft
