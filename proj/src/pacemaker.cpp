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

#include "vbft/pacemaker.hpp"

#include <algorithm>
#include <vector>

namespace vbft {

Pacemaker::Pacemaker(const Config& config)
    : config_(config), current_timeout_(config.timeout_base) {}

std::uint64_t Pacemaker::arm(SimTime now) {
  deadline_ = now + current_timeout_;
  fired_ = false;
  return ++epoch_;
}

std::uint64_t Pacemaker::on_commit(SimTime now) {
  failures_ = 0;
  current_timeout_ = config_.timeout_base;
  return arm(now);
}

bool Pacemaker::on_timer(std::uint64_t epoch, SimTime now) {
  if (epoch != epoch_ || fired_ || now < deadline_) return false;
  fired_ = true;
  ++failures_;
  // cap the shift; 2^32 base timeouts is far beyond any simulated horizon
  current_timeout_ = config_.timeout_base << std::min<std::uint32_t>(failures_, 32);
  return true;
}

Pacemaker::Observation Pacemaker::on_vc_observed(View vc_view, NodeId sender, View current) {
  auto& slot = requested_[sender];
  slot = std::max(slot, vc_view);

  std::vector<View> above;
  for (const auto& [node, view] : requested_) {
    if (view > current) above.push_back(view);
  }
  if (above.size() < config_.f + 1) return {};
  std::sort(above.begin(), above.end(), std::greater<>());
  View target = above[config_.f];
  bool single = std::all_of(above.begin(), above.begin() + config_.f + 1,
                            [&](View v) { return v == target; });
  return {single ? Decision::amplify : Decision::join, target};
}

std::size_t Pacemaker::tally(View view) const {
  return static_cast<std::size_t>(std::count_if(requested_.begin(), requested_.end(),
                                                [&](const auto& kv) { return kv.second == view; }));
}

void Pacemaker::record_own(NodeId self, View view) {
  auto& slot = requested_[self];
  slot = std::max(slot, view);
}

std::size_t Pacemaker::support(View view) const {
  return static_cast<std::size_t>(std::count_if(requested_.begin(), requested_.end(),
                                                [&](const auto& kv) { return kv.second >= view; }));
}

}  // namespace vbft
