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
#include <optional>
#include <string>
#include <vector>

#include "vbft/replica.hpp"
#include "vbft/types.hpp"

namespace vbft::sim {

enum class Strategy : std::uint8_t { none, crash, mute, equivocate, delay, vc_spam };

const char* to_string(Strategy s);

// View a message belongs to; 0 for view-less messages.
View message_view(const Message& m);

// Messages matching every set field are held back until GST.
struct HoldRule {
  std::optional<NodeId> from;
  std::optional<NodeId> to;
  std::string kind;  // message_kind() name; empty matches all
  std::optional<View> view;

  bool matches(NodeId src, NodeId dst, const Message& m) const;
};

struct AdversarySpec {
  Strategy strategy = Strategy::none;
  View view = 0;       // crash: from this view on; equivocate: 0 = every own view
  View view_to = 0;    // mute: inclusive upper end (0 = open)
  // equivocate: receivers of b1 besides itself (unset: even ids)
  std::optional<std::vector<NodeId>> partition;
  // equivocate: receivers of its own b1 vote (unset: partition + self)
  std::optional<std::vector<NodeId>> vote_targets;
  bool silent_vc = false;            // equivocate: never send view-change messages
  std::vector<NodeId> targets;       // mute / delay: affected receivers (empty = all)
  SimTime amount = 0;                // delay
  std::uint32_t count = 0;           // vc_spam: number of spamming nodes
  std::uint64_t label = 0;           // equivocate: salt for the b2 payload
};

struct Scenario {
  std::string name = "scenario";
  Config config = Config::for_nodes(4);
  std::uint64_t seed = 1;
  std::uint64_t key_seed = 7;

  SimTime gst = 0;
  SimTime delta_min = 10;
  SimTime delta_pre = 10;
  SimTime delta_post = 10;
  double drop_pre = 0.0;  // chance a pre-GST message is held until GST

  std::vector<NodeId> byzantine;
  AdversarySpec adversary;
  std::vector<HoldRule> holds;

  std::uint32_t clients = 0;
  SimTime request_interval = 10;
  std::uint32_t requests_per_client = 0;  // 0 = until the run ends

  SimTime duration = 10'000;
  Seq target_blocks = 0;  // stop once every honest replica has this many blocks
  std::uint32_t min_view_changes = 0;  // and at least this many view changes happened

  ReplicaOptions options;
  bool trace_messages = true;
  bool check_liveness = true;
  bool self_test_corrupt = false;

  // Throws ConfigError.
  void validate() const;
  bool is_byzantine(NodeId id) const;
};

// Flat `key = value` text; `#` starts a comment. Unknown keys are errors.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

// Applies one key; shared by the scenario parser and suite overrides.
void apply_key(Scenario& sc, const std::string& key, const std::string& value);

}  // namespace vbft::sim
