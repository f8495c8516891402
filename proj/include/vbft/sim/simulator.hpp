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
#include <memory>
#include <queue>
#include <random>
#include <set>
#include <vector>

#include "vbft/replica.hpp"
#include "vbft/sim/checker.hpp"
#include "vbft/sim/metrics.hpp"
#include "vbft/sim/scenario.hpp"
#include "vbft/sim/trace.hpp"

namespace vbft::sim {

struct RunResult {
  Trace trace;
  Metrics metrics;
  std::vector<Violation> violations;
  Trace minimized;  // ddmin-reduced protocol records when violations exist
  std::vector<std::vector<Hash>> chains;  // final chain ids per replica
};

CheckContext context_of(const Scenario& sc);

class Simulator {
 public:
  explicit Simulator(Scenario sc);
  ~Simulator();

  RunResult run();

  const Replica& replica(NodeId id) const { return *nodes_.at(id).core; }

 private:
  enum class EventType : std::uint8_t { deliver, timer, client_tick, spam };

  struct Event {
    SimTime time = 0;
    std::uint64_t src = 0;
    std::uint64_t order = 0;
    EventType type = EventType::deliver;
    std::uint32_t target = 0;  // replica id, or client id for client events
    bool to_client = false;
    std::uint64_t from = 0;
    std::shared_ptr<const Message> msg;
    std::shared_ptr<const Reply> reply;
    std::uint32_t hops = 0;
    std::uint64_t epoch = 0;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      if (a.src != b.src) return a.src > b.src;
      return a.order > b.order;
    }
  };

  struct Node {
    std::unique_ptr<Replica> core;
    bool byzantine = false;
    bool crashed = false;
    // equivocate: (view, seq) -> id of b1
    std::map<std::pair<View, Seq>, Hash> forked;
  };

  struct Client {
    crypto::KeyPair key;
    std::uint32_t sent = 0;
    std::map<std::uint64_t, std::map<Hash, std::set<NodeId>>> replies;
    std::set<std::uint64_t> confirmed;
  };

  void push(Event e);
  SimTime uniform(SimTime lo, SimTime hi);
  void transmit(NodeId from, NodeId to, std::shared_ptr<const Message> msg, std::uint32_t hops);
  void transmit_from_client(ClientId c, NodeId to, std::shared_ptr<const Message> msg);
  void apply(NodeId i, Actions actions);
  void out_broadcast(NodeId i, std::shared_ptr<const Message> msg, std::uint32_t hops);
  void out_send(NodeId i, NodeId to, std::shared_ptr<const Message> msg, std::uint32_t hops);
  bool adversary_drops(NodeId i, NodeId to, const Message& m) const;
  std::vector<NodeId> side_a_of(NodeId i) const;
  void equivocate(NodeId i, const Block& b1, std::uint32_t hops);
  void handle(const Event& e);
  void client_tick(ClientId c);
  void client_reply(ClientId c, const Reply& r);
  void record(TraceRecord r);
  bool done() const;
  bool honest(NodeId i) const { return !nodes_[i].byzantine; }

  Scenario sc_;
  Committee committee_;
  QC genesis_;
  std::vector<Node> nodes_;
  std::vector<Client> clients_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::vector<std::uint64_t> counters_;
  std::mt19937_64 rng_;
  SimTime now_ = 0;
  Trace trace_;
  std::set<View> honest_vc_targets_;
  std::map<std::tuple<NodeId, View, Seq>, Hash> honest_votes_;
  std::set<std::pair<View, Hash>> proposed_;
};

RunResult run_scenario(const Scenario& sc);

}  // namespace vbft::sim
