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

#include "vbft/sim/explorer.hpp"

#include <array>
#include <map>
#include <set>
#include <sstream>

#include "vbft/errors.hpp"
#include "vbft/sim/simulator.hpp"

namespace vbft::sim {

namespace {

constexpr NodeId kByz = 1;       // primary of view 1
constexpr NodeId kNext = 2;      // primary of view 2
constexpr std::array<NodeId, 3> kHonest{0, 2, 3};
constexpr std::array<NodeId, 2> kFollowers{0, 3};

// Honest-to-honest vote links, in a fixed order.
std::vector<std::pair<NodeId, NodeId>> vote_links() {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (NodeId a : kHonest)
    for (NodeId b : kHonest)
      if (a != b) out.emplace_back(a, b);
  return out;
}

std::vector<NodeId> subset(unsigned mask) {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < kHonest.size(); ++i)
    if (mask & (1u << i)) out.push_back(kHonest[i]);
  return out;
}

std::string ids(const std::vector<NodeId>& v) {
  if (v.empty()) return "none";
  std::string s;
  for (NodeId id : v) s += (s.empty() ? "" : ",") + std::to_string(id);
  return s;
}

struct Digits {
  unsigned partition, votes_to, vote_holds, vc_holds, silent, label;
};

constexpr std::size_t kPartitions = 8, kVoteTargets = 8, kVoteHolds = 64, kVcHolds = 4,
                      kSilent = 2, kLabels = 2;

Digits split(std::size_t index) {
  Digits d{};
  d.partition = static_cast<unsigned>(index % kPartitions);
  index /= kPartitions;
  d.votes_to = static_cast<unsigned>(index % kVoteTargets);
  index /= kVoteTargets;
  d.vote_holds = static_cast<unsigned>(index % kVoteHolds);
  index /= kVoteHolds;
  d.vc_holds = static_cast<unsigned>(index % kVcHolds);
  index /= kVcHolds;
  d.silent = static_cast<unsigned>(index % kSilent);
  index /= kSilent;
  d.label = static_cast<unsigned>(index % kLabels);
  return d;
}

std::string describe(const Scenario& sc) {
  std::ostringstream os;
  os << "adv_partition=" << ids(*sc.adversary.partition)
     << " adv_vote_targets=" << ids(*sc.adversary.vote_targets)
     << " adv_silent_vc=" << (sc.adversary.silent_vc ? "on" : "off")
     << " adv_label=" << sc.adversary.label;
  for (const auto& h : sc.holds)
    os << " hold=" << *h.from << ":" << *h.to << ":" << h.kind << ":" << *h.view;
  return os.str();
}

}  // namespace

std::size_t equivocation_space_size() {
  return kPartitions * kVoteTargets * kVoteHolds * kVcHolds * kSilent * kLabels;
}

Scenario equivocation_schedule(std::size_t index, const ExploreOptions& opts) {
  if (index >= equivocation_space_size()) throw InputError("schedule index out of range");
  Digits d = split(index);
  Scenario sc;
  sc.name = "explore-" + std::to_string(index);
  sc.config = Config::for_nodes(4);
  sc.seed = 1;
  sc.gst = opts.gst;
  sc.delta_min = sc.delta_pre = sc.delta_post = 10;
  sc.byzantine = {kByz};
  sc.adversary.strategy = Strategy::equivocate;
  sc.adversary.view = 1;
  sc.adversary.partition = subset(d.partition);
  sc.adversary.vote_targets = subset(d.votes_to);
  sc.adversary.silent_vc = d.silent != 0;
  sc.adversary.label = d.label;
  auto links = vote_links();
  for (std::size_t i = 0; i < links.size(); ++i)
    if (d.vote_holds & (1u << i))
      sc.holds.push_back({links[i].first, links[i].second, "vote", View{1}});
  for (std::size_t i = 0; i < kFollowers.size(); ++i)
    if (d.vc_holds & (1u << i))
      sc.holds.push_back({kFollowers[i], kNext, "view_change", View{2}});
  sc.target_blocks = opts.target_blocks;
  sc.duration = opts.duration;
  sc.trace_messages = false;
  sc.check_liveness = false;
  return sc;
}

ExploreOutcome explore_equivocation(const ExploreOptions& opts,
                                    const std::function<void(std::size_t, std::size_t)>& progress) {
  ExploreOutcome out;
  const std::size_t total = equivocation_space_size();
  for (std::size_t i = 0; i < total; ++i) {
    Scenario sc = equivocation_schedule(i, opts);
    RunResult res = Simulator(sc).run();
    ++out.schedules;
    if (res.metrics.committed_blocks < opts.target_blocks) ++out.incomplete;
    if (!res.violations.empty()) {
      ++out.violating;
      if (out.violations.size() < 8)
        out.violations.push_back(describe(sc) + ": " + to_string(res.violations.front().kind) +
                                 " " + res.violations.front().detail);
    }

    std::map<Hash, std::set<std::int64_t>> committers;
    std::set<std::int64_t> blacklisters;
    bool weak_revoke = false;
    for (const auto& r : res.trace) {
      if (r.kind == RecordKind::commit && r.node != kByz) committers[r.hash].insert(r.node);
      if (r.kind == RecordKind::blacklist && r.node != kByz && r.a == kByz)
        blacklisters.insert(r.node);
      if (r.kind == RecordKind::revoke && r.node != kByz && committers[r.hash].size() <= 1)
        weak_revoke = true;
    }
    if (weak_revoke && blacklisters.size() == kHonest.size()) {
      if (out.revoked_and_blacklisted++ == 0) out.witness = describe(sc);
    }
    if (progress && (i + 1) % 1024 == 0) progress(i + 1, total);
  }
  return out;
}

}  // namespace vbft::sim
