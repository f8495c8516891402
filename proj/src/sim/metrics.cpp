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

#include "vbft/sim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "vbft/errors.hpp"

namespace vbft::sim {

namespace {

using Key = std::pair<Seq, Hash>;

// Final chain of every honest replica, seq -> hash.
std::map<std::int64_t, std::map<Seq, Hash>> final_chains(const Trace& trace,
                                                         const CheckContext& ctx) {
  std::map<std::int64_t, std::map<Seq, Hash>> chains;
  for (std::uint32_t i = 0; i < ctx.n; ++i)
    if (ctx.honest(i)) chains[i];
  for (const auto& r : trace) {
    if (!ctx.honest(r.node)) continue;
    if (r.kind == RecordKind::commit) chains[r.node][r.seq] = r.hash;
    else if (r.kind == RecordKind::revoke) {
      auto& c = chains[r.node];
      c.erase(c.lower_bound(r.seq), c.end());
    }
  }
  return chains;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  // nearest-rank
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

}  // namespace

std::uint64_t count_steps(const Trace& trace, Seq seq, const CheckContext& ctx) {
  auto chains = final_chains(trace, ctx);
  const Hash* target = nullptr;
  for (const auto& [id, c] : chains) {
    if (auto it = c.find(seq); it != c.end()) {
      target = &it->second;
      break;
    }
  }
  if (seq == 0 || target == nullptr) throw InputError("seq not committed in trace");
  for (const auto& r : trace)
    if (r.kind == RecordKind::commit && ctx.honest(r.node) && r.seq == seq && r.hash == *target)
      return static_cast<std::uint64_t>(r.a);
  throw InputError("seq not committed in trace");
}

Metrics compute_metrics(const Trace& trace, const CheckContext& ctx) {
  Metrics m;
  m.n = ctx.n;
  m.f = ctx.f;
  auto chains = final_chains(trace, ctx);

  std::uint64_t shortest = ~std::uint64_t{0};
  for (const auto& [id, c] : chains) {
    std::uint64_t h = c.empty() ? 0 : c.rbegin()->first;
    shortest = std::min(shortest, h);
  }
  if (chains.empty()) shortest = 0;
  m.committed_blocks = shortest;

  // Reference chain: the longest honest final chain.
  const std::map<Seq, Hash>* ref = nullptr;
  for (const auto& [id, c] : chains)
    if (!ref || c.size() > ref->size()) ref = &c;

  std::map<std::pair<View, Hash>, SimTime> proposed_at;
  std::map<Key, std::int64_t> proposer;
  std::map<Key, std::uint64_t> first_hops;
  std::vector<double> latencies;
  std::set<View> vc_targets;
  std::set<std::int64_t> culprits;
  double agg_sum = 0, auth_sum = 0;
  std::set<std::pair<std::int64_t, std::int64_t>> confirmed;

  for (const auto& r : trace) {
    switch (r.kind) {
      case RecordKind::propose:
        proposed_at.try_emplace({r.view, r.hash}, r.t);
        break;
      case RecordKind::commit: {
        if (!ctx.honest(r.node)) break;
        proposer[{r.seq, r.hash}] = r.b;
        first_hops.try_emplace({r.seq, r.hash}, static_cast<std::uint64_t>(r.a));
        auto it = proposed_at.find({r.view, r.hash});
        if (it != proposed_at.end()) latencies.push_back(static_cast<double>(r.t - it->second));
        break;
      }
      case RecordKind::revoke:
        if (ctx.honest(r.node)) ++m.revocations;
        break;
      case RecordKind::view_change:
        if (ctx.honest(r.node)) vc_targets.insert(r.view);
        break;
      case RecordKind::new_view:
        if (ctx.honest(r.node) && r.c != 0) {
          ++m.new_views;
          agg_sum += static_cast<double>(r.a);
          auth_sum += static_cast<double>(r.b);
        }
        break;
      case RecordKind::blacklist:
        if (ctx.honest(r.node)) culprits.insert(r.a);
        break;
      case RecordKind::confirm: confirmed.insert({r.a, r.b}); break;
      default: break;
    }
    m.end_time = r.t;
  }

  if (!latencies.empty()) {
    double sum = 0;
    for (double x : latencies) sum += x;
    m.mean_latency_ms = sum / static_cast<double>(latencies.size());
    m.p50_latency_ms = percentile(latencies, 50);
    m.p99_latency_ms = percentile(latencies, 99);
    m.min_latency_ms = *std::min_element(latencies.begin(), latencies.end());
    m.max_latency_ms = *std::max_element(latencies.begin(), latencies.end());
  }
  if (ref && !ref->empty()) {
    double steps = 0;
    std::size_t honest_blocks = 0, counted = 0;
    for (const auto& [seq, h] : *ref) {
      if (seq == 0) continue;
      if (auto it = first_hops.find({seq, h}); it != first_hops.end()) {
        steps += static_cast<double>(it->second);
        m.max_steps = std::max(m.max_steps, it->second);
        ++counted;
      }
      auto p = proposer.find({seq, h});
      if (p != proposer.end() && ctx.honest(p->second)) ++honest_blocks;
    }
    std::size_t blocks = ref->size() - (ref->contains(0) ? 1 : 0);
    if (counted) m.steps_per_commit = steps / static_cast<double>(counted);
    if (blocks) m.chain_quality = static_cast<double>(honest_blocks) / static_cast<double>(blocks);
  }
  if (m.new_views) {
    m.agg_verifies_per_nv = agg_sum / static_cast<double>(m.new_views);
    m.authenticators_per_nv = auth_sum / static_cast<double>(m.new_views);
  }
  m.view_changes = vc_targets.size();
  m.blacklisted = culprits.size();
  m.confirmed_requests = confirmed.size();
  return m;
}

std::string to_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["scenario"] = m.scenario;
  j["seed"] = m.seed;
  j["n"] = m.n;
  j["f"] = m.f;
  j["verify_mode"] = m.verify_mode;
  j["piggyback"] = m.piggyback;
  j["committed_blocks"] = m.committed_blocks;
  j["mean_latency_ms"] = m.mean_latency_ms;
  j["p50_latency_ms"] = m.p50_latency_ms;
  j["p99_latency_ms"] = m.p99_latency_ms;
  j["min_latency_ms"] = m.min_latency_ms;
  j["max_latency_ms"] = m.max_latency_ms;
  j["steps_per_commit"] = m.steps_per_commit;
  j["max_steps"] = m.max_steps;
  j["agg_verifies_per_nv"] = m.agg_verifies_per_nv;
  j["authenticators_per_nv"] = m.authenticators_per_nv;
  j["new_views"] = m.new_views;
  j["revocations"] = m.revocations;
  j["chain_quality"] = m.chain_quality;
  j["view_changes"] = m.view_changes;
  j["blacklisted"] = m.blacklisted;
  j["confirmed_requests"] = m.confirmed_requests;
  j["violations"] = m.violations;
  j["end_time"] = m.end_time;
  return j.dump(2) + "\n";
}

}  // namespace vbft::sim
