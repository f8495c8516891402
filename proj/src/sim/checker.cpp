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

#include "vbft/sim/checker.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "vbft/crypto.hpp"

namespace vbft::sim {

const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::agreement: return "agreement";
    case ViolationKind::r_safety: return "r_safety";
    case ViolationKind::honest_revoked: return "honest_revoked";
    case ViolationKind::double_spend: return "double_spend";
    case ViolationKind::duplicate_request: return "duplicate_request";
    case ViolationKind::vote_uniqueness: return "vote_uniqueness";
    case ViolationKind::liveness: return "liveness";
    case ViolationKind::eventual_commit: return "eventual_commit";
  }
  return "?";
}

bool CheckContext::honest(std::int64_t node) const {
  if (node < 0 || node >= static_cast<std::int64_t>(n)) return false;
  return std::find(byzantine.begin(), byzantine.end(), static_cast<NodeId>(node)) ==
         byzantine.end();
}

namespace {

using Key = std::pair<Seq, Hash>;
using Request = std::pair<std::int64_t, std::int64_t>;

struct NodeView {
  std::map<Seq, Hash> chain;
  std::map<Seq, std::set<Request>> requests;
};

std::string hex(const Hash& h) { return crypto::short_hex(h); }

}  // namespace

std::vector<Violation> check_invariants(const Trace& trace, const CheckContext& ctx) {
  std::vector<Violation> out;
  std::map<std::int64_t, NodeView> nodes;
  std::map<Key, std::set<std::int64_t>> committed_by;
  std::map<Key, std::int64_t> proposer_of;
  std::map<std::tuple<std::int64_t, View, Seq>, Hash> votes;
  std::vector<const TraceRecord*> revokes;
  std::vector<const TraceRecord*> confirms;
  std::vector<const TraceRecord*> honest_commits;

  for (std::uint32_t i = 0; i < ctx.n; ++i)
    if (ctx.honest(i)) nodes[i];

  for (const auto& r : trace) {
    switch (r.kind) {
      case RecordKind::commit: {
        if (!ctx.honest(r.node)) break;
        auto& nv = nodes[r.node];
        nv.chain[r.seq] = r.hash;
        committed_by[{r.seq, r.hash}].insert(r.node);
        proposer_of[{r.seq, r.hash}] = r.b;
        honest_commits.push_back(&r);
        break;
      }
      case RecordKind::revoke: {
        if (!ctx.honest(r.node)) break;
        auto& nv = nodes[r.node];
        nv.chain.erase(nv.chain.lower_bound(r.seq), nv.chain.end());
        nv.requests.erase(nv.requests.lower_bound(r.seq), nv.requests.end());
        revokes.push_back(&r);
        break;
      }
      case RecordKind::reply: {
        if (!ctx.honest(r.node)) break;
        nodes[r.node].requests[r.seq].insert({r.a, r.b});
        break;
      }
      case RecordKind::vote: {
        if (!ctx.honest(r.node)) break;
        auto [it, fresh] = votes.emplace(std::make_tuple(r.node, r.view, r.seq), r.hash);
        if (!fresh && it->second != r.hash)
          out.push_back({ViolationKind::vote_uniqueness, r.node, r.view, r.seq,
                         "second vote " + hex(r.hash) + " after " + hex(it->second)});
        break;
      }
      case RecordKind::confirm: confirms.push_back(&r); break;
      default: break;
    }
  }

  // Agreement over final chains.
  std::map<Seq, std::pair<std::int64_t, Hash>> reference;
  for (const auto& [id, nv] : nodes) {
    for (const auto& [seq, h] : nv.chain) {
      auto [it, fresh] = reference.emplace(seq, std::make_pair(id, h));
      if (!fresh && it->second.second != h)
        out.push_back({ViolationKind::agreement, id, 0, seq,
                       "node " + std::to_string(id) + " has " + hex(h) + ", node " +
                           std::to_string(it->second.first) + " has " +
                           hex(it->second.second)});
    }
  }

  for (const TraceRecord* r : revokes) {
    Key k{r->seq, r->hash};
    auto it = committed_by.find(k);
    std::size_t count = it == committed_by.end() ? 0 : it->second.size();
    if (count >= ctx.f + 1)
      out.push_back({ViolationKind::r_safety, r->node, r->view, r->seq,
                     "revoked " + hex(r->hash) + " committed by " + std::to_string(count) +
                         " honest replicas"});
    if (ctx.honest(r->b))
      out.push_back({ViolationKind::honest_revoked, r->node, r->view, r->seq,
                     "revoked " + hex(r->hash) + " proposed by honest node " +
                         std::to_string(r->b)});
  }

  for (const TraceRecord* c : confirms) {
    for (const auto& [id, nv] : nodes) {
      auto it = nv.chain.find(c->seq);
      if (it != nv.chain.end() && it->second != c->hash)
        out.push_back({ViolationKind::double_spend, id, 0, c->seq,
                       "client " + std::to_string(c->a) + " confirmed ts " +
                           std::to_string(c->b) + " in " + hex(c->hash) + ", node " +
                           std::to_string(id) + " holds " + hex(it->second)});
    }
    for (const TraceRecord* r : revokes) {
      if (r->seq == c->seq && r->hash == c->hash)
        out.push_back({ViolationKind::double_spend, r->node, 0, c->seq,
                       "confirmed block " + hex(c->hash) + " revoked"});
    }
  }

  for (const auto& [id, nv] : nodes) {
    std::map<Request, Seq> where;
    for (const auto& [seq, reqs] : nv.requests) {
      for (const auto& q : reqs) {
        auto [it, fresh] = where.emplace(q, seq);
        if (!fresh && it->second != seq)
          out.push_back({ViolationKind::duplicate_request, id, 0, seq,
                         "request (" + std::to_string(q.first) + "," + std::to_string(q.second) +
                             ") also at seq " + std::to_string(it->second)});
      }
    }
  }

  if (ctx.check_liveness) {
    // View changes between consecutive new heights, counted from the first new
    // height reached after GST. A view counts once f+1 honest replicas asked
    // for it; fewer requests are never acted on by anyone.
    Seq top = 0;
    bool armed = false;
    std::map<View, std::set<std::int64_t>> asked;
    // At most f+1 views are abandoned between heights. Views led by a
    // Byzantine primary beyond the first f are not charged: with seeded-random
    // selection such streaks are merely unlikely.
    auto flush = [&](SimTime t, Seq at) {
      std::size_t changes = 0, byzantine_led = 0;
      View last = 0;
      for (const auto& [v, who] : asked) {
        if (who.size() < ctx.f + 1) continue;
        ++changes;
        last = v;
        // The abandoned view is the one before the requested target.
        if (ctx.primary && v > 1 && !ctx.honest(ctx.primary(v - 1))) ++byzantine_led;
      }
      std::size_t charged = changes - byzantine_led + std::min<std::size_t>(byzantine_led, ctx.f);
      if (armed && charged > ctx.f + 1)
        out.push_back({ViolationKind::liveness, -1, last, at,
                       std::to_string(changes) + " view changes (" +
                           std::to_string(byzantine_led) + " Byzantine-led) before t=" +
                           std::to_string(t)});
      asked.clear();
    };
    for (const auto& r : trace) {
      if (r.kind == RecordKind::commit && ctx.honest(r.node) && r.seq > top) {
        top = r.seq;
        if (r.t >= ctx.gst) {
          flush(r.t, r.seq);
          armed = true;
        }
      } else if (r.kind == RecordKind::view_change && ctx.honest(r.node) && armed) {
        asked[r.view].insert(r.node);
      }
    }
    flush(trace.empty() ? 0 : trace.back().t, top + 1);
  }

  if (ctx.check_eventual && !nodes.empty()) {
    Seq min_height = ~Seq{0};
    for (const auto& [id, nv] : nodes)
      min_height = std::min<Seq>(min_height, nv.chain.empty() ? 0 : nv.chain.rbegin()->first);
    for (const TraceRecord* r : honest_commits) {
      if (r->seq > min_height) continue;
      if (ctx.primary && !ctx.honest(ctx.primary(r->view))) continue;
      for (const auto& [id, nv] : nodes) {
        auto it = nv.chain.find(r->seq);
        if (it == nv.chain.end() || it->second != r->hash) {
          out.push_back({ViolationKind::eventual_commit, id, r->view, r->seq,
                         "node " + std::to_string(r->node) + " committed " + hex(r->hash) +
                             " but node " + std::to_string(id) + " ends without it"});
          break;
        }
      }
    }
  }
  return out;
}

Trace shrink(const Trace& trace, const std::function<bool(const Trace&)>& failing,
             std::size_t max_tests) {
  Trace cur = trace;
  std::size_t granularity = 2;
  std::size_t tests = 0;
  auto pick = [&](std::size_t lo, std::size_t hi, bool complement) {
    Trace t;
    for (std::size_t i = 0; i < cur.size(); ++i)
      if ((i >= lo && i < hi) != complement) t.push_back(cur[i]);
    return t;
  };
  while (cur.size() >= 2 && tests < max_tests) {
    std::size_t chunk = (cur.size() + granularity - 1) / granularity;
    bool reduced = false;
    for (std::size_t lo = 0; lo < cur.size() && tests < max_tests; lo += chunk) {
      Trace subset = pick(lo, std::min(lo + chunk, cur.size()), false);
      ++tests;
      if (failing(subset)) {
        cur = std::move(subset);
        granularity = 2;
        reduced = true;
        break;
      }
    }
    if (reduced) continue;
    for (std::size_t lo = 0; lo < cur.size() && tests < max_tests; lo += chunk) {
      Trace rest = pick(lo, std::min(lo + chunk, cur.size()), true);
      ++tests;
      if (!rest.empty() && failing(rest)) {
        cur = std::move(rest);
        granularity = std::max<std::size_t>(granularity - 1, 2);
        reduced = true;
        break;
      }
    }
    if (reduced) continue;
    if (granularity >= cur.size()) break;
    granularity = std::min(cur.size(), granularity * 2);
  }
  return cur;
}

}  // namespace vbft::sim
