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

#include "vbft/sim/simulator.hpp"

#include <algorithm>

#include "vbft/errors.hpp"

namespace vbft::sim {

CheckContext context_of(const Scenario& sc) {
  CheckContext ctx;
  ctx.n = sc.config.n;
  ctx.f = sc.config.f;
  ctx.byzantine = sc.byzantine;
  ctx.gst = sc.gst;
  ctx.check_liveness = sc.check_liveness;
  ctx.check_eventual = true;
  ctx.primary = [config = sc.config](View v) { return primary_of(v, config); };
  return ctx;
}

Simulator::Simulator(Scenario sc) : sc_(std::move(sc)), rng_(sc_.seed) {
  sc_.validate();
  committee_ = Committee::generate(sc_.config, sc_.key_seed, sc_.clients);
  genesis_ = genesis_qc(sc_.config, sc_.key_seed);
  nodes_.resize(sc_.config.n);
  for (NodeId i = 0; i < sc_.config.n; ++i) {
    nodes_[i].core = std::make_unique<Replica>(i, replica_key(sc_.key_seed, i), committee_,
                                               genesis_, sc_.options);
    nodes_[i].byzantine = sc_.is_byzantine(i);
  }
  clients_.resize(sc_.clients);
  for (ClientId c = 0; c < sc_.clients; ++c) clients_[c].key = client_key(sc_.key_seed, c);
  counters_.assign(sc_.config.n + sc_.clients + 1, 0);
}

Simulator::~Simulator() = default;

void Simulator::push(Event e) {
  e.order = counters_[e.src]++;
  queue_.push(std::move(e));
}

SimTime Simulator::uniform(SimTime lo, SimTime hi) {
  if (hi <= lo) return lo;
  return lo + rng_() % (hi - lo + 1);
}

void Simulator::record(TraceRecord r) {
  r.t = now_;
  trace_.push_back(std::move(r));
}

// ---- network --------------------------------------------------------------------

void Simulator::transmit(NodeId from, NodeId to, std::shared_ptr<const Message> msg,
                         std::uint32_t hops) {
  SimTime at = now_;
  bool held = false;
  if (from != to) {
    if (now_ < sc_.gst) {
      bool hold = std::any_of(sc_.holds.begin(), sc_.holds.end(),
                              [&](const HoldRule& h) { return h.matches(from, to, *msg); });
      if (!hold && sc_.drop_pre > 0.0) {
        double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        hold = u < sc_.drop_pre;
      }
      if (hold) {
        held = true;
        at = sc_.gst + uniform(sc_.delta_min, sc_.delta_post);
      } else {
        at = std::min(now_ + uniform(sc_.delta_min, sc_.delta_pre), sc_.gst + sc_.delta_post);
      }
    } else {
      at = now_ + uniform(sc_.delta_min, sc_.delta_post);
    }
    const auto& adv = sc_.adversary;
    if (nodes_[from].byzantine && adv.strategy == Strategy::delay &&
        (adv.targets.empty() ||
         std::find(adv.targets.begin(), adv.targets.end(), to) != adv.targets.end())) {
      at = now_ < sc_.gst ? at + adv.amount : std::max(at, now_ + sc_.delta_post);
    }
  }
  if (sc_.trace_messages) {
    TraceRecord r;
    r.kind = held ? RecordKind::hold : RecordKind::send;
    r.node = from;
    r.view = message_view(*msg);
    r.a = to;
    r.b = static_cast<std::int64_t>(at);
    r.c = hops;
    r.note = message_kind(*msg);
    record(std::move(r));
  }
  Event e;
  e.time = at;
  e.src = from;
  e.type = EventType::deliver;
  e.target = to;
  e.from = from;
  e.msg = std::move(msg);
  e.hops = hops;
  push(std::move(e));
}

void Simulator::transmit_from_client(ClientId c, NodeId to, std::shared_ptr<const Message> msg) {
  SimTime at = now_ < sc_.gst
                   ? std::min(now_ + uniform(sc_.delta_min, sc_.delta_pre), sc_.gst + sc_.delta_post)
                   : now_ + uniform(sc_.delta_min, sc_.delta_post);
  Event e;
  e.time = at;
  e.src = sc_.config.n + c;
  e.type = EventType::deliver;
  e.target = to;
  e.from = sc_.config.n + c;
  e.msg = std::move(msg);
  push(std::move(e));
}

// ---- adversary ------------------------------------------------------------------

bool Simulator::adversary_drops(NodeId i, NodeId to, const Message& m) const {
  (void)m;
  const Node& node = nodes_[i];
  if (!node.byzantine || to == i) return false;
  const auto& adv = sc_.adversary;
  if (adv.strategy != Strategy::mute) return false;
  View v = std::max(node.core->cur_view(), node.core->vc_target());
  if (v < adv.view || (adv.view_to != 0 && v > adv.view_to)) return false;
  return adv.targets.empty() ||
         std::find(adv.targets.begin(), adv.targets.end(), to) != adv.targets.end();
}

std::vector<NodeId> Simulator::side_a_of(NodeId i) const {
  const auto& adv = sc_.adversary;
  if (adv.partition) return *adv.partition;
  std::vector<NodeId> side;
  for (NodeId j = 0; j < sc_.config.n; ++j)
    if (j != i && j % 2 == 0) side.push_back(j);
  return side;
}

void Simulator::equivocate(NodeId i, const Block& b1, std::uint32_t hops) {
  const auto& adv = sc_.adversary;
  std::vector<ClientRequest> cmds = b1.commands;
  ClientRequest marker;
  marker.client = 0;
  marker.timestamp = ~std::uint64_t{0} - b1.header.view;
  marker.op = "fork:" + std::to_string(adv.label) + ":" + std::to_string(b1.header.view);
  cmds.push_back(marker);
  const Replica& core = *nodes_[i].core;
  Block b2 = create_prepare_msg(b1.header.view, b1.header.seq, b1.header.parent_hash,
                                b1.qc_parent, b1.qc_nr, std::move(cmds), core.keys());
  b2.qc_ready = b1.qc_ready;
  nodes_[i].forked[{b1.header.view, b1.header.seq}] = b1.id();

  std::vector<NodeId> side_a = side_a_of(i);
  auto p1 = std::make_shared<const Message>(b1);
  auto p2 = std::make_shared<const Message>(b2);
  for (const Block* b : std::initializer_list<const Block*>{&b1, &b2}) {
    TraceRecord r;
    r.kind = RecordKind::propose;
    r.node = i;
    r.view = b->header.view;
    r.seq = b->header.seq;
    r.hash = b->id();
    record(std::move(r));
    proposed_.insert({b->header.view, b->id()});
  }
  for (NodeId j = 0; j < sc_.config.n; ++j) {
    bool first = j == i || std::find(side_a.begin(), side_a.end(), j) != side_a.end();
    transmit(i, j, first ? p1 : p2, hops);
  }
}

// ---- outputs --------------------------------------------------------------------

void Simulator::out_send(NodeId i, NodeId to, std::shared_ptr<const Message> msg,
                         std::uint32_t hops) {
  if (adversary_drops(i, to, *msg)) return;
  transmit(i, to, std::move(msg), hops);
}

void Simulator::out_broadcast(NodeId i, std::shared_ptr<const Message> msg, std::uint32_t hops) {
  Node& node = nodes_[i];
  const auto& adv = sc_.adversary;
  bool equivocating = node.byzantine && adv.strategy == Strategy::equivocate;

  if (const auto* b = std::get_if<Block>(msg.get()); b && b->header.proposer == i) {
    if (equivocating && (adv.view == 0 || adv.view == b->header.view)) {
      equivocate(i, *b, hops);
      return;
    }
    TraceRecord r;
    r.kind = RecordKind::propose;
    r.node = i;
    r.view = b->header.view;
    r.seq = b->header.seq;
    r.hash = b->id();
    bool again = std::any_of(proposed_.begin(), proposed_.end(),
                             [&](const auto& p) { return p.second == r.hash; });
    r.a = again ? 1 : 0;
    r.c = b->qc_nr ? 1 : 0;
    proposed_.insert({r.view, r.hash});
    record(std::move(r));
  }
  if (const auto* v = std::get_if<Vote>(msg.get()); v && v->voter == i) {
    TraceRecord r;
    r.kind = RecordKind::vote;
    r.node = i;
    r.view = v->view;
    r.seq = v->seq;
    r.hash = v->block_hash;
    record(std::move(r));
    if (!node.byzantine) {
      auto [it, fresh] = honest_votes_.emplace(std::make_tuple(i, v->view, v->seq), v->block_hash);
      if (!fresh && it->second != v->block_hash)
        record(TraceRecord{0, RecordKind::audit, i, v->view, v->seq, v->block_hash, 0, 0, 0,
                           "honest replica voted twice"});
    }
    if (equivocating) {
      auto f = node.forked.find({v->view, v->seq});
      if (f != node.forked.end() && f->second == v->block_hash) {
        std::vector<NodeId> targets;
        if (adv.vote_targets) {
          targets = *adv.vote_targets;
        } else {
          targets = side_a_of(i);
          targets.push_back(i);
        }
        for (NodeId j = 0; j < sc_.config.n; ++j)
          if (std::find(targets.begin(), targets.end(), j) != targets.end())
            out_send(i, j, msg, hops);
        return;
      }
    }
  }
  if (equivocating && adv.silent_vc && std::holds_alternative<ViewChangeMsg>(*msg)) return;
  for (NodeId j = 0; j < sc_.config.n; ++j) out_send(i, j, msg, hops);
}

void Simulator::apply(NodeId i, Actions actions) {
  Node& node = nodes_[i];
  if (node.byzantine && sc_.adversary.strategy == Strategy::crash && !node.crashed &&
      std::max(node.core->cur_view(), node.core->vc_target()) >= sc_.adversary.view)
    node.crashed = true;
  if (node.crashed) return;
  for (auto& act : actions) {
    std::visit(
        [&](auto& a) {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, action::Broadcast>) {
            out_broadcast(i, std::make_shared<const Message>(std::move(a.msg)), a.hops);
          } else if constexpr (std::is_same_v<T, action::Send>) {
            out_send(i, a.to, std::make_shared<const Message>(std::move(a.msg)), a.hops);
          } else if constexpr (std::is_same_v<T, action::SendReply>) {
            TraceRecord r;
            r.kind = RecordKind::reply;
            r.node = i;
            r.view = a.reply.view;
            r.seq = a.reply.seq;
            r.hash = a.reply.block_hash;
            r.a = a.reply.client;
            r.b = static_cast<std::int64_t>(a.reply.timestamp);
            record(std::move(r));
            if (a.reply.client < clients_.size()) {
              Event e;
              e.time = now_ < sc_.gst ? std::min(now_ + uniform(sc_.delta_min, sc_.delta_pre),
                                                 sc_.gst + sc_.delta_post)
                                      : now_ + uniform(sc_.delta_min, sc_.delta_post);
              e.src = i;
              e.type = EventType::deliver;
              e.to_client = true;
              e.target = a.reply.client;
              e.from = i;
              e.reply = std::make_shared<const Reply>(std::move(a.reply));
              push(std::move(e));
            }
          } else if constexpr (std::is_same_v<T, action::Commit>) {
            TraceRecord r;
            r.kind = RecordKind::commit;
            r.node = i;
            r.view = a.qc.view;
            r.seq = a.block.header.seq;
            r.hash = a.block.id();
            r.a = a.hops;
            r.b = a.block.header.proposer;
            record(std::move(r));
          } else if constexpr (std::is_same_v<T, action::Revoke>) {
            TraceRecord r;
            r.kind = RecordKind::revoke;
            r.node = i;
            r.view = a.block.header.view;
            r.seq = a.block.header.seq;
            r.hash = a.block.id();
            r.b = a.block.header.proposer;
            record(std::move(r));
          } else if constexpr (std::is_same_v<T, action::StartTimer>) {
            Event e;
            e.time = std::max(a.deadline, now_);
            e.src = i;
            e.type = EventType::timer;
            e.target = i;
            e.epoch = a.epoch;
            push(std::move(e));
          } else if constexpr (std::is_same_v<T, action::ScheduleBlacklist>) {
            TraceRecord r;
            r.kind = RecordKind::blacklist;
            r.node = i;
            r.view = a.proof.header_a.view;
            r.seq = a.proof.header_a.seq;
            r.a = a.node;
            record(std::move(r));
          } else if constexpr (std::is_same_v<T, action::ViewChangeStarted>) {
            TraceRecord r;
            r.kind = RecordKind::view_change;
            r.node = i;
            r.view = a.target;
            r.a = a.from_timer ? 1 : 0;
            record(std::move(r));
            if (!node.byzantine) honest_vc_targets_.insert(a.target);
          } else if constexpr (std::is_same_v<T, action::NewViewProcessed>) {
            TraceRecord r;
            r.kind = RecordKind::new_view;
            r.node = i;
            r.view = a.view;
            r.a = static_cast<std::int64_t>(a.aggregate_verifies);
            r.b = static_cast<std::int64_t>(a.constituents);
            r.c = a.accepted ? 1 : 0;
            record(std::move(r));
          } else if constexpr (std::is_same_v<T, action::Audit>) {
            TraceRecord r;
            r.kind = RecordKind::audit;
            r.node = i;
            r.note = a.note;
            record(std::move(r));
          }
        },
        act);
  }
}

// ---- clients --------------------------------------------------------------------

void Simulator::client_tick(ClientId c) {
  Client& cl = clients_[c];
  std::uint64_t ts = ++cl.sent;
  ClientRequest req =
      make_request(c, ts, "c" + std::to_string(c) + "-" + std::to_string(ts), cl.key);
  TraceRecord r;
  r.kind = RecordKind::request;
  r.node = c;
  r.a = c;
  r.b = static_cast<std::int64_t>(ts);
  record(std::move(r));
  auto msg = std::make_shared<const Message>(std::move(req));
  for (NodeId j = 0; j < sc_.config.n; ++j) transmit_from_client(c, j, msg);
  if ((sc_.requests_per_client == 0 || cl.sent < sc_.requests_per_client) &&
      now_ + sc_.request_interval < sc_.duration) {
    Event e;
    e.time = now_ + sc_.request_interval;
    e.src = sc_.config.n + c;
    e.type = EventType::client_tick;
    e.target = c;
    push(std::move(e));
  }
}

void Simulator::client_reply(ClientId c, const Reply& rep) {
  if (rep.client != c) return;
  Client& cl = clients_[c];
  auto& voters = cl.replies[rep.timestamp][rep.block_hash];
  voters.insert(rep.replier);
  if (voters.size() < sc_.config.quorum || cl.confirmed.contains(rep.timestamp)) return;
  cl.confirmed.insert(rep.timestamp);
  TraceRecord r;
  r.kind = RecordKind::confirm;
  r.node = c;
  r.view = rep.view;
  r.seq = rep.seq;
  r.hash = rep.block_hash;
  r.a = c;
  r.b = static_cast<std::int64_t>(rep.timestamp);
  record(std::move(r));
}

// ---- main loop ------------------------------------------------------------------

void Simulator::handle(const Event& e) {
  switch (e.type) {
    case EventType::deliver: {
      if (e.to_client) {
        client_reply(e.target, *e.reply);
        return;
      }
      Node& node = nodes_[e.target];
      if (node.crashed) return;
      if (sc_.trace_messages) {
        TraceRecord r;
        r.kind = RecordKind::deliver;
        r.node = e.target;
        r.view = message_view(*e.msg);
        r.a = static_cast<std::int64_t>(e.from);
        r.c = e.hops;
        r.note = message_kind(*e.msg);
        record(std::move(r));
      }
      apply(e.target,
            node.core->on_message(static_cast<NodeId>(e.from), *e.msg, e.hops, now_));
      return;
    }
    case EventType::timer: {
      Node& node = nodes_[e.target];
      if (node.crashed) return;
      apply(e.target, node.core->on_timer(e.epoch, now_));
      return;
    }
    case EventType::client_tick: client_tick(e.target); return;
    case EventType::spam: {
      Node& node = nodes_[e.target];
      if (!node.crashed) {
        const Replica& core = *node.core;
        View target = std::max(core.cur_view(), core.vc_target()) + 1;
        auto msg = std::make_shared<const Message>(
            make_view_change(target, core.high_qc(), std::nullopt, std::nullopt, core.keys()));
        for (NodeId j = 0; j < sc_.config.n; ++j)
          if (j != e.target) transmit(e.target, j, msg, 1);
      }
      SimTime period = std::max<SimTime>(1, sc_.config.timeout_base / 2);
      if (now_ + period < sc_.duration) {
        Event next = e;
        next.time = now_ + period;
        push(std::move(next));
      }
      return;
    }
  }
}

bool Simulator::done() const {
  if (sc_.target_blocks == 0) return false;
  if (honest_vc_targets_.size() < sc_.min_view_changes) return false;
  for (NodeId i = 0; i < sc_.config.n; ++i)
    if (!nodes_[i].byzantine && nodes_[i].core->height() < sc_.target_blocks) return false;
  return true;
}

RunResult Simulator::run() {
  std::uint64_t system = sc_.config.n + sc_.clients;
  for (NodeId i = 0; i < sc_.config.n; ++i) apply(i, nodes_[i].core->start(0));
  for (ClientId c = 0; c < sc_.clients; ++c) {
    Event e;
    e.time = 1 + c;
    e.src = system;
    e.type = EventType::client_tick;
    e.target = c;
    push(std::move(e));
  }
  if (sc_.adversary.strategy == Strategy::vc_spam) {
    std::uint32_t spammers = std::min<std::uint32_t>(sc_.adversary.count,
                                                     static_cast<std::uint32_t>(sc_.byzantine.size()));
    for (std::uint32_t k = 0; k < spammers; ++k) {
      Event e;
      e.time = std::max<SimTime>(1, sc_.config.timeout_base / 2);
      e.src = system;
      e.type = EventType::spam;
      e.target = sc_.byzantine[k];
      push(std::move(e));
    }
  }
  while (!queue_.empty()) {
    Event e = queue_.top();
    queue_.pop();
    if (e.time > sc_.duration) break;
    now_ = e.time;
    handle(e);
    if (done()) break;
  }

  if (sc_.self_test_corrupt) {
    // Two honest replicas "commit" different blocks at height 1.
    std::vector<NodeId> honest_ids;
    for (NodeId i = 0; i < sc_.config.n; ++i)
      if (!nodes_[i].byzantine) honest_ids.push_back(i);
    for (std::size_t k = 0; k < 2 && k < honest_ids.size(); ++k) {
      TraceRecord r;
      r.kind = RecordKind::commit;
      r.node = honest_ids[k];
      r.seq = 1;
      r.hash = crypto::sha256("forged/" + std::to_string(k));
      r.b = honest_ids[k];
      record(std::move(r));
    }
  }

  RunResult res;
  CheckContext ctx = context_of(sc_);
  res.violations = check_invariants(trace_, ctx);
  res.metrics = compute_metrics(trace_, ctx);
  res.metrics.scenario = sc_.name;
  res.metrics.seed = sc_.seed;
  res.metrics.verify_mode = sc_.options.verify_mode == VerifyMode::linear ? "linear" : "quadratic";
  res.metrics.piggyback = sc_.options.piggyback;
  res.metrics.violations = res.violations.size();
  for (const auto& n : nodes_) {
    std::vector<Hash> ids;
    for (const auto& b : n.core->chain()) ids.push_back(b.id());
    res.chains.push_back(std::move(ids));
  }
  if (!res.violations.empty()) {
    Trace protocol;
    for (const auto& r : trace_)
      if (r.kind != RecordKind::send && r.kind != RecordKind::deliver &&
          r.kind != RecordKind::hold)
        protocol.push_back(r);
    ViolationKind kind = res.violations.front().kind;
    auto failing = [&](const Trace& t) {
      for (const auto& v : check_invariants(t, ctx))
        if (v.kind == kind) return true;
      return false;
    };
    res.minimized = failing(protocol) ? shrink(protocol, failing) : protocol;
  }
  res.trace = std::move(trace_);
  return res;
}

RunResult run_scenario(const Scenario& sc) { return Simulator(sc).run(); }

}  // namespace vbft::sim
