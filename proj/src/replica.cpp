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

#include "vbft/replica.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "vbft/errors.hpp"

namespace vbft {

const char* to_string(SafetyVerdict v) {
  switch (v) {
    case SafetyVerdict::accept: return "accept";
    case SafetyVerdict::reject_stale: return "reject_stale";
    case SafetyVerdict::reject_invalid: return "reject_invalid";
    case SafetyVerdict::reject_policy: return "reject_policy";
    case SafetyVerdict::reject_conflict: return "reject_conflict";
    case SafetyVerdict::need_parent: return "need_parent";
    case SafetyVerdict::defer: return "defer";
  }
  return "?";
}

Replica::Replica(NodeId id, crypto::KeyPair keys, Committee committee, QC genesis_qc,
                 ReplicaOptions options)
    : id_(id),
      keys_(std::move(keys)),
      committee_(std::move(committee)),
      options_(options),
      pacemaker_(committee_.config) {
  committee_.config.validate();
  if (id_ >= committee_.config.n) throw InputError("replica id out of range");
  Block g = genesis_block();
  if (genesis_qc.block_hash != g.id() || genesis_qc.seq != 0)
    throw InputError("genesis certificate does not match the genesis block");
  chain_.push_back(g);
  chain_qcs_.push_back(genesis_qc);
  store_.emplace(g.id(), g);
  verified_qcs_.emplace(qc_digest(genesis_qc), genesis_qc);
}

View Replica::next_live_view(View v) const {
  // With at most f blacklisted nodes this terminates within n steps.
  for (std::uint32_t i = 0; i <= committee_.config.n * 2; ++i, ++v)
    if (!blacklist_.contains(primary(v))) return v;
  return v;
}

bool Replica::is_relevant_id(const Hash& id) const {
  if (!nv_) return false;
  return std::any_of(nv_->relevant.begin(), nv_->relevant.end(),
                     [&](const UHeader& u) { return u.block_id() == id; });
}

// ---- output helpers -----------------------------------------------------------

void Replica::broadcast(Message m, std::uint32_t hops, Actions& out) {
  out.push_back(action::Broadcast{std::move(m), hops});
}

void Replica::send(NodeId to, Message m, std::uint32_t hops, Actions& out) {
  out.push_back(action::Send{to, std::move(m), hops});
}

void Replica::arm_timer(SimTime now, Actions& out) {
  std::uint64_t e = pacemaker_.arm(now);
  out.push_back(action::StartTimer{e, pacemaker_.deadline()});
}

// ---- top level ----------------------------------------------------------------

Actions Replica::start(SimTime now) {
  now_ = now;
  Actions out;
  arm_timer(now, out);
  if (primary(cur_view_) == id_) propose_happy(out);
  return out;
}

Actions Replica::on_message(NodeId from, const Message& msg, std::uint32_t hops, SimTime now) {
  now_ = now;
  Actions out;
  dispatch(from, msg, hops, out);
  drain_deferred(out);
  return out;
}

Actions Replica::on_timer(std::uint64_t epoch, SimTime now) {
  now_ = now;
  Actions out;
  if (!pacemaker_.on_timer(epoch, now)) return out;
  on_timeout_or_proof(std::nullopt, 0, true, out);
  // Outstanding fetches may have been lost before GST.
  if (!fetching_.empty()) {
    FetchRequest req{{fetching_.begin(), fetching_.end()}};
    broadcast(std::move(req), 1, out);
  }
  drain_deferred(out);
  return out;
}

void Replica::dispatch(NodeId from, const Message& msg, std::uint32_t hops, Actions& out) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ClientRequest>) on_client_request(m, out);
        else if constexpr (std::is_same_v<T, Block>) on_proposal(from, m, hops, out);
        else if constexpr (std::is_same_v<T, Vote>) on_vote(from, m, hops, out);
        else if constexpr (std::is_same_v<T, ViewChangeMsg>) on_view_change_msg(from, m, hops, out);
        else if constexpr (std::is_same_v<T, NewViewMsg>) on_new_view(from, m, hops, out);
        else if constexpr (std::is_same_v<T, ReadyMsg>) on_ready(from, m, hops, out);
        else if constexpr (std::is_same_v<T, ReadyCert>) on_ready_cert(from, m, hops, out);
        else if constexpr (std::is_same_v<T, PayloadRequest>) on_payload_request(from, m, hops, out);
        else if constexpr (std::is_same_v<T, PayloadResponse>) on_payload_response(from, m, hops, out);
        else if constexpr (std::is_same_v<T, NegativeResponse>) on_negative_response(from, m, hops, out);
        else if constexpr (std::is_same_v<T, EquivocationProof>) on_equivocation_proof(m, hops, out);
        else if constexpr (std::is_same_v<T, FetchRequest>) on_fetch_request(from, m, out);
        else if constexpr (std::is_same_v<T, FetchResponse>) on_fetch_response(m, hops, out);
      },
      msg);
}

void Replica::defer(NodeId from, const Message& m, std::uint32_t hops) {
  constexpr std::size_t kMaxDeferred = 512;
  if (deferred_.size() >= kMaxDeferred) deferred_.erase(deferred_.begin());
  deferred_.push_back({from, m, hops});
}

void Replica::drain_deferred(Actions& out) {
  if (draining_) return;
  draining_ = true;
  // Retry until a full pass makes no progress.
  for (int pass = 0; pass < 8 && !deferred_.empty(); ++pass) {
    auto batch = std::move(deferred_);
    deferred_.clear();
    for (auto& d : batch) dispatch(d.from, d.msg, d.hops, out);
    if (deferred_.size() >= batch.size()) break;
  }
  draining_ = false;
}

// ---- chain management ---------------------------------------------------------

void Replica::store_block(const Block& b) { store_.try_emplace(b.id(), b); }

// Records a signed header and reports equivocation. Returns false when the
// header conflicts with one already seen from the same proposer.
bool Replica::note_header(const BlockHeader& h, const Signature& sig, Actions& out,
                          std::uint32_t hops) {
  auto key = std::make_tuple(h.proposer, h.view, h.seq);
  auto it = headers_.find(key);
  if (it == headers_.end()) {
    headers_.emplace(key, UHeader{h, sig});
    return true;
  }
  if (!is_equivocation(it->second.header, h)) return true;
  on_equivocation_proof(make_proof(it->second, UHeader{h, sig}), hops, out);
  return false;
}

// Returns the locally held certificate for the statement `qc` makes,
// verifying the presented one only when no such certificate is held yet.
std::optional<QC> Replica::check_qc(const QC& qc) {
  Hash d = qc_digest(qc);
  if (auto it = verified_qcs_.find(d); it != verified_qcs_.end()) return it->second;
  if (!verify_qc(qc, committee_)) return std::nullopt;
  verified_qcs_.emplace(d, qc);
  return qc;
}

void Replica::remember_qc(const QC& qc) { verified_qcs_.try_emplace(qc_digest(qc), qc); }

void Replica::request_fetch(const Hash& id, Actions& out) {
  if (!fetching_.insert(id).second) return;
  broadcast(FetchRequest{{id}}, 1, out);
}

// A certificate for some height. Extends, confirms or (with a later view)
// replaces the local chain.
void Replica::learn_qc(const QC& presented, std::uint32_t hops, Actions& out) {
  if (presented.kind != QcKind::block) return;
  auto held = check_qc(presented);
  if (!held) return;
  const QC& qc = *held;
  if (qc.seq < chain_.size()) {
    if (chain_[qc.seq].id() == qc.block_hash) {
      if (qc.view <= chain_qcs_[qc.seq].view) return;
      chain_qcs_[qc.seq] = qc;
      // A fresh certificate for the tip moves the view on like a commit.
      if (qc.seq + 1 == chain_.size() && qc.view + 1 > cur_view_) {
        enter_view_after(qc);
        after_commit(hops, out);
      }
      return;
    }
    if (qc.view <= chain_qcs_[qc.seq].view) return;
    revoke_from(qc.seq, out);
  }
  auto it = certified_.find(qc.seq);
  if (it == certified_.end() || it->second.view < qc.view) certified_[qc.seq] = qc;
  advance(hops, out);
}

void Replica::advance(std::uint32_t hops, Actions& out) {
  bool progressed = false;
  while (true) {
    Seq next = chain_.size();
    auto it = certified_.find(next);
    if (it == certified_.end()) break;
    QC qc = it->second;
    auto blk = store_.find(qc.block_hash);
    if (blk == store_.end()) {
      request_fetch(qc.block_hash, out);
      break;
    }
    Block b = blk->second;
    if (b.header.parent_hash != chain_.back().id()) {
      // The certified block hangs off a different parent. Its own parent
      // certificate may justify replacing our tip.
      std::size_t before = chain_.size();
      QC pq = b.qc_parent;
      if (pq.seq + 1 == next && pq.block_hash == b.header.parent_hash &&
          pq.view > chain_qcs_.back().view && check_qc(pq)) {
        pq = *check_qc(pq);
        revoke_from(pq.seq, out);
        certified_[pq.seq] = pq;
        continue;
      }
      if (chain_.size() == before) break;
      continue;
    }
    certified_.erase(it);
    commit(b, qc, hops, out);
    progressed = true;
  }
  // Backfill: a fetched block whose parent is still unknown.
  if (!certified_.empty()) {
    auto it = certified_.begin();
    if (it->first > chain_.size()) {
      auto blk = store_.find(it->second.block_hash);
      if (blk != store_.end()) {
        const QC& pq = blk->second.qc_parent;
        auto held = pq.seq >= chain_.size() && !certified_.contains(pq.seq)
                        ? check_qc(pq)
                        : std::nullopt;
        if (held) {
          certified_[pq.seq] = *held;
          advance(hops, out);
          return;
        }
      } else {
        request_fetch(it->second.block_hash, out);
      }
    }
  }
  if (progressed) after_commit(hops, out);
}

void Replica::commit(const Block& b, const QC& qc, std::uint32_t hops, Actions& out) {
  chain_.push_back(b);
  chain_qcs_.push_back(qc);
  fetching_.erase(b.id());
  if (voted_u_ && voted_u_->header.seq <= b.header.seq) voted_u_.reset();
  for (const auto& c : b.commands) {
    auto key = std::make_pair(c.client, c.timestamp);
    committed_keys_[key] = {b.header.seq, b.id()};
    if (pending_keys_.erase(key)) {
      auto it = std::find(mempool_.begin(), mempool_.end(), c);
      if (it != mempool_.end()) mempool_.erase(it);
    }
    out.push_back(action::SendReply{Reply{qc.view, "ok:" + c.op, c.timestamp, c.client, b.id(),
                                          b.header.seq, id_}});
  }
  out.push_back(action::Commit{b, qc, hops});
  enter_view_after(qc);
}

void Replica::enter_view_after(const QC& qc) {
  if (nv_ && qc.view >= nv_->view) nv_->first_committed = true;
  if (qc.view + 1 > cur_view_) cur_view_ = qc.view + 1;
  if (mode_ == Mode::view_change && cur_view_ >= vc_target_) {
    mode_ = Mode::normal;
    vc_target_ = 0;
  }
}

void Replica::revoke_from(Seq seq, Actions& out) {
  while (chain_.size() > seq && chain_.size() > 1) {
    Block b = chain_.back();
    chain_.pop_back();
    chain_qcs_.pop_back();
    for (const auto& c : b.commands) {
      auto key = std::make_pair(c.client, c.timestamp);
      committed_keys_.erase(key);
      if (pending_keys_.insert(key).second) mempool_.push_front(c);
    }
    out.push_back(action::Revoke{b});
  }
}

void Replica::after_commit(std::uint32_t hops, Actions& out) {
  (void)hops;
  std::uint64_t e = pacemaker_.on_commit(now_);
  out.push_back(action::StartTimer{e, pacemaker_.deadline()});
  if (mode_ != Mode::normal) return;
  if (blacklist_.contains(primary(cur_view_))) {
    start_view_change(next_live_view(cur_view_ + 1), std::nullopt, hops, false, out);
    return;
  }
  if (primary(cur_view_) == id_) propose_happy(out);
  try_first_proposal(hops, out);
}

// ---- client requests ------------------------------------------------------------

void Replica::on_client_request(const ClientRequest& req, Actions& out) {
  if (req.client >= committee_.client_keys.size()) return;
  if (!verify_request(req, committee_)) return;
  auto key = std::make_pair(req.client, req.timestamp);
  if (auto it = committed_keys_.find(key); it != committed_keys_.end()) {
    auto [seq, id] = it->second;
    out.push_back(action::SendReply{
        Reply{chain_qcs_[seq].view, "ok:" + req.op, req.timestamp, req.client, id, seq, id_}});
    return;
  }
  if (!pending_keys_.insert(key).second) return;
  mempool_.push_back(req);
}

// Empty when some uncommitted ancestor of `parent` is not held yet; the
// caller fetches it and retries.
std::optional<std::vector<ClientRequest>> Replica::take_batch(const QC& parent, Actions& out) {
  // Requests already carried by certified ancestors not yet committed here.
  std::set<std::pair<ClientId, std::uint64_t>> carried;
  Hash at = parent.block_hash;
  for (Seq s = parent.seq; s >= chain_.size() && s > 0; --s) {
    auto it = store_.find(at);
    if (it == store_.end()) {
      request_fetch(at, out);
      return std::nullopt;
    }
    for (const auto& c : it->second.commands) carried.emplace(c.client, c.timestamp);
    at = it->second.header.parent_hash;
  }
  std::vector<ClientRequest> batch;
  for (const auto& c : mempool_) {
    if (batch.size() == options_.batch_size) break;
    if (!carried.contains({c.client, c.timestamp})) batch.push_back(c);
  }
  return batch;
}

// ---- proposing ------------------------------------------------------------------

void Replica::propose_happy(Actions& out) {
  View v = cur_view_;
  if (mode_ != Mode::normal || primary(v) != id_ || proposed_views_.contains(v)) return;
  if (nv_sent_.contains(v) || (nv_ && nv_->view == v)) return;
  const QC& parent = high_qc();
  if (v != parent.view + 1) return;
  if (options_.max_seq != 0 && parent.seq + 1 > options_.max_seq) return;
  auto batch = take_batch(parent, out);
  if (!batch) return;
  Block b = create_prepare_msg(v, parent.seq + 1, parent.block_hash, parent, std::nullopt,
                               std::move(*batch), keys_);
  proposed_views_.insert(v);
  broadcast(std::move(b), 1, out);
}

void Replica::try_first_proposal(std::uint32_t hops, Actions& out) {
  if (!nv_ || nv_->proposed || !nv_->qc_ready || primary(nv_->view) != id_) return;
  if (nv_->view != cur_view_ || mode_ != Mode::normal) return;
  const QC& high = nv_->high;
  std::optional<Block> pick;
  std::optional<NegativeQC> nqc;
  if (!nv_->relevant.empty()) {
    for (const auto& u : nv_->relevant) {
      if (auto it = store_.find(u.block_id()); it != store_.end()) {
        pick = it->second;
        break;
      }
    }
    if (!pick) {
      for (const auto& u : nv_->relevant) {
        auto it = nv_->negatives.find(u.block_id());
        if (it == nv_->negatives.end() || it->second.size() < committee_.config.quorum) continue;
        std::vector<NegativeResponse> nrs;
        for (const auto& [_, nr] : it->second) {
          nrs.push_back(nr);
          if (nrs.size() == committee_.config.quorum) break;
        }
        nqc = create_negative_qc(nrs, committee_);
        break;
      }
    }
    if (!pick && !nqc) {
      if (!nv_->payload_requested) {
        nv_->payload_requested = true;
        PayloadRequest req{nv_->view, {}};
        for (const auto& u : nv_->relevant) req.u_hashes.push_back(u.block_id());
        broadcast(std::move(req), hops + 1, out);
      }
      return;
    }
  }
  if (!pick && options_.max_seq != 0 && high.seq + 1 > options_.max_seq) return;
  std::vector<ClientRequest> cmds;
  if (pick) {
    cmds = pick->commands;
  } else {
    auto batch = take_batch(high, out);
    if (!batch) return;
    cmds = std::move(*batch);
  }
  Block b = create_prepare_msg(nv_->view, high.seq + 1, high.block_hash, high, nqc,
                               std::move(cmds), keys_);
  b.qc_ready = nv_->qc_ready;
  nv_->proposed = true;
  proposed_views_.insert(nv_->view);
  broadcast(std::move(b), hops + 1, out);
}

// ---- voting ---------------------------------------------------------------------

SafetyVerdict Replica::safety_check(const Block& b) const {
  const BlockHeader& h = b.header;
  if (blacklist_.contains(h.proposer) || h.proposer != primary(h.view))
    return SafetyVerdict::reject_policy;
  const QC& qp = b.qc_parent;
  if (qp.kind != QcKind::block || qp.block_hash != h.parent_hash || h.seq != qp.seq + 1 ||
      payload_hash(b.commands) != h.payload_hash)
    return SafetyVerdict::reject_invalid;
  if (h.view < effective_view()) return SafetyVerdict::reject_stale;
  if (my_votes_.contains({h.view, h.seq})) return SafetyVerdict::reject_stale;
  if (h.seq < chain_.size() && chain_[h.seq].id() != b.id()) return SafetyVerdict::reject_conflict;

  if (nv_ && nv_->view == h.view) {
    const QC& high = nv_->high;
    if (!b.qc_ready || b.qc_ready->kind != QcKind::ready || b.qc_ready->view != h.view ||
        b.qc_ready->seq != high.seq || b.qc_ready->block_hash != high.block_hash)
      return SafetyVerdict::reject_invalid;
    if (qp.seq != high.seq || qp.block_hash != high.block_hash)
      return SafetyVerdict::reject_invalid;
    if (nv_->relevant.empty()) {
      if (b.qc_nr) return SafetyVerdict::reject_invalid;
    } else {
      Hash id = b.id();
      bool named = is_relevant_id(id);
      bool refuted = b.qc_nr && b.qc_nr->view == h.view && is_relevant_id(b.qc_nr->u_hash);
      if (!named && !refuted) return SafetyVerdict::reject_invalid;
    }
  } else {
    if (b.qc_nr || b.qc_ready) return SafetyVerdict::reject_invalid;
    if (h.view != qp.view + 1) {
      // A first proposal for a view whose new-view message has not arrived.
      return h.view > effective_view() ? SafetyVerdict::defer : SafetyVerdict::reject_invalid;
    }
    if (h.seq <= cur_s_) return SafetyVerdict::reject_stale;
    if (h.view > effective_view()) return SafetyVerdict::defer;
  }
  if (qp.seq >= chain_.size()) return SafetyVerdict::need_parent;
  if (chain_[qp.seq].id() != qp.block_hash) return SafetyVerdict::reject_stale;
  return SafetyVerdict::accept;
}

void Replica::on_proposal(NodeId from, const Block& b, std::uint32_t hops, Actions& out) {
  const BlockHeader& h = b.header;
  if (from != h.proposer || h.proposer >= committee_.config.n) return;
  if (payload_hash(b.commands) != h.payload_hash) return;
  if (!verify_header(h, b.header_sig, committee_)) return;
  store_block(b);
  if (!note_header(h, b.header_sig, out, hops)) return;
  if (blacklist_.contains(h.proposer)) return;

  bool from_current = h.proposer == primary(effective_view()) && h.view == effective_view();
  auto invalid = [&] {
    if (from_current) on_timeout_or_proof(std::nullopt, hops, false, out);
  };
  if (b.qc_parent.kind != QcKind::block || !check_qc(b.qc_parent)) return invalid();
  if (b.qc_ready && !check_qc(*b.qc_ready)) return invalid();
  if (b.qc_nr && !verify_negative_qc(*b.qc_nr, committee_)) return invalid();
  learn_qc(b.qc_parent, hops, out);

  switch (safety_check(b)) {
    case SafetyVerdict::accept:
      vote_for(b, hops, out);
      return;
    case SafetyVerdict::defer:
    case SafetyVerdict::need_parent:
      defer(from, b, hops);
      return;
    case SafetyVerdict::reject_invalid:
    case SafetyVerdict::reject_conflict:
      // Re-evaluate: the checks above may have moved this replica.
      if (h.proposer == primary(effective_view()) && h.view == effective_view()) {
        out.push_back(action::Audit{"invalid proposal from primary"});
        on_timeout_or_proof(std::nullopt, hops, false, out);
      }
      return;
    case SafetyVerdict::reject_stale:
    case SafetyVerdict::reject_policy:
      return;
  }
}

void Replica::vote_for(const Block& b, std::uint32_t hops, Actions& out) {
  const BlockHeader& h = b.header;
  Hash id = b.id();
  auto [it, fresh] = my_votes_.emplace(std::make_pair(h.view, h.seq), id);
  if (!fresh) {
    if (it->second != id) throw ProtocolViolation("second vote for one (view, seq)");
    return;
  }
  cur_s_ = h.seq;
  bool committed = h.seq < chain_.size() && chain_[h.seq].id() == id;
  if (!committed) voted_u_ = UHeader{h, b.header_sig};
  broadcast(make_vote(b, h.view, keys_), hops + 1, out);
}

void Replica::on_vote(NodeId from, const Vote& v, std::uint32_t hops, Actions& out) {
  if (from != v.voter || v.voter >= committee_.config.n) return;
  if (v.seq + 1 < chain_.size() && chain_[v.seq].id() == v.block_hash &&
      chain_qcs_[v.seq].view >= v.view)
    return;
  if (!verify_vote(v, committee_)) return;
  auto& bucket = votes_[std::make_tuple(v.view, v.seq, v.block_hash)];
  if (!bucket.emplace(v.voter, v).second) return;
  if (bucket.size() != committee_.config.quorum) return;
  std::vector<Vote> vs;
  for (const auto& [_, x] : bucket) vs.push_back(x);
  QC qc = generate_qc(vs, committee_);
  remember_qc(qc);
  learn_qc(qc, hops, out);
}

// ---- view change --------------------------------------------------------------

void Replica::on_timeout_or_proof(std::optional<EquivocationProof> proof, std::uint32_t hops,
                                  bool from_timer, Actions& out) {
  if (from_timer && !proof && mode_ == Mode::view_change &&
      pacemaker_.support(vc_target_) < committee_.config.quorum) {
    // Too few replicas reached the pending view for it to have been tried;
    // repeat the request instead of moving further ahead of them.
    std::optional<UHeader> u;
    if (voted_u_ && voted_u_->header.seq > high_qc().seq) u = voted_u_;
    broadcast(make_view_change(vc_target_, high_qc(), u, std::nullopt, keys_), hops + 1, out);
    arm_timer(now_, out);
    return;
  }
  start_view_change(next_live_view(effective_view() + 1), std::move(proof), hops, from_timer,
                    out);
}

void Replica::start_view_change(View target, std::optional<EquivocationProof> proof,
                                std::uint32_t hops, bool from_timer, Actions& out) {
  if (target <= effective_view()) return;
  mode_ = Mode::view_change;
  vc_target_ = target;
  pacemaker_.record_own(id_, target);
  std::optional<UHeader> u;
  if (voted_u_ && voted_u_->header.seq > high_qc().seq) u = voted_u_;
  out.push_back(action::ViewChangeStarted{target, from_timer});
  broadcast(make_view_change(target, high_qc(), u, std::move(proof), keys_), hops + 1, out);
  arm_timer(now_, out);
}

void Replica::on_view_change_msg(NodeId from, const ViewChangeMsg& vc, std::uint32_t hops,
                                 Actions& out) {
  if (from != vc.sender || vc.sender >= committee_.config.n) return;
  if (!verify_view_change(vc, committee_)) return;
  if (vc.proof) on_equivocation_proof(*vc.proof, hops, out);
  if (vc.sender != id_) {
    auto obs = pacemaker_.on_vc_observed(vc.next_view, vc.sender, effective_view());
    if (obs.decision != Pacemaker::Decision::none && obs.view > effective_view())
      start_view_change(obs.view, std::nullopt, hops, false, out);
  }
  View w = vc.next_view;
  if (primary(w) != id_ || nv_sent_.contains(w) || w < effective_view()) return;
  if (vc.qc_latest.kind != QcKind::block || !check_qc(vc.qc_latest)) return;
  auto& box = vc_inbox_[w];
  box.emplace(vc.sender, vc);
  if (box.size() < committee_.config.quorum) return;
  std::vector<ViewChangeMsg> vcs;
  for (const auto& [_, m] : box) {
    vcs.push_back(m);
    if (vcs.size() == committee_.config.quorum) break;
  }
  AggQC agg = create_agg_qc(vcs, committee_);
  bool piggyback = options_.piggyback;
  NewViewMsg nv = create_nv_msg(std::move(agg), w, [&](const Hash& id) {
    return !piggyback || store_.contains(id);
  });
  nv_sent_.insert(w);
  vc_inbox_.erase(vc_inbox_.begin(), vc_inbox_.upper_bound(w));
  broadcast(std::move(nv), hops + 1, out);
}

void Replica::on_new_view(NodeId from, const NewViewMsg& nv, std::uint32_t hops, Actions& out) {
  if (from != primary(nv.view) || blacklist_.contains(from)) return;
  if (nv.view < effective_view() || (nv_ && nv_->view >= nv.view)) return;
  auto before = crypto::verify_counters();
  bool ok = verify_new_view(nv, committee_, options_.verify_mode);
  auto after = crypto::verify_counters();
  out.push_back(action::NewViewProcessed{nv.view, ok, after.aggregate - before.aggregate,
                                         after.constituents - before.constituents});
  if (!ok) {
    if (nv.view == effective_view()) on_timeout_or_proof(std::nullopt, hops, false, out);
    return;
  }
  for (const auto& e : nv.aggqc.entries)
    if (e.u) note_header(e.u->header, e.u->header_sig, out, hops);
  if (blacklist_.contains(from)) return;

  Recovery r;
  r.nv = nv;
  r.view = nv.view;
  r.high = vbft::high_qc(nv.aggqc);
  r.relevant = relevant_us(nv.aggqc);
  remember_qc(r.high);
  cur_view_ = nv.view;
  mode_ = Mode::normal;
  vc_target_ = 0;
  cur_s_ = std::min(cur_s_, r.high.seq);
  nv_ = std::move(r);
  arm_timer(now_, out);
  learn_qc(nv_->high, hops, out);

  ReadyMsg ready = make_ready(nv.view, nv_->high, keys_);
  if (nv.need_payload) {
    for (const auto& u : nv_->relevant) {
      Hash id = u.block_id();
      if (auto it = store_.find(id); it != store_.end()) ready.payloads.push_back(it->second);
      else ready.negatives.push_back(make_negative(nv.view, id, keys_));
    }
  }
  send(from, std::move(ready), hops + 1, out);
}

void Replica::on_ready(NodeId from, const ReadyMsg& r, std::uint32_t hops, Actions& out) {
  if (from != r.sender || primary(r.view) != id_) return;
  if (!nv_ || nv_->view < r.view) {
    if (r.view >= effective_view()) defer(from, r, hops);
    return;
  }
  if (nv_->view != r.view || nv_->readys.contains(r.sender)) return;
  if (r.high_seq != nv_->high.seq || r.high_hash != nv_->high.block_hash) return;
  if (!verify_ready(r, committee_)) return;
  for (const auto& p : r.payloads) {
    if (is_relevant_id(p.id()) && payload_hash(p.commands) == p.header.payload_hash &&
        verify_header(p.header, p.header_sig, committee_))
      store_block(p);
  }
  for (const auto& nr : r.negatives) {
    if (nr.view == r.view && nr.sender == r.sender && is_relevant_id(nr.u_hash) &&
        verify_negative(nr, committee_))
      nv_->negatives[nr.u_hash].emplace(nr.sender, nr);
  }
  nv_->readys.emplace(r.sender, r);
  if (nv_->readys.size() == committee_.config.quorum) {
    std::vector<ReadyMsg> rs;
    for (const auto& [_, x] : nv_->readys) rs.push_back(x);
    QC qr = create_ready_qc(rs, committee_);
    remember_qc(qr);
    nv_->qc_ready = qr;
    if (options_.piggyback) try_first_proposal(hops, out);
    else broadcast(ReadyCert{qr}, hops + 1, out);
  } else if (options_.piggyback && nv_->qc_ready) {
    try_first_proposal(hops, out);
  }
}

void Replica::on_ready_cert(NodeId from, const ReadyCert& rc, std::uint32_t hops, Actions& out) {
  const QC& qc = rc.qc;
  if (qc.kind != QcKind::ready || from != primary(qc.view)) return;
  if (!check_qc(qc)) return;
  ready_certs_[qc.view] = qc;
  if (from == id_ && nv_ && nv_->view == qc.view) try_first_proposal(hops, out);
}

void Replica::on_payload_request(NodeId from, const PayloadRequest& req, std::uint32_t hops,
                                 Actions& out) {
  if (from != primary(req.view) || blacklist_.contains(from)) return;
  if (req.u_hashes.size() > committee_.config.n) return;
  for (const auto& id : req.u_hashes) {
    if (auto it = store_.find(id); it != store_.end())
      send(from, PayloadResponse{req.view, it->second}, hops + 1, out);
    else
      send(from, make_negative(req.view, id, keys_), hops + 1, out);
  }
}

void Replica::on_payload_response(NodeId from, const PayloadResponse& resp, std::uint32_t hops,
                                  Actions& out) {
  (void)from;
  if (!nv_ || nv_->view != resp.view || primary(resp.view) != id_) return;
  const Block& p = resp.block;
  if (!is_relevant_id(p.id()) || payload_hash(p.commands) != p.header.payload_hash ||
      !verify_header(p.header, p.header_sig, committee_))
    return;
  store_block(p);
  try_first_proposal(hops, out);
}

void Replica::on_negative_response(NodeId from, const NegativeResponse& nr, std::uint32_t hops,
                                   Actions& out) {
  if (from != nr.sender || !nv_ || nv_->view != nr.view || primary(nr.view) != id_) return;
  if (!is_relevant_id(nr.u_hash) || !verify_negative(nr, committee_)) return;
  nv_->negatives[nr.u_hash].emplace(nr.sender, nr);
  try_first_proposal(hops, out);
}

// ---- accountability -------------------------------------------------------------

void Replica::on_equivocation_proof(const EquivocationProof& proof, std::uint32_t hops,
                                    Actions& out) {
  NodeId culprit = proof.header_a.proposer;
  if (culprit >= committee_.config.n || blacklist_.contains(culprit)) return;
  if (!verify_equivocation_proof(proof, committee_)) return;
  blacklist_.insert(culprit);
  out.push_back(action::ScheduleBlacklist{culprit, proof});
  broadcast(proof, hops + 1, out);
  if (culprit == primary(effective_view())) on_timeout_or_proof(proof, hops, false, out);
}

// ---- catch-up -------------------------------------------------------------------

void Replica::on_fetch_request(NodeId from, const FetchRequest& req, Actions& out) {
  if (from == id_ || req.ids.size() > 64) return;
  FetchResponse resp;
  for (const auto& id : req.ids)
    if (auto it = store_.find(id); it != store_.end()) resp.blocks.push_back(it->second);
  if (!resp.blocks.empty()) send(from, std::move(resp), 1, out);
}

void Replica::on_fetch_response(const FetchResponse& resp, std::uint32_t hops, Actions& out) {
  bool any = false;
  for (const auto& b : resp.blocks) {
    Hash id = b.id();
    if (!fetching_.contains(id) || store_.contains(id)) continue;
    if (payload_hash(b.commands) != b.header.payload_hash ||
        !verify_header(b.header, b.header_sig, committee_))
      continue;
    store_block(b);
    fetching_.erase(id);
    any = true;
  }
  if (!any) return;
  advance(hops, out);
  try_first_proposal(hops, out);
}

}  // namespace vbft
