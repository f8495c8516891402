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
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "vbft/crypto.hpp"
#include "vbft/pacemaker.hpp"
#include "vbft/protocol.hpp"
#include "vbft/types.hpp"

namespace vbft {

struct HashOf {
  std::size_t operator()(const Hash& h) const noexcept {
    std::size_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | h[i];
    return v;
  }
};

struct ReplicaOptions {
  // Payload recovery rides on NEW-VIEW/READY and QC_r rides on the first
  // proposal. Off = QC_r broadcast, then payload request round trip.
  bool piggyback = true;
  VerifyMode verify_mode = VerifyMode::linear;
  std::size_t batch_size = 16;
  Seq max_seq = 0;  // 0 = unbounded; otherwise stop proposing past this height
};

// ---- actions: the only outputs of the state machine ---------------------------

namespace action {
struct Broadcast {
  Message msg;
  std::uint32_t hops = 0;
};
struct Send {
  NodeId to = 0;
  Message msg;
  std::uint32_t hops = 0;
};
struct SendReply {
  Reply reply;
};
struct Commit {
  Block block;
  QC qc;
  std::uint32_t hops = 0;
};
struct Revoke {
  Block block;
};
struct StartTimer {
  std::uint64_t epoch = 0;
  SimTime deadline = 0;
};
struct ScheduleBlacklist {
  NodeId node = 0;
  EquivocationProof proof;
};
struct ViewChangeStarted {
  View target = 0;
  bool from_timer = false;
};
struct NewViewProcessed {
  View view = 0;
  bool accepted = false;
  std::uint64_t aggregate_verifies = 0;
  std::uint64_t constituents = 0;
};
struct Audit {
  std::string note;
};
}  // namespace action

using Action = std::variant<action::Broadcast, action::Send, action::SendReply, action::Commit,
                            action::Revoke, action::StartTimer, action::ScheduleBlacklist,
                            action::ViewChangeStarted, action::NewViewProcessed, action::Audit>;

using Actions = std::vector<Action>;

enum class Mode : std::uint8_t { normal, view_change };

enum class SafetyVerdict : std::uint8_t {
  accept,
  reject_stale,    // seq or view already passed; drop silently
  reject_invalid,  // provably bad proposal from the primary; triggers a view change
  reject_policy,   // wrong proposer / blacklisted / not yet allowed to vote
  reject_conflict, // competes with a block committed here; triggers a view change
  need_parent,     // parent not committed locally yet; fetch and retry
  defer,           // belongs to a view this replica has not reached yet
};

const char* to_string(SafetyVerdict v);

// One VBFT replica. Feed it events; it returns actions. It never reads a clock
// or touches the network.
class Replica {
 public:
  Replica(NodeId id, crypto::KeyPair keys, Committee committee, QC genesis_qc,
          ReplicaOptions options = {});

  Actions start(SimTime now);
  Actions on_message(NodeId from, const Message& msg, std::uint32_t hops, SimTime now);
  Actions on_timer(std::uint64_t epoch, SimTime now);

  // Individual handlers, exposed for unit tests. Each appends to `out`.
  void on_client_request(const ClientRequest& req, Actions& out);
  void on_proposal(NodeId from, const Block& block, std::uint32_t hops, Actions& out);
  void on_vote(NodeId from, const Vote& vote, std::uint32_t hops, Actions& out);
  void on_timeout_or_proof(std::optional<EquivocationProof> proof, std::uint32_t hops,
                           bool from_timer, Actions& out);
  void on_view_change_msg(NodeId from, const ViewChangeMsg& vc, std::uint32_t hops, Actions& out);
  void on_new_view(NodeId from, const NewViewMsg& nv, std::uint32_t hops, Actions& out);
  void on_ready(NodeId from, const ReadyMsg& r, std::uint32_t hops, Actions& out);
  void on_ready_cert(NodeId from, const ReadyCert& rc, std::uint32_t hops, Actions& out);
  void on_payload_request(NodeId from, const PayloadRequest& req, std::uint32_t hops, Actions& out);
  void on_payload_response(NodeId from, const PayloadResponse& resp, std::uint32_t hops,
                           Actions& out);
  void on_negative_response(NodeId from, const NegativeResponse& nr, std::uint32_t hops,
                            Actions& out);
  void on_equivocation_proof(const EquivocationProof& proof, std::uint32_t hops, Actions& out);
  void on_fetch_request(NodeId from, const FetchRequest& req, Actions& out);
  void on_fetch_response(const FetchResponse& resp, std::uint32_t hops, Actions& out);

  SafetyVerdict safety_check(const Block& block) const;

  // Primary for `view`, ignoring this replica's blacklist.
  NodeId primary(View view) const { return primary_of(view, committee_.config); }
  // Smallest view >= v whose primary is not blacklisted here.
  View next_live_view(View v) const;

  // ---- observers -----------------------------------------------------------
  NodeId id() const { return id_; }
  View cur_view() const { return cur_view_; }
  View vc_target() const { return vc_target_; }
  Mode mode() const { return mode_; }
  Seq cur_seq() const { return cur_s_; }
  Seq height() const { return chain_.size() - 1; }
  const QC& high_qc() const { return chain_qcs_.back(); }
  const std::vector<Block>& chain() const { return chain_; }
  const std::optional<UHeader>& voted_u() const { return voted_u_; }
  const std::set<NodeId>& blacklist() const { return blacklist_; }
  std::size_t mempool_size() const { return mempool_.size(); }
  const Pacemaker& pacemaker() const { return pacemaker_; }
  bool has_block(const Hash& id) const { return store_.contains(id); }
  const Committee& committee() const { return committee_; }
  const crypto::KeyPair& keys() const { return keys_; }
  std::optional<View> adopted_view() const {
    return nv_ ? std::optional<View>(nv_->view) : std::nullopt;
  }

 private:
  struct Recovery {
    NewViewMsg nv;
    View view = 0;
    QC high;
    std::vector<UHeader> relevant;
    bool first_committed = false;
    // primary-side bookkeeping
    std::map<NodeId, ReadyMsg> readys;
    std::optional<QC> qc_ready;
    bool proposed = false;
    bool payload_requested = false;
    std::map<Hash, std::map<NodeId, NegativeResponse>> negatives;
  };

  View effective_view() const { return mode_ == Mode::view_change ? vc_target_ : cur_view_; }
  bool is_relevant_id(const Hash& id) const;

  void broadcast(Message m, std::uint32_t hops, Actions& out);
  void send(NodeId to, Message m, std::uint32_t hops, Actions& out);
  void arm_timer(SimTime now, Actions& out);

  void store_block(const Block& b);
  bool note_header(const BlockHeader& h, const Signature& sig, Actions& out, std::uint32_t hops);
  std::optional<QC> check_qc(const QC& qc);
  void remember_qc(const QC& qc);
  void learn_qc(const QC& qc, std::uint32_t hops, Actions& out);
  void advance(std::uint32_t hops, Actions& out);
  void commit(const Block& b, const QC& qc, std::uint32_t hops, Actions& out);
  void revoke_from(Seq seq, Actions& out);
  void request_fetch(const Hash& id, Actions& out);
  void after_commit(std::uint32_t hops, Actions& out);
  void propose_happy(Actions& out);
  void try_first_proposal(std::uint32_t hops, Actions& out);
  void start_view_change(View target, std::optional<EquivocationProof> proof,
                         std::uint32_t hops, bool from_timer, Actions& out);
  void vote_for(const Block& b, std::uint32_t hops, Actions& out);
  std::optional<std::vector<ClientRequest>> take_batch(const QC& parent, Actions& out);
  void enter_view_after(const QC& qc);
  void defer(NodeId from, const Message& m, std::uint32_t hops);
  void drain_deferred(Actions& out);
  void dispatch(NodeId from, const Message& msg, std::uint32_t hops, Actions& out);

  NodeId id_;
  crypto::KeyPair keys_;
  Committee committee_;
  ReplicaOptions options_;
  Pacemaker pacemaker_;
  SimTime now_ = 0;

  View cur_view_ = 1;
  Mode mode_ = Mode::normal;
  View vc_target_ = 0;
  Seq cur_s_ = 0;
  std::optional<UHeader> voted_u_;

  std::vector<Block> chain_;
  std::vector<QC> chain_qcs_;
  std::unordered_map<Hash, Block, HashOf> store_;
  std::map<std::tuple<NodeId, View, Seq>, UHeader> headers_;
  std::map<Seq, QC> certified_;
  std::map<Hash, QC> verified_qcs_;  // statement digest -> a valid certificate
  std::set<Hash> fetching_;

  std::map<std::tuple<View, Seq, Hash>, std::map<NodeId, Vote>> votes_;
  std::map<std::pair<View, Seq>, Hash> my_votes_;
  std::set<View> proposed_views_;

  std::deque<ClientRequest> mempool_;
  std::set<std::pair<ClientId, std::uint64_t>> pending_keys_;
  std::map<std::pair<ClientId, std::uint64_t>, std::pair<Seq, Hash>> committed_keys_;

  std::set<NodeId> blacklist_;

  std::map<View, std::map<NodeId, ViewChangeMsg>> vc_inbox_;
  std::set<View> nv_sent_;
  std::optional<Recovery> nv_;
  std::map<View, QC> ready_certs_;

  struct Deferred {
    NodeId from;
    Message msg;
    std::uint32_t hops;
  };
  std::vector<Deferred> deferred_;
  bool draining_ = false;
};

}  // namespace vbft
