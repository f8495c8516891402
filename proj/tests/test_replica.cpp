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

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "vbft/replica.hpp"

using namespace vbft;
using vbft::testing::World;

namespace {

template <typename A>
std::vector<A> actions_of(const Actions& out) {
  std::vector<A> r;
  for (const auto& a : out)
    if (auto p = std::get_if<A>(&a)) r.push_back(*p);
  return r;
}

// Messages of type M inside Broadcast actions.
template <typename M>
std::vector<M> broadcasts(const Actions& out) {
  std::vector<M> r;
  for (const auto& b : actions_of<action::Broadcast>(out))
    if (auto p = std::get_if<M>(&b.msg)) r.push_back(*p);
  return r;
}

template <typename M>
std::vector<std::pair<NodeId, M>> sends(const Actions& out) {
  std::vector<std::pair<NodeId, M>> r;
  for (const auto& s : actions_of<action::Send>(out))
    if (auto p = std::get_if<M>(&s.msg)) r.emplace_back(s.to, *p);
  return r;
}

Replica make(const World& w, NodeId id, ReplicaOptions o = {}) {
  return Replica(id, w.keys[id], w.committee, w.genesis, o);
}

// Feeds a chain's proposals in order; every block except the last commits
// through the next block's parent certificate.
Actions feed(Replica& r, const std::vector<std::pair<Block, QC>>& chain) {
  Actions all;
  for (const auto& [b, _] : chain) {
    Actions out;
    r.on_proposal(b.header.proposer, b, 1, out);
    all.insert(all.end(), out.begin(), out.end());
  }
  return all;
}

void vote_in(Replica& r, const World& w, const Block& b, View v, std::vector<NodeId> voters,
             Actions& out) {
  for (NodeId i : voters) r.on_vote(i, make_vote(b, v, w.keys[i]), 1, out);
}

std::vector<ViewChangeMsg> vcs_for(const World& w, View next, const std::vector<NodeId>& senders,
                                   const QC& latest, std::optional<UHeader> u = std::nullopt) {
  std::vector<ViewChangeMsg> r;
  for (NodeId s : senders) r.push_back(make_view_change(next, latest, u, std::nullopt, w.keys[s]));
  return r;
}

// Node 2 (primary of view 2) after collecting VCs from `senders` and
// adopting its own new-view message.
struct Recovering {
  World w;
  Replica p;
  NewViewMsg nv;

  explicit Recovering(std::optional<UHeader> u, ReplicaOptions o = {}) : p(make(w, 2, o)) {
    Actions out;
    for (const auto& vc : vcs_for(w, 2, {0, 1, 3}, w.genesis, u)) p.on_view_change_msg(vc.sender, vc, 1, out);
    auto nvs = broadcasts<NewViewMsg>(out);
    EXPECT_EQ(nvs.size(), 1u);
    nv = nvs.at(0);
    Actions adopt;
    p.on_new_view(2, nv, 1, adopt);
    auto own = sends<ReadyMsg>(adopt);
    EXPECT_EQ(own.size(), 1u);
    Actions self;
    p.on_ready(2, own.at(0).second, 1, self);
  }

  ReadyMsg ready_from(NodeId i, bool payload_known, const Block* body) const {
    ReadyMsg r = make_ready(2, w.genesis, w.keys[i]);
    if (!nv.need_payload) return r;
    for (const auto& u : relevant_us(nv.aggqc)) {
      if (payload_known && body) r.payloads.push_back(*body);
      else r.negatives.push_back(make_negative(2, u.block_id(), w.keys[i]));
    }
    return r;
  }
};

}  // namespace

// ---- client requests ----------------------------------------------------------

TEST(ClientRequest, FreshThenDuplicate) {
  World w;
  Replica r = make(w, 0);
  Actions out;
  r.on_client_request(w.request(0, 1), out);
  EXPECT_EQ(r.mempool_size(), 1u);
  r.on_client_request(w.request(0, 1), out);
  EXPECT_EQ(r.mempool_size(), 1u);
  ClientRequest forged = w.request(1, 1);
  forged.op = "steal";
  r.on_client_request(forged, out);
  EXPECT_EQ(r.mempool_size(), 1u);
  EXPECT_TRUE(out.empty());
}

TEST(ClientRequest, CommittedRequestIsRepliedAgain) {
  World w;
  Replica r = make(w, 0);
  ClientRequest req = w.request(1, 4, "pay");
  Actions out;
  r.on_client_request(req, out);
  Block b = w.propose(1, w.genesis, {req});
  r.on_proposal(1, b, 1, out);
  vote_in(r, w, b, 1, {0, 1, 2}, out);
  ASSERT_EQ(r.height(), 1u);
  EXPECT_EQ(r.mempool_size(), 0u);

  Actions again;
  r.on_client_request(req, again);
  auto replies = actions_of<action::SendReply>(again);
  ASSERT_EQ(replies.size(), 1u);
  EXPECT_EQ(replies[0].reply.seq, 1u);
  EXPECT_EQ(replies[0].reply.block_hash, b.id());
  EXPECT_EQ(replies[0].reply.client, 1u);
  EXPECT_EQ(r.mempool_size(), 0u);
}

// ---- proposals and votes ------------------------------------------------------

TEST(Proposal, FirstValidProposalAtSeqSixGetsOneVote) {
  World w;
  Replica r = make(w, 0);
  auto c = w.chain(6);
  Actions out = feed(r, c);
  EXPECT_EQ(r.height(), 5u);
  auto votes = broadcasts<Vote>(out);
  ASSERT_EQ(votes.size(), 6u);
  EXPECT_EQ(votes.back().seq, 6u);
  EXPECT_EQ(votes.back().block_hash, c[5].first.id());
  ASSERT_TRUE(r.voted_u());
  EXPECT_EQ(r.voted_u()->header, c[5].first.header);
  EXPECT_EQ(r.cur_seq(), 6u);
}

TEST(Proposal, EquivocationGivesProofAndViewChangeWithoutVote) {
  World w;
  Replica r = make(w, 0);
  auto c = w.chain(6);
  feed(r, c);
  Block other = w.propose(6, c[4].second, {w.request(0, 1)});
  ASSERT_TRUE(is_equivocation(other.header, c[5].first.header));

  Actions out;
  r.on_proposal(other.header.proposer, other, 1, out);
  EXPECT_TRUE(broadcasts<Vote>(out).empty());
  auto proofs = broadcasts<EquivocationProof>(out);
  ASSERT_EQ(proofs.size(), 1u);
  EXPECT_TRUE(verify_equivocation_proof(proofs[0], w.committee));
  auto vcs = broadcasts<ViewChangeMsg>(out);
  ASSERT_EQ(vcs.size(), 1u);
  EXPECT_TRUE(vcs[0].proof.has_value());
  EXPECT_EQ(vcs[0].next_view, 7u);
  EXPECT_TRUE(r.blacklist().contains(other.header.proposer));
  EXPECT_EQ(r.mode(), Mode::view_change);
}

TEST(Proposal, BlacklistedProposerIsIgnored) {
  World w;
  Replica r = make(w, 0);
  Block a = w.propose(2, w.genesis);
  Block b = w.propose(2, w.genesis, {w.request(0, 1)});
  Actions out;
  r.on_equivocation_proof(make_proof(w.u_of(a), w.u_of(b)), 1, out);
  EXPECT_EQ(r.blacklist().size(), 1u);
  EXPECT_EQ(actions_of<action::ScheduleBlacklist>(out).size(), 1u);

  Actions again;
  r.on_equivocation_proof(make_proof(w.u_of(a), w.u_of(b)), 1, again);
  EXPECT_EQ(r.blacklist().size(), 1u);
  EXPECT_TRUE(again.empty());

  Block later = w.propose(6, w.genesis);  // view 6 -> node 2
  EXPECT_EQ(r.safety_check(later), SafetyVerdict::reject_policy);
  Actions none;
  r.on_proposal(2, later, 1, none);
  EXPECT_TRUE(broadcasts<Vote>(none).empty());
}

TEST(Proposal, WrongProposerAndStaleSeq) {
  World w;
  Replica r = make(w, 0);
  Block b = create_prepare_msg(1, 1, w.genesis.block_hash, w.genesis, std::nullopt, {}, w.keys[3]);
  EXPECT_EQ(r.safety_check(b), SafetyVerdict::reject_policy);

  Block ok = w.propose(1, w.genesis);
  Actions out;
  r.on_proposal(1, ok, 1, out);
  ASSERT_EQ(broadcasts<Vote>(out).size(), 1u);
  Block rival = w.propose(1, w.genesis, {w.request(0, 2)});
  EXPECT_EQ(r.safety_check(rival), SafetyVerdict::reject_stale);
}

TEST(Proposal, FutureViewIsDeferredUntilReached) {
  World w;
  Replica r = make(w, 0);
  auto c = w.chain(2);
  Actions out;
  r.on_proposal(2, c[1].first, 1, out);
  EXPECT_TRUE(broadcasts<Vote>(out).empty());
  EXPECT_EQ(r.safety_check(c[1].first), SafetyVerdict::defer);
  // The block 1 body arrives; the deferred proposal is retried.
  Actions more = r.on_message(1, c[0].first, 1, 5);
  auto votes = broadcasts<Vote>(more);
  ASSERT_EQ(votes.size(), 2u);
  EXPECT_EQ(votes[1].seq, 2u);
  EXPECT_EQ(r.height(), 1u);
}

TEST(Vote, QuorumCommitsAndReplies) {
  World w;
  Replica r = make(w, 3);
  Block b = w.propose(1, w.genesis, {w.request(0, 1), w.request(1, 1)});
  Actions out;
  r.on_proposal(1, b, 1, out);
  vote_in(r, w, b, 1, {0, 1}, out);
  EXPECT_TRUE(actions_of<action::Commit>(out).empty());
  vote_in(r, w, b, 1, {2}, out);
  auto commits = actions_of<action::Commit>(out);
  ASSERT_EQ(commits.size(), 1u);
  EXPECT_EQ(commits[0].block.id(), b.id());
  EXPECT_TRUE(verify_qc(commits[0].qc, w.committee));
  EXPECT_EQ(actions_of<action::SendReply>(out).size(), 2u);
  EXPECT_EQ(r.cur_view(), 2u);
  EXPECT_FALSE(r.voted_u());
}

TEST(Vote, DuplicateVoterDoesNotReachQuorum) {
  World w;
  Replica r = make(w, 3);
  Block b = w.propose(1, w.genesis);
  Actions out;
  r.on_proposal(1, b, 1, out);
  vote_in(r, w, b, 1, {0, 1, 1}, out);
  EXPECT_TRUE(actions_of<action::Commit>(out).empty());
  // A vote relayed by someone other than its voter is dropped.
  r.on_vote(0, make_vote(b, 1, w.keys[2]), 1, out);
  EXPECT_TRUE(actions_of<action::Commit>(out).empty());
  EXPECT_EQ(r.height(), 0u);
}

// ---- timeouts and view change -------------------------------------------------

TEST(Timeout, WithoutPendingVoteCarriesNoU) {
  World w;
  Replica r = make(w, 0);
  Actions start = r.start(0);
  auto timers = actions_of<action::StartTimer>(start);
  ASSERT_EQ(timers.size(), 1u);
  Actions out = r.on_timer(timers[0].epoch, timers[0].deadline);
  auto vcs = broadcasts<ViewChangeMsg>(out);
  ASSERT_EQ(vcs.size(), 1u);
  EXPECT_EQ(vcs[0].next_view, 2u);
  EXPECT_FALSE(vcs[0].u.has_value());
  EXPECT_EQ(vcs[0].qc_latest, w.genesis);
  auto started = actions_of<action::ViewChangeStarted>(out);
  ASSERT_EQ(started.size(), 1u);
  EXPECT_TRUE(started[0].from_timer);
  EXPECT_EQ(r.pacemaker().current_timeout(), 2 * w.config.timeout_base);
}

TEST(Timeout, AfterVotingCarriesTheVotedHeader) {
  World w;
  Replica r = make(w, 0);
  Actions start = r.start(0);
  Block b = w.propose(1, w.genesis, {w.request(0, 1)});
  Actions out;
  r.on_proposal(1, b, 1, out);
  auto t = actions_of<action::StartTimer>(start).at(0);
  Actions fired = r.on_timer(t.epoch, t.deadline);
  auto vcs = broadcasts<ViewChangeMsg>(fired);
  ASSERT_EQ(vcs.size(), 1u);
  ASSERT_TRUE(vcs[0].u.has_value());
  EXPECT_EQ(vcs[0].u->block_id(), b.id());
}

TEST(Timeout, ProofTriggersImmediateViewChange) {
  World w;
  Replica r = make(w, 0);
  Block a = w.propose(1, w.genesis);
  Block b = w.propose(1, w.genesis, {w.request(0, 1)});
  Actions out;
  r.on_equivocation_proof(make_proof(w.u_of(a), w.u_of(b)), 1, out);
  auto vcs = broadcasts<ViewChangeMsg>(out);
  ASSERT_EQ(vcs.size(), 1u);
  EXPECT_TRUE(vcs[0].proof.has_value());
  EXPECT_EQ(vcs[0].next_view, 2u);
  auto started = actions_of<action::ViewChangeStarted>(out);
  ASSERT_EQ(started.size(), 1u);
  EXPECT_FALSE(started[0].from_timer);
}

TEST(ViewChange, NextPrimaryBuildsOneNewView) {
  World w;
  Replica p = make(w, 2);
  Actions out;
  for (const auto& vc : vcs_for(w, 2, {0, 1, 3}, w.genesis)) p.on_view_change_msg(vc.sender, vc, 1, out);
  auto nvs = broadcasts<NewViewMsg>(out);
  ASSERT_EQ(nvs.size(), 1u);
  EXPECT_EQ(nvs[0].view, 2u);
  EXPECT_TRUE(verify_new_view(nvs[0], w.committee, VerifyMode::linear));
  EXPECT_FALSE(nvs[0].need_payload);
}

TEST(ViewChange, OtherReplicasOnlyAmplify) {
  World w;
  Replica r = make(w, 3);
  Actions out;
  auto vcs = vcs_for(w, 2, {0, 1, 2}, w.genesis);
  r.on_view_change_msg(0, vcs[0], 1, out);
  EXPECT_TRUE(broadcasts<ViewChangeMsg>(out).empty());
  r.on_view_change_msg(1, vcs[1], 1, out);
  auto mine = broadcasts<ViewChangeMsg>(out);
  ASSERT_EQ(mine.size(), 1u);
  EXPECT_EQ(mine[0].sender, 3u);
  EXPECT_EQ(mine[0].next_view, 2u);
  r.on_view_change_msg(2, vcs[2], 1, out);
  EXPECT_TRUE(broadcasts<NewViewMsg>(out).empty());
}

TEST(NewView, ReadyWithoutPayloadRequest) {
  World w;
  Replica r = make(w, 0);
  NewViewMsg nv{2, create_agg_qc(vcs_for(w, 2, {1, 2, 3}, w.genesis), w.committee), false};
  Actions out;
  r.on_new_view(2, nv, 1, out);
  auto processed = actions_of<action::NewViewProcessed>(out);
  ASSERT_EQ(processed.size(), 1u);
  EXPECT_TRUE(processed[0].accepted);
  EXPECT_EQ(processed[0].aggregate_verifies, 2u);
  auto readys = sends<ReadyMsg>(out);
  ASSERT_EQ(readys.size(), 1u);
  EXPECT_EQ(readys[0].first, 2u);
  EXPECT_TRUE(readys[0].second.payloads.empty());
  EXPECT_TRUE(readys[0].second.negatives.empty());
  EXPECT_EQ(r.cur_view(), 2u);
  EXPECT_EQ(r.mode(), Mode::normal);
}

TEST(NewView, PayloadHeldOrRefuted) {
  World w;
  Block u = w.propose(1, w.genesis, {w.request(0, 1)});
  auto vcs = vcs_for(w, 2, {1, 2, 3}, w.genesis, w.u_of(u));
  NewViewMsg nv = create_nv_msg(create_agg_qc(vcs, w.committee), 2,
                                [](const Hash&) { return false; });
  ASSERT_TRUE(nv.need_payload);

  Replica holder = make(w, 0);
  Actions out;
  holder.on_proposal(1, u, 1, out);
  Actions a;
  holder.on_new_view(2, nv, 1, a);
  auto ra = sends<ReadyMsg>(a);
  ASSERT_EQ(ra.size(), 1u);
  ASSERT_EQ(ra[0].second.payloads.size(), 1u);
  EXPECT_EQ(ra[0].second.payloads[0].id(), u.id());
  EXPECT_TRUE(ra[0].second.negatives.empty());

  Replica stranger = make(w, 0);
  Actions b;
  stranger.on_new_view(2, nv, 1, b);
  auto rb = sends<ReadyMsg>(b);
  ASSERT_EQ(rb.size(), 1u);
  EXPECT_TRUE(rb[0].second.payloads.empty());
  ASSERT_EQ(rb[0].second.negatives.size(), 1u);
  EXPECT_EQ(rb[0].second.negatives[0].u_hash, u.id());
}

TEST(NewView, ForgedMessageTriggersViewChange) {
  World w;
  Replica r = make(w, 0);
  r.start(0);
  NewViewMsg nv{2, create_agg_qc(vcs_for(w, 2, {1, 2, 3}, w.genesis), w.committee), false};
  nv.aggqc.entries[0].next_view = 3;
  Actions out;
  r.on_new_view(2, nv, 1, out);
  auto processed = actions_of<action::NewViewProcessed>(out);
  ASSERT_EQ(processed.size(), 1u);
  EXPECT_FALSE(processed[0].accepted);
  EXPECT_TRUE(sends<ReadyMsg>(out).empty());
}

TEST(Ready, QuorumGivesFirstProposal) {
  Recovering s(std::nullopt);
  Actions out;
  s.p.on_ready(0, s.ready_from(0, false, nullptr), 1, out);
  EXPECT_TRUE(broadcasts<Block>(out).empty());
  s.p.on_ready(1, s.ready_from(1, false, nullptr), 1, out);
  auto blocks = broadcasts<Block>(out);
  ASSERT_EQ(blocks.size(), 1u);
  const Block& b = blocks[0];
  EXPECT_EQ(b.header.view, 2u);
  EXPECT_EQ(b.header.seq, 1u);
  ASSERT_TRUE(b.qc_ready.has_value());
  EXPECT_EQ(b.qc_ready->kind, QcKind::ready);
  EXPECT_TRUE(verify_qc(*b.qc_ready, s.w.committee));
  EXPECT_FALSE(b.qc_nr.has_value());
}

TEST(Ready, BaseModeBroadcastsReadyCertFirst) {
  ReplicaOptions o;
  o.piggyback = false;
  Recovering s(std::nullopt, o);
  Actions out;
  s.p.on_ready(0, s.ready_from(0, false, nullptr), 1, out);
  s.p.on_ready(1, s.ready_from(1, false, nullptr), 1, out);
  EXPECT_TRUE(broadcasts<Block>(out).empty());
  auto certs = broadcasts<ReadyCert>(out);
  ASSERT_EQ(certs.size(), 1u);
  Actions self;
  s.p.on_ready_cert(2, certs[0], 1, self);
  EXPECT_EQ(broadcasts<Block>(self).size(), 1u);
}

TEST(Ready, AllNegativeGivesNegativeQc) {
  World w;
  Block u = w.propose(1, w.genesis, {w.request(0, 1)});
  Recovering s(w.u_of(u));
  ASSERT_TRUE(s.nv.need_payload);
  Actions out;
  s.p.on_ready(0, s.ready_from(0, false, nullptr), 1, out);
  s.p.on_ready(1, s.ready_from(1, false, nullptr), 1, out);
  auto blocks = broadcasts<Block>(out);
  ASSERT_EQ(blocks.size(), 1u);
  const Block& b = blocks[0];
  ASSERT_TRUE(b.qc_nr.has_value());
  EXPECT_EQ(b.qc_nr->u_hash, u.id());
  EXPECT_TRUE(verify_negative_qc(*b.qc_nr, s.w.committee));
  EXPECT_EQ(b.header.parent_hash, s.w.genesis.block_hash);
  EXPECT_NE(b.id(), u.id());
}

TEST(Ready, PayloadInAnyReadyIsReproposed) {
  World w;
  Block u = w.propose(1, w.genesis, {w.request(0, 1)});
  Recovering s(w.u_of(u));
  Actions out;
  s.p.on_ready(0, s.ready_from(0, false, nullptr), 1, out);
  s.p.on_ready(1, s.ready_from(1, true, &u), 1, out);
  auto blocks = broadcasts<Block>(out);
  ASSERT_EQ(blocks.size(), 1u);
  EXPECT_EQ(blocks[0].id(), u.id());
  EXPECT_EQ(blocks[0].header.view, 2u);
  EXPECT_EQ(blocks[0].header.payload_hash, u.header.payload_hash);
  EXPECT_FALSE(blocks[0].qc_nr.has_value());
}

TEST(Ready, MissingUWithoutPayloadFromRecoveryIsRejected) {
  World w;
  Block u = w.propose(1, w.genesis, {w.request(0, 1)});
  auto vcs = vcs_for(w, 2, {1, 2, 3}, w.genesis, w.u_of(u));
  NewViewMsg nv = create_nv_msg(create_agg_qc(vcs, w.committee), 2,
                                [](const Hash&) { return true; });
  Replica r = make(w, 0);
  Actions out;
  r.on_new_view(2, nv, 1, out);
  std::vector<ReadyMsg> rs;
  for (NodeId i : {1u, 2u, 3u}) rs.push_back(make_ready(2, w.genesis, w.keys[i]));
  QC qr = create_ready_qc(rs, w.committee);
  // Extends highQC with fresh commands: neither U's payload nor a negative QC.
  Block bad = create_prepare_msg(2, 1, w.genesis.block_hash, w.genesis, std::nullopt,
                                 {w.request(1, 7)}, w.keys[2]);
  bad.qc_ready = qr;
  EXPECT_EQ(r.safety_check(bad), SafetyVerdict::reject_invalid);
  Actions reaction;
  r.on_proposal(2, bad, 1, reaction);
  EXPECT_TRUE(broadcasts<Vote>(reaction).empty());
  EXPECT_EQ(broadcasts<ViewChangeMsg>(reaction).size(), 1u);
}

TEST(PayloadRequest, SendsBodyOrNegative) {
  World w;
  Block u = w.propose(1, w.genesis, {w.request(0, 1)});
  Replica voter = make(w, 0);
  Actions out;
  voter.on_proposal(1, u, 1, out);
  Actions a;
  voter.on_payload_request(2, PayloadRequest{2, {u.id()}}, 1, a);
  auto bodies = sends<PayloadResponse>(a);
  ASSERT_EQ(bodies.size(), 1u);
  EXPECT_EQ(bodies[0].second.block.id(), u.id());

  Replica other = make(w, 3);
  Actions b;
  other.on_payload_request(2, PayloadRequest{2, {u.id()}}, 1, b);
  auto negs = sends<NegativeResponse>(b);
  ASSERT_EQ(negs.size(), 1u);
  EXPECT_EQ(negs[0].second.u_hash, u.id());
  EXPECT_TRUE(verify_negative(negs[0].second, w.committee));

  Actions c;
  other.on_payload_request(1, PayloadRequest{2, {u.id()}}, 1, c);  // not view 2's primary
  EXPECT_TRUE(c.empty());
}

TEST(Fetch, AnswersOnlyForHeldBlocks) {
  World w;
  Block u = w.propose(1, w.genesis);
  Replica r = make(w, 0);
  Actions out;
  r.on_proposal(1, u, 1, out);
  Actions a;
  r.on_fetch_request(3, FetchRequest{{u.id(), crypto::sha256("nothing")}}, a);
  auto resp = sends<FetchResponse>(a);
  ASSERT_EQ(resp.size(), 1u);
  EXPECT_EQ(resp[0].second.blocks.size(), 1u);
  Actions b;
  r.on_fetch_request(3, FetchRequest{{crypto::sha256("nothing")}}, b);
  EXPECT_TRUE(b.empty());
}
