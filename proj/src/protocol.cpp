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

#include "vbft/protocol.hpp"

#include <algorithm>
#include <map>

#include "vbft/errors.hpp"

namespace vbft {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool known_replica(NodeId id, const Committee& c) { return id < c.replica_keys.size(); }

bool strictly_ascending_known(const std::vector<NodeId>& ids, const Committee& c) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!known_replica(ids[i], c)) return false;
    if (i > 0 && ids[i - 1] >= ids[i]) return false;
  }
  return true;
}

// Verifies an aggregate where every signer signed the same digest.
bool verify_uniform(const AggregateSignature& agg, const Hash& digest, const Committee& c) {
  if (agg.signers.size() < c.config.quorum || !strictly_ascending_known(agg.signers, c)) {
    return false;
  }
  std::vector<crypto::VerifyItem> items;
  items.reserve(agg.signers.size());
  for (auto s : agg.signers) items.push_back({digest, c.replica_keys[s]});
  return crypto::verify_aggregate(agg, items);
}

}  // namespace

NodeId primary_of(View view, const Config& config) {
  if (config.primary_mode == PrimaryMode::round_robin) {
    return static_cast<NodeId>(view % config.n);
  }
  return static_cast<NodeId>(splitmix64(config.primary_seed ^ splitmix64(view)) % config.n);
}

Block create_prepare_msg(View v, Seq s, const Hash& parent_hash, const QC& qc_parent,
                         std::optional<NegativeQC> qc_nr, std::vector<ClientRequest> commands,
                         const crypto::KeyPair& proposer) {
  if (qc_parent.kind != QcKind::block || qc_parent.block_hash != parent_hash) {
    throw ConstructionError("create_prepare_msg: qc_parent does not certify the parent");
  }
  if (s != qc_parent.seq + 1) {
    throw ConstructionError("create_prepare_msg: seq " + std::to_string(s) +
                            " does not follow qc seq " + std::to_string(qc_parent.seq));
  }
  Block b;
  b.header.view = v;
  b.header.seq = s;
  b.header.parent_hash = parent_hash;
  b.header.payload_hash = payload_hash(commands);
  b.header.proposer = proposer.node_id;
  b.header_sig = crypto::sign(proposer.secret, header_digest(b.header));
  b.qc_parent = qc_parent;
  b.qc_nr = std::move(qc_nr);
  b.commands = std::move(commands);
  return b;
}

Vote make_vote(const Block& block, View view, const crypto::KeyPair& voter) {
  Vote v;
  v.view = view;
  v.seq = block.header.seq;
  v.block_hash = block.id();
  v.parent_hash = block.header.parent_hash;
  v.voter = voter.node_id;
  v.sig = crypto::sign(voter.secret, vote_digest(v));
  return v;
}

QC generate_qc(std::span<const Vote> votes, const Committee& committee) {
  if (votes.empty()) throw QuorumError("generate_qc: no votes");
  const auto& first = votes.front();
  std::vector<crypto::AggregatePart> parts;
  for (const auto& v : votes) {
    if (v.view != first.view || v.seq != first.seq || v.block_hash != first.block_hash) {
      throw InputError("generate_qc: votes target different blocks");
    }
    parts.push_back({vote_digest(v), v.sig, v.voter});
  }
  std::vector<NodeId> voters;
  for (const auto& v : votes) voters.push_back(v.voter);
  std::sort(voters.begin(), voters.end());
  if (std::adjacent_find(voters.begin(), voters.end()) != voters.end()) {
    throw InputError("generate_qc: duplicate voter");
  }
  if (votes.size() < committee.config.quorum) {
    throw QuorumError("generate_qc: " + std::to_string(votes.size()) + " votes, need " +
                      std::to_string(committee.config.quorum));
  }
  QC qc;
  qc.kind = QcKind::block;
  qc.view = first.view;
  qc.seq = first.seq;
  qc.block_hash = first.block_hash;
  qc.agg = crypto::aggregate(parts, committee.replica_keys);
  return qc;
}

ViewChangeMsg make_view_change(View next_view, QC qc_latest, std::optional<UHeader> u,
                               std::optional<EquivocationProof> proof,
                               const crypto::KeyPair& sender) {
  ViewChangeMsg vc;
  vc.next_view = next_view;
  vc.qc_latest = std::move(qc_latest);
  vc.u = std::move(u);
  vc.proof = std::move(proof);
  vc.sender = sender.node_id;
  vc.sig = crypto::sign(sender.secret, view_change_digest(vc));
  return vc;
}

AggQC create_agg_qc(std::span<const ViewChangeMsg> vcs, const Committee& committee) {
  if (vcs.empty()) throw QuorumError("create_agg_qc: no messages");
  AggQC agg;
  agg.view = vcs.front().next_view;
  agg.entries.assign(vcs.begin(), vcs.end());
  for (const auto& vc : agg.entries) {
    if (vc.next_view != agg.view) throw InputError("create_agg_qc: next_view mismatch");
  }
  std::sort(agg.entries.begin(), agg.entries.end(),
            [](const auto& a, const auto& b) { return a.sender < b.sender; });
  for (std::size_t i = 1; i < agg.entries.size(); ++i) {
    if (agg.entries[i - 1].sender == agg.entries[i].sender) {
      throw InputError("create_agg_qc: duplicate sender");
    }
  }
  if (agg.entries.size() < committee.config.quorum) {
    throw QuorumError("create_agg_qc: " + std::to_string(agg.entries.size()) +
                      " messages, need " + std::to_string(committee.config.quorum));
  }
  std::vector<crypto::AggregatePart> parts;
  for (const auto& vc : agg.entries) parts.push_back({view_change_digest(vc), vc.sig, vc.sender});
  agg.agg = crypto::aggregate(parts, committee.replica_keys);
  return agg;
}

const QC& high_qc(const AggQC& aggqc) {
  if (aggqc.entries.empty()) throw InputError("high_qc: empty AggQC");
  const QC* best = &aggqc.entries.front().qc_latest;
  for (const auto& e : aggqc.entries) {
    const QC& q = e.qc_latest;
    if (q.seq == best->seq && q.view == best->view && q.block_hash != best->block_hash) {
      throw ProtocolViolation("high_qc: conflicting certificates at seq " + std::to_string(q.seq));
    }
    if (std::tie(q.seq, q.view) > std::tie(best->seq, best->view)) best = &q;
  }
  return *best;
}

std::vector<UHeader> relevant_us(const AggQC& aggqc) {
  const QC& high = high_qc(aggqc);
  std::vector<UHeader> out;
  View top = 0;
  for (const auto& e : aggqc.entries) {
    if (!e.u) continue;
    const auto& h = e.u->header;
    if (h.seq != high.seq + 1 || h.parent_hash != high.block_hash) continue;
    if (out.empty() || h.view > top) {
      out.clear();
      top = h.view;
    }
    if (h.view == top) out.push_back(*e.u);
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.block_id() < b.block_id(); });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const auto& a, const auto& b) { return a.block_id() == b.block_id(); }),
            out.end());
  return out;
}

NewViewMsg create_nv_msg(AggQC aggqc, View next_view,
                         const std::function<bool(const Hash&)>& has_payload) {
  NewViewMsg nv;
  nv.view = next_view;
  for (const auto& u : relevant_us(aggqc)) {
    if (!has_payload(u.block_id())) nv.need_payload = true;
  }
  nv.aggqc = std::move(aggqc);
  return nv;
}

NegativeResponse make_negative(View view, const Hash& u_hash, const crypto::KeyPair& sender) {
  NegativeResponse nr;
  nr.view = view;
  nr.u_hash = u_hash;
  nr.sender = sender.node_id;
  nr.sig = crypto::sign(sender.secret, negative_digest(view, u_hash));
  return nr;
}

NegativeQC create_negative_qc(std::span<const NegativeResponse> nrs, const Committee& committee) {
  if (nrs.size() < committee.config.quorum) {
    throw QuorumError("create_negative_qc: " + std::to_string(nrs.size()) + " responses");
  }
  NegativeQC qc;
  qc.view = nrs.front().view;
  qc.u_hash = nrs.front().u_hash;
  std::vector<crypto::AggregatePart> parts;
  for (const auto& nr : nrs) {
    if (nr.view != qc.view || nr.u_hash != qc.u_hash) {
      throw InputError("create_negative_qc: responses refute different headers");
    }
    parts.push_back({negative_digest(nr.view, nr.u_hash), nr.sig, nr.sender});
  }
  qc.agg = crypto::aggregate(parts, committee.replica_keys);
  return qc;
}

ReadyMsg make_ready(View view, const QC& high, const crypto::KeyPair& sender) {
  ReadyMsg r;
  r.view = view;
  r.high_seq = high.seq;
  r.high_hash = high.block_hash;
  r.sender = sender.node_id;
  r.sig = crypto::sign(sender.secret, ready_digest(r));
  return r;
}

QC create_ready_qc(std::span<const ReadyMsg> readys, const Committee& committee) {
  if (readys.size() < committee.config.quorum) {
    throw QuorumError("create_ready_qc: " + std::to_string(readys.size()) + " ready messages");
  }
  QC qc;
  qc.kind = QcKind::ready;
  qc.view = readys.front().view;
  qc.seq = readys.front().high_seq;
  qc.block_hash = readys.front().high_hash;
  std::vector<crypto::AggregatePart> parts;
  for (const auto& r : readys) {
    if (r.view != qc.view || r.high_seq != qc.seq || r.high_hash != qc.block_hash) {
      throw InputError("create_ready_qc: ready messages disagree");
    }
    parts.push_back({ready_digest(r), r.sig, r.sender});
  }
  qc.agg = crypto::aggregate(parts, committee.replica_keys);
  return qc;
}

ClientRequest make_request(ClientId client, std::uint64_t timestamp, std::string op,
                           const crypto::KeyPair& key) {
  ClientRequest r;
  r.client = client;
  r.timestamp = timestamp;
  r.op = std::move(op);
  r.sig = crypto::sign(key.secret, request_digest(r));
  return r;
}

EquivocationProof make_proof(const UHeader& a, const UHeader& b) {
  return EquivocationProof{a.header, b.header, a.header_sig, b.header_sig};
}

bool is_equivocation(const BlockHeader& a, const BlockHeader& b) {
  return a.proposer == b.proposer && a.view == b.view && a.seq == b.seq &&
         block_id(a.seq, a.parent_hash, a.payload_hash) !=
             block_id(b.seq, b.parent_hash, b.payload_hash);
}

bool verify_qc(const QC& qc, const Committee& committee) {
  return verify_uniform(qc.agg, qc_digest(qc), committee);
}

bool verify_negative_qc(const NegativeQC& qc, const Committee& committee) {
  return verify_uniform(qc.agg, negative_digest(qc.view, qc.u_hash), committee);
}

bool verify_header(const BlockHeader& h, const Signature& sig, const Committee& committee) {
  return known_replica(h.proposer, committee) &&
         crypto::verify(committee.replica_keys[h.proposer], header_digest(h), sig);
}

bool verify_vote(const Vote& v, const Committee& committee) {
  return known_replica(v.voter, committee) &&
         crypto::verify(committee.replica_keys[v.voter], vote_digest(v), v.sig);
}

bool verify_view_change(const ViewChangeMsg& vc, const Committee& committee) {
  if (!known_replica(vc.sender, committee)) return false;
  if (vc.u && vc.u->header.seq <= vc.qc_latest.seq) return false;
  return crypto::verify(committee.replica_keys[vc.sender], view_change_digest(vc), vc.sig);
}

bool verify_negative(const NegativeResponse& nr, const Committee& committee) {
  return known_replica(nr.sender, committee) &&
         crypto::verify(committee.replica_keys[nr.sender], negative_digest(nr.view, nr.u_hash),
                        nr.sig);
}

bool verify_ready(const ReadyMsg& r, const Committee& committee) {
  return known_replica(r.sender, committee) &&
         crypto::verify(committee.replica_keys[r.sender], ready_digest(r), r.sig);
}

bool verify_request(const ClientRequest& r, const Committee& committee) {
  return r.client < committee.client_keys.size() &&
         crypto::verify(committee.client_keys[r.client], request_digest(r), r.sig);
}

bool verify_equivocation_proof(const EquivocationProof& p, const Committee& committee) {
  return is_equivocation(p.header_a, p.header_b) &&
         verify_header(p.header_a, p.sig_a, committee) &&
         verify_header(p.header_b, p.sig_b, committee);
}

bool verify_new_view(const NewViewMsg& nv, const Committee& committee, VerifyMode mode) {
  const auto& agg = nv.aggqc;
  if (agg.view != nv.view || agg.entries.size() < committee.config.quorum) return false;
  if (agg.entries.size() != agg.agg.signers.size()) return false;
  for (std::size_t i = 0; i < agg.entries.size(); ++i) {
    const auto& e = agg.entries[i];
    if (e.sender != agg.agg.signers[i] || e.next_view != nv.view) return false;
    if (e.qc_latest.kind != QcKind::block) return false;
    if (e.u && e.u->header.seq <= e.qc_latest.seq) return false;
  }
  if (!strictly_ascending_known(agg.agg.signers, committee)) return false;

  if (mode == VerifyMode::linear) {
    std::vector<crypto::VerifyItem> items;
    items.reserve(agg.entries.size());
    for (const auto& e : agg.entries) {
      items.push_back({view_change_digest(e), committee.replica_keys[e.sender]});
    }
    if (!crypto::verify_aggregate(agg.agg, items)) return false;
    const QC* high = nullptr;
    try {
      high = &high_qc(agg);
    } catch (const ProtocolViolation&) {
      return false;
    }
    if (!verify_qc(*high, committee)) return false;
  } else {
    for (const auto& e : agg.entries) {
      if (!crypto::verify(committee.replica_keys[e.sender], view_change_digest(e), e.sig)) {
        return false;
      }
    }
    bool ok = true;
    for (const auto& e : agg.entries) ok = verify_qc(e.qc_latest, committee) && ok;
    if (!ok) return false;
    try {
      (void)high_qc(agg);
    } catch (const ProtocolViolation&) {
      return false;
    }
  }

  // U headers must be signed by the primary of their view.
  for (const auto& e : agg.entries) {
    if (!e.u) continue;
    const auto& h = e.u->header;
    if (h.proposer != primary_of(h.view, committee.config)) return false;
    if (!verify_header(h, e.u->header_sig, committee)) return false;
  }
  return true;
}

}  // namespace vbft
