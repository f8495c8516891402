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

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "vbft/crypto.hpp"
#include "vbft/types.hpp"

namespace vbft {

// linear: AggQC aggregate + highQC aggregate (2 per new-view message).
// quadratic: every entry signature and every entry QC (2f+1 aggregates).
enum class VerifyMode : std::uint8_t { linear, quadratic };

// Deterministic view -> primary map shared by all replicas.
NodeId primary_of(View view, const Config& config);

// Builds and signs a proposal. Throws ConstructionError when qc_parent does
// not certify parent_hash or when s != qc_parent.seq + 1.
Block create_prepare_msg(View v, Seq s, const Hash& parent_hash, const QC& qc_parent,
                         std::optional<NegativeQC> qc_nr, std::vector<ClientRequest> commands,
                         const crypto::KeyPair& proposer);

Vote make_vote(const Block& block, View view, const crypto::KeyPair& voter);

// Votes must share (view, seq, block_hash) and come from distinct voters.
// Throws InputError on mixed targets or duplicates, QuorumError below 2f+1.
QC generate_qc(std::span<const Vote> votes, const Committee& committee);

ViewChangeMsg make_view_change(View next_view, QC qc_latest, std::optional<UHeader> u,
                               std::optional<EquivocationProof> proof,
                               const crypto::KeyPair& sender);

// Needs >= 2f+1 messages with one next_view and distinct senders.
AggQC create_agg_qc(std::span<const ViewChangeMsg> vcs, const Committee& committee);

// Entry QC with the greatest (seq, view). Two entries with equal seq and view
// but different blocks cannot both be valid with at most f faults; that case
// throws ProtocolViolation.
const QC& high_qc(const AggQC& aggqc);

// U headers that extend highQC by one block. When several views are present
// only the latest view counts. Result is sorted by block id, deduplicated.
std::vector<UHeader> relevant_us(const AggQC& aggqc);

NewViewMsg create_nv_msg(AggQC aggqc, View next_view,
                         const std::function<bool(const Hash&)>& has_payload);

NegativeResponse make_negative(View view, const Hash& u_hash, const crypto::KeyPair& sender);
NegativeQC create_negative_qc(std::span<const NegativeResponse> nrs, const Committee& committee);

ReadyMsg make_ready(View view, const QC& high, const crypto::KeyPair& sender);
QC create_ready_qc(std::span<const ReadyMsg> readys, const Committee& committee);

ClientRequest make_request(ClientId client, std::uint64_t timestamp, std::string op,
                           const crypto::KeyPair& key);

EquivocationProof make_proof(const UHeader& a, const UHeader& b);

// Two headers from one proposer for the same (view, seq) naming different
// blocks.
bool is_equivocation(const BlockHeader& a, const BlockHeader& b);

// ---- verification -----------------------------------------------------------

bool verify_qc(const QC& qc, const Committee& committee);
bool verify_negative_qc(const NegativeQC& qc, const Committee& committee);
bool verify_header(const BlockHeader& h, const Signature& sig, const Committee& committee);
bool verify_vote(const Vote& v, const Committee& committee);
bool verify_view_change(const ViewChangeMsg& vc, const Committee& committee);
bool verify_negative(const NegativeResponse& nr, const Committee& committee);
bool verify_ready(const ReadyMsg& r, const Committee& committee);
bool verify_request(const ClientRequest& r, const Committee& committee);
bool verify_equivocation_proof(const EquivocationProof& p, const Committee& committee);

// Structural checks plus the mode's aggregate verifications.
bool verify_new_view(const NewViewMsg& nv, const Committee& committee, VerifyMode mode);

}  // namespace vbft
