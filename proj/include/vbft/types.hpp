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
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vbft/codec.hpp"
#include "vbft/crypto.hpp"

namespace vbft {

using Hash = crypto::Digest;
using ClientId = std::uint32_t;
using View = std::uint64_t;
using Seq = std::uint64_t;
using SimTime = std::uint64_t;  // simulated milliseconds

using crypto::AggregateSignature;
using crypto::Signature;

enum class PrimaryMode : std::uint8_t { round_robin, seeded_random };

struct Config {
  std::uint32_t n = 4;
  std::uint32_t f = 1;
  std::uint32_t quorum = 3;
  SimTime timeout_base = 40;
  PrimaryMode primary_mode = PrimaryMode::round_robin;
  std::uint64_t primary_seed = 0;

  // n = 3f+1, quorum = 2f+1.
  static Config for_nodes(std::uint32_t n, SimTime timeout_base = 40,
                          PrimaryMode mode = PrimaryMode::round_robin, std::uint64_t seed = 0);

  // Throws ConfigError when the invariants above do not hold.
  void validate() const;

  bool operator==(const Config&) const = default;
};

struct ClientRequest {
  ClientId client = 0;
  std::uint64_t timestamp = 0;
  std::string op;
  Signature sig;

  bool operator==(const ClientRequest&) const = default;
};

struct BlockHeader {
  View view = 0;
  Seq seq = 0;
  Hash parent_hash{};
  Hash payload_hash{};
  NodeId proposer = 0;

  bool operator==(const BlockHeader&) const = default;
};

enum class QcKind : std::uint8_t { block = 0, ready = 1, view = 2 };

struct QC {
  QcKind kind = QcKind::block;
  View view = 0;
  Seq seq = 0;
  Hash block_hash{};
  AggregateSignature agg;

  bool operator==(const QC&) const = default;
};

struct NegativeQC {
  View view = 0;
  Hash u_hash{};
  AggregateSignature agg;

  bool operator==(const NegativeQC&) const = default;
};

// Block identity is its content: (seq, parent, payload). A payload re-proposed
// at the same height over the same parent keeps its identity across views.
struct Block {
  BlockHeader header;
  Signature header_sig;  // proposer's signature over the header
  QC qc_parent;
  std::optional<NegativeQC> qc_nr;
  std::optional<QC> qc_ready;  // QC_r, first proposal of a view only
  std::vector<ClientRequest> commands;

  Hash id() const;

  bool operator==(const Block&) const = default;
};

struct UHeader {
  BlockHeader header;
  Signature header_sig;

  Hash block_id() const;

  bool operator==(const UHeader&) const = default;
};

struct EquivocationProof {
  BlockHeader header_a;
  BlockHeader header_b;
  Signature sig_a;
  Signature sig_b;

  bool operator==(const EquivocationProof&) const = default;
};

struct Vote {
  View view = 0;
  Seq seq = 0;
  Hash block_hash{};
  Hash parent_hash{};
  NodeId voter = 0;
  Signature sig;

  bool operator==(const Vote&) const = default;
};

struct ViewChangeMsg {
  View next_view = 0;
  QC qc_latest;
  std::optional<UHeader> u;
  std::optional<EquivocationProof> proof;
  NodeId sender = 0;
  Signature sig;

  bool operator==(const ViewChangeMsg&) const = default;
};

// Entries are kept in ascending sender order, matching agg.signers.
struct AggQC {
  View view = 0;
  std::vector<ViewChangeMsg> entries;
  AggregateSignature agg;

  bool operator==(const AggQC&) const = default;
};

struct NewViewMsg {
  View view = 0;
  AggQC aggqc;
  bool need_payload = false;

  bool operator==(const NewViewMsg&) const = default;
};

struct NegativeResponse {
  View view = 0;
  Hash u_hash{};
  NodeId sender = 0;
  Signature sig;

  bool operator==(const NegativeResponse&) const = default;
};

struct ReadyMsg {
  View view = 0;
  Seq high_seq = 0;
  Hash high_hash{};
  NodeId sender = 0;
  Signature sig;
  // Filled only when the new-view message asked for U payloads.
  std::vector<Block> payloads;
  std::vector<NegativeResponse> negatives;

  bool operator==(const ReadyMsg&) const = default;
};

// QC_r broadcast by the new primary (base view-change path).
struct ReadyCert {
  QC qc;

  bool operator==(const ReadyCert&) const = default;
};

struct PayloadRequest {
  View view = 0;
  std::vector<Hash> u_hashes;

  bool operator==(const PayloadRequest&) const = default;
};

struct PayloadResponse {
  View view = 0;
  Block block;

  bool operator==(const PayloadResponse&) const = default;
};

struct FetchRequest {
  std::vector<Hash> ids;

  bool operator==(const FetchRequest&) const = default;
};

struct FetchResponse {
  std::vector<Block> blocks;

  bool operator==(const FetchResponse&) const = default;
};

struct Reply {
  View view = 0;
  std::string result;
  std::uint64_t timestamp = 0;
  ClientId client = 0;
  Hash block_hash{};
  Seq seq = 0;
  NodeId replier = 0;

  bool operator==(const Reply&) const = default;
};

using Message = std::variant<ClientRequest, Block, Vote, ViewChangeMsg, NewViewMsg, ReadyMsg,
                             ReadyCert, PayloadRequest, PayloadResponse, NegativeResponse,
                             EquivocationProof, FetchRequest, FetchResponse>;

const char* message_kind(const Message& m);

// Public keys of replicas and clients; what every participant knows.
struct Committee {
  Config config;
  std::vector<Hash> replica_keys;
  std::vector<Hash> client_keys;

  static Committee generate(const Config& config, std::uint64_t key_seed, std::uint32_t clients);
};

crypto::KeyPair replica_key(std::uint64_t key_seed, NodeId id);
crypto::KeyPair client_key(std::uint64_t key_seed, ClientId id);

// ---- canonical encoding -------------------------------------------------

void put(Encoder& e, const AggregateSignature& v);
void put(Encoder& e, const ClientRequest& v);
void put(Encoder& e, const BlockHeader& v);
void put(Encoder& e, const QC& v);
void put(Encoder& e, const NegativeQC& v);
void put(Encoder& e, const Block& v);
void put(Encoder& e, const UHeader& v);
void put(Encoder& e, const EquivocationProof& v);
void put(Encoder& e, const Vote& v);
void put(Encoder& e, const ViewChangeMsg& v);
void put(Encoder& e, const AggQC& v);
void put(Encoder& e, const NewViewMsg& v);
void put(Encoder& e, const NegativeResponse& v);
void put(Encoder& e, const ReadyMsg& v);
void put(Encoder& e, const ReadyCert& v);
void put(Encoder& e, const PayloadRequest& v);
void put(Encoder& e, const PayloadResponse& v);
void put(Encoder& e, const FetchRequest& v);
void put(Encoder& e, const FetchResponse& v);
void put(Encoder& e, const Reply& v);

template <typename T>
T get(Decoder& d);
template <>
AggregateSignature get<AggregateSignature>(Decoder& d);
template <>
ClientRequest get<ClientRequest>(Decoder& d);
template <>
BlockHeader get<BlockHeader>(Decoder& d);
template <>
QC get<QC>(Decoder& d);
template <>
NegativeQC get<NegativeQC>(Decoder& d);
template <>
Block get<Block>(Decoder& d);
template <>
UHeader get<UHeader>(Decoder& d);
template <>
EquivocationProof get<EquivocationProof>(Decoder& d);
template <>
Vote get<Vote>(Decoder& d);
template <>
ViewChangeMsg get<ViewChangeMsg>(Decoder& d);
template <>
AggQC get<AggQC>(Decoder& d);
template <>
NewViewMsg get<NewViewMsg>(Decoder& d);
template <>
NegativeResponse get<NegativeResponse>(Decoder& d);
template <>
ReadyMsg get<ReadyMsg>(Decoder& d);
template <>
ReadyCert get<ReadyCert>(Decoder& d);
template <>
PayloadRequest get<PayloadRequest>(Decoder& d);
template <>
PayloadResponse get<PayloadResponse>(Decoder& d);
template <>
FetchRequest get<FetchRequest>(Decoder& d);
template <>
FetchResponse get<FetchResponse>(Decoder& d);
template <>
Reply get<Reply>(Decoder& d);

template <typename T>
Bytes encode(const T& v) {
  Encoder e;
  put(e, v);
  return std::move(e).take();
}

// Throws DecodeError on malformed or trailing input.
template <typename T>
T decode(std::span<const std::uint8_t> bytes) {
  Decoder d(bytes);
  T v = get<T>(d);
  if (!d.done()) throw DecodeError("trailing bytes");
  return v;
}

Bytes encode_message(const Message& m);
Message decode_message(std::span<const std::uint8_t> bytes);

// ---- hashing and signing digests ----------------------------------------

// hash(domain-tag || canonical encoding)
template <typename T>
Hash hash_of(std::string_view tag, const T& v) {
  Encoder e;
  e.str(tag);
  put(e, v);
  return crypto::sha256(e.bytes());
}

Hash payload_hash(const std::vector<ClientRequest>& commands);
Hash block_id(Seq seq, const Hash& parent, const Hash& payload);
Hash header_digest(const BlockHeader& h);
Hash qc_digest(QcKind kind, View view, Seq seq, const Hash& block_hash);
Hash qc_digest(const QC& qc);
Hash vote_digest(const Vote& v);
Hash negative_digest(View view, const Hash& u_hash);
Hash view_change_digest(const ViewChangeMsg& vc);
Hash ready_digest(const ReadyMsg& r);
Hash request_digest(const ClientRequest& r);

// Genesis block at seq 0 and its bootstrap QC signed by all n replicas.
Block genesis_block();
QC genesis_qc(const Config& config, std::uint64_t key_seed);

}  // namespace vbft
