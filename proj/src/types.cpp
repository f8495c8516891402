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

#include "vbft/types.hpp"

#include <algorithm>

namespace vbft {

Config Config::for_nodes(std::uint32_t n, SimTime timeout_base, PrimaryMode mode,
                         std::uint64_t seed) {
  Config c;
  c.n = n;
  c.f = n >= 1 ? (n - 1) / 3 : 0;
  c.quorum = 2 * c.f + 1;
  c.timeout_base = timeout_base;
  c.primary_mode = mode;
  c.primary_seed = seed;
  return c;
}

void Config::validate() const {
  if (f == 0 || n != 3 * f + 1) {
    throw ConfigError("n must equal 3f+1 with f >= 1 (n=" + std::to_string(n) +
                      ", f=" + std::to_string(f) + ")");
  }
  if (quorum != 2 * f + 1) throw ConfigError("quorum must equal 2f+1");
  if (timeout_base == 0) throw ConfigError("timeout_base must be positive");
}

const char* message_kind(const Message& m) {
  static constexpr const char* kNames[] = {
      "request",  "proposal",  "vote",          "view_change",     "new_view",
      "ready",    "ready_qc",  "payload_req",   "payload_resp",    "negative_resp",
      "eq_proof", "fetch_req", "fetch_resp"};
  return kNames[m.index()];
}

crypto::KeyPair replica_key(std::uint64_t key_seed, NodeId id) { return crypto::keygen(key_seed, id); }

crypto::KeyPair client_key(std::uint64_t key_seed, ClientId id) {
  return crypto::keygen(key_seed ^ 0xc11e47c11e47ULL, 1'000'000 + id);
}

Committee Committee::generate(const Config& config, std::uint64_t key_seed, std::uint32_t clients) {
  Committee c;
  c.config = config;
  for (NodeId i = 0; i < config.n; ++i) c.replica_keys.push_back(replica_key(key_seed, i).public_key);
  for (ClientId i = 0; i < clients; ++i) c.client_keys.push_back(client_key(key_seed, i).public_key);
  return c;
}

// ---- encoding -------------------------------------------------------------

namespace {

template <typename T>
void put_vec(Encoder& e, const std::vector<T>& v) {
  e.u32(static_cast<std::uint32_t>(v.size()));
  for (const auto& x : v) put(e, x);
}

template <typename T>
void put_opt(Encoder& e, const std::optional<T>& v) {
  e.boolean(v.has_value());
  if (v) put(e, *v);
}

template <typename T>
std::vector<T> get_vec(Decoder& d) {
  std::vector<T> v(d.count());
  for (auto& x : v) x = get<T>(d);
  return v;
}

template <typename T>
std::optional<T> get_opt(Decoder& d) {
  if (!d.boolean()) return std::nullopt;
  return get<T>(d);
}

void put_sig(Encoder& e, const Signature& s) { e.digest(s.bytes); }
Signature get_sig(Decoder& d) { return Signature{d.digest()}; }

void put_hashes(Encoder& e, const std::vector<Hash>& v) {
  e.u32(static_cast<std::uint32_t>(v.size()));
  for (const auto& h : v) e.digest(h);
}
std::vector<Hash> get_hashes(Decoder& d) {
  std::vector<Hash> v(d.count());
  for (auto& h : v) h = d.digest();
  return v;
}

}  // namespace

void put(Encoder& e, const AggregateSignature& v) {
  e.digest(v.bytes);
  e.u32(static_cast<std::uint32_t>(v.signers.size()));
  for (auto s : v.signers) e.u32(s);
}
template <>
AggregateSignature get<AggregateSignature>(Decoder& d) {
  AggregateSignature v;
  v.bytes = d.digest();
  v.signers.resize(d.count());
  for (auto& s : v.signers) s = d.u32();
  return v;
}

void put(Encoder& e, const ClientRequest& v) {
  e.u32(v.client);
  e.u64(v.timestamp);
  e.str(v.op);
  put_sig(e, v.sig);
}
template <>
ClientRequest get<ClientRequest>(Decoder& d) {
  ClientRequest v;
  v.client = d.u32();
  v.timestamp = d.u64();
  v.op = d.str();
  v.sig = get_sig(d);
  return v;
}

void put(Encoder& e, const BlockHeader& v) {
  e.u64(v.view);
  e.u64(v.seq);
  e.digest(v.parent_hash);
  e.digest(v.payload_hash);
  e.u32(v.proposer);
}
template <>
BlockHeader get<BlockHeader>(Decoder& d) {
  BlockHeader v;
  v.view = d.u64();
  v.seq = d.u64();
  v.parent_hash = d.digest();
  v.payload_hash = d.digest();
  v.proposer = d.u32();
  return v;
}

void put(Encoder& e, const QC& v) {
  e.u8(static_cast<std::uint8_t>(v.kind));
  e.u64(v.view);
  e.u64(v.seq);
  e.digest(v.block_hash);
  put(e, v.agg);
}
template <>
QC get<QC>(Decoder& d) {
  QC v;
  auto kind = d.u8();
  if (kind > 2) throw DecodeError("bad QC kind");
  v.kind = static_cast<QcKind>(kind);
  v.view = d.u64();
  v.seq = d.u64();
  v.block_hash = d.digest();
  v.agg = get<AggregateSignature>(d);
  return v;
}

void put(Encoder& e, const NegativeQC& v) {
  e.u64(v.view);
  e.digest(v.u_hash);
  put(e, v.agg);
}
template <>
NegativeQC get<NegativeQC>(Decoder& d) {
  NegativeQC v;
  v.view = d.u64();
  v.u_hash = d.digest();
  v.agg = get<AggregateSignature>(d);
  return v;
}

void put(Encoder& e, const Block& v) {
  put(e, v.header);
  put_sig(e, v.header_sig);
  put(e, v.qc_parent);
  put_opt(e, v.qc_nr);
  put_opt(e, v.qc_ready);
  put_vec(e, v.commands);
}
template <>
Block get<Block>(Decoder& d) {
  Block v;
  v.header = get<BlockHeader>(d);
  v.header_sig = get_sig(d);
  v.qc_parent = get<QC>(d);
  v.qc_nr = get_opt<NegativeQC>(d);
  v.qc_ready = get_opt<QC>(d);
  v.commands = get_vec<ClientRequest>(d);
  return v;
}

void put(Encoder& e, const UHeader& v) {
  put(e, v.header);
  put_sig(e, v.header_sig);
}
template <>
UHeader get<UHeader>(Decoder& d) {
  UHeader v;
  v.header = get<BlockHeader>(d);
  v.header_sig = get_sig(d);
  return v;
}

void put(Encoder& e, const EquivocationProof& v) {
  put(e, v.header_a);
  put(e, v.header_b);
  put_sig(e, v.sig_a);
  put_sig(e, v.sig_b);
}
template <>
EquivocationProof get<EquivocationProof>(Decoder& d) {
  EquivocationProof v;
  v.header_a = get<BlockHeader>(d);
  v.header_b = get<BlockHeader>(d);
  v.sig_a = get_sig(d);
  v.sig_b = get_sig(d);
  return v;
}

void put(Encoder& e, const Vote& v) {
  e.u64(v.view);
  e.u64(v.seq);
  e.digest(v.block_hash);
  e.digest(v.parent_hash);
  e.u32(v.voter);
  put_sig(e, v.sig);
}
template <>
Vote get<Vote>(Decoder& d) {
  Vote v;
  v.view = d.u64();
  v.seq = d.u64();
  v.block_hash = d.digest();
  v.parent_hash = d.digest();
  v.voter = d.u32();
  v.sig = get_sig(d);
  return v;
}

void put(Encoder& e, const ViewChangeMsg& v) {
  e.u64(v.next_view);
  put(e, v.qc_latest);
  put_opt(e, v.u);
  put_opt(e, v.proof);
  e.u32(v.sender);
  put_sig(e, v.sig);
}
template <>
ViewChangeMsg get<ViewChangeMsg>(Decoder& d) {
  ViewChangeMsg v;
  v.next_view = d.u64();
  v.qc_latest = get<QC>(d);
  v.u = get_opt<UHeader>(d);
  v.proof = get_opt<EquivocationProof>(d);
  v.sender = d.u32();
  v.sig = get_sig(d);
  return v;
}

void put(Encoder& e, const AggQC& v) {
  e.u64(v.view);
  put_vec(e, v.entries);
  put(e, v.agg);
}
template <>
AggQC get<AggQC>(Decoder& d) {
  AggQC v;
  v.view = d.u64();
  v.entries = get_vec<ViewChangeMsg>(d);
  v.agg = get<AggregateSignature>(d);
  return v;
}

void put(Encoder& e, const NewViewMsg& v) {
  e.u64(v.view);
  put(e, v.aggqc);
  e.boolean(v.need_payload);
}
template <>
NewViewMsg get<NewViewMsg>(Decoder& d) {
  NewViewMsg v;
  v.view = d.u64();
  v.aggqc = get<AggQC>(d);
  v.need_payload = d.boolean();
  return v;
}

void put(Encoder& e, const NegativeResponse& v) {
  e.u64(v.view);
  e.digest(v.u_hash);
  e.u32(v.sender);
  put_sig(e, v.sig);
}
template <>
NegativeResponse get<NegativeResponse>(Decoder& d) {
  NegativeResponse v;
  v.view = d.u64();
  v.u_hash = d.digest();
  v.sender = d.u32();
  v.sig = get_sig(d);
  return v;
}

void put(Encoder& e, const ReadyMsg& v) {
  e.u64(v.view);
  e.u64(v.high_seq);
  e.digest(v.high_hash);
  e.u32(v.sender);
  put_sig(e, v.sig);
  put_vec(e, v.payloads);
  put_vec(e, v.negatives);
}
template <>
ReadyMsg get<ReadyMsg>(Decoder& d) {
  ReadyMsg v;
  v.view = d.u64();
  v.high_seq = d.u64();
  v.high_hash = d.digest();
  v.sender = d.u32();
  v.sig = get_sig(d);
  v.payloads = get_vec<Block>(d);
  v.negatives = get_vec<NegativeResponse>(d);
  return v;
}

void put(Encoder& e, const ReadyCert& v) { put(e, v.qc); }
template <>
ReadyCert get<ReadyCert>(Decoder& d) {
  return ReadyCert{get<QC>(d)};
}

void put(Encoder& e, const PayloadRequest& v) {
  e.u64(v.view);
  put_hashes(e, v.u_hashes);
}
template <>
PayloadRequest get<PayloadRequest>(Decoder& d) {
  PayloadRequest v;
  v.view = d.u64();
  v.u_hashes = get_hashes(d);
  return v;
}

void put(Encoder& e, const PayloadResponse& v) {
  e.u64(v.view);
  put(e, v.block);
}
template <>
PayloadResponse get<PayloadResponse>(Decoder& d) {
  PayloadResponse v;
  v.view = d.u64();
  v.block = get<Block>(d);
  return v;
}

void put(Encoder& e, const FetchRequest& v) { put_hashes(e, v.ids); }
template <>
FetchRequest get<FetchRequest>(Decoder& d) {
  return FetchRequest{get_hashes(d)};
}

void put(Encoder& e, const FetchResponse& v) { put_vec(e, v.blocks); }
template <>
FetchResponse get<FetchResponse>(Decoder& d) {
  return FetchResponse{get_vec<Block>(d)};
}

void put(Encoder& e, const Reply& v) {
  e.u64(v.view);
  e.str(v.result);
  e.u64(v.timestamp);
  e.u32(v.client);
  e.digest(v.block_hash);
  e.u64(v.seq);
  e.u32(v.replier);
}
template <>
Reply get<Reply>(Decoder& d) {
  Reply v;
  v.view = d.u64();
  v.result = d.str();
  v.timestamp = d.u64();
  v.client = d.u32();
  v.block_hash = d.digest();
  v.seq = d.u64();
  v.replier = d.u32();
  return v;
}

Bytes encode_message(const Message& m) {
  Encoder e;
  e.u8(static_cast<std::uint8_t>(m.index()));
  std::visit([&](const auto& v) { put(e, v); }, m);
  return std::move(e).take();
}

namespace {

template <std::size_t I = 0>
Message decode_alternative(std::size_t index, Decoder& d) {
  if constexpr (I < std::variant_size_v<Message>) {
    if (index == I) return Message{std::in_place_index<I>, get<std::variant_alternative_t<I, Message>>(d)};
    return decode_alternative<I + 1>(index, d);
  } else {
    throw DecodeError("unknown message tag " + std::to_string(index));
  }
}

}  // namespace

Message decode_message(std::span<const std::uint8_t> bytes) {
  Decoder d(bytes);
  auto tag = d.u8();
  Message m = decode_alternative(tag, d);
  if (!d.done()) throw DecodeError("trailing bytes");
  return m;
}

// ---- digests ----------------------------------------------------------------

Hash payload_hash(const std::vector<ClientRequest>& commands) {
  Encoder e;
  e.str("vbft/payload");
  put_vec(e, commands);
  return crypto::sha256(e.bytes());
}

Hash block_id(Seq seq, const Hash& parent, const Hash& payload) {
  Encoder e;
  e.str("vbft/block");
  e.u64(seq);
  e.digest(parent);
  e.digest(payload);
  return crypto::sha256(e.bytes());
}

Hash Block::id() const { return block_id(header.seq, header.parent_hash, header.payload_hash); }

Hash UHeader::block_id() const {
  return vbft::block_id(header.seq, header.parent_hash, header.payload_hash);
}

Hash header_digest(const BlockHeader& h) { return hash_of("vbft/header", h); }

Hash qc_digest(QcKind kind, View view, Seq seq, const Hash& block_hash) {
  Encoder e;
  e.str("vbft/qc");
  e.u8(static_cast<std::uint8_t>(kind));
  e.u64(view);
  e.u64(seq);
  e.digest(block_hash);
  return crypto::sha256(e.bytes());
}

Hash qc_digest(const QC& qc) { return qc_digest(qc.kind, qc.view, qc.seq, qc.block_hash); }

Hash vote_digest(const Vote& v) { return qc_digest(QcKind::block, v.view, v.seq, v.block_hash); }

Hash negative_digest(View view, const Hash& u_hash) {
  Encoder e;
  e.str("vbft/nr");
  e.u64(view);
  e.digest(u_hash);
  return crypto::sha256(e.bytes());
}

Hash view_change_digest(const ViewChangeMsg& vc) {
  Encoder e;
  e.str("vbft/vc");
  e.u64(vc.next_view);
  e.digest(qc_digest(vc.qc_latest));
  put_opt(e, vc.u);
  e.u32(vc.sender);
  return crypto::sha256(e.bytes());
}

Hash ready_digest(const ReadyMsg& r) {
  return qc_digest(QcKind::ready, r.view, r.high_seq, r.high_hash);
}

Hash request_digest(const ClientRequest& r) {
  Encoder e;
  e.str("vbft/request");
  e.u32(r.client);
  e.u64(r.timestamp);
  e.str(r.op);
  return crypto::sha256(e.bytes());
}

Block genesis_block() {
  Block g;
  g.header.view = 0;
  g.header.seq = 0;
  g.header.payload_hash = payload_hash({});
  g.header.proposer = 0;
  return g;
}

QC genesis_qc(const Config& config, std::uint64_t key_seed) {
  QC qc;
  qc.kind = QcKind::block;
  qc.view = 0;
  qc.seq = 0;
  qc.block_hash = genesis_block().id();
  auto digest = qc_digest(qc);
  std::vector<crypto::AggregatePart> parts;
  std::vector<Hash> keys;
  for (NodeId i = 0; i < config.n; ++i) {
    auto kp = replica_key(key_seed, i);
    keys.push_back(kp.public_key);
    parts.push_back({digest, crypto::sign(kp.secret, digest), i});
  }
  qc.agg = crypto::aggregate(parts, keys);
  return qc;
}

}  // namespace vbft
