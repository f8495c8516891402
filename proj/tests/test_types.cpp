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

#include <random>

#include "fixtures.hpp"
#include "vbft/errors.hpp"

using namespace vbft;
using vbft::testing::World;

TEST(Config, DerivedSizes) {
  for (std::uint32_t f = 1; f <= 8; ++f) {
    Config c = Config::for_nodes(3 * f + 1);
    EXPECT_EQ(c.f, f);
    EXPECT_EQ(c.quorum, 2 * f + 1);
    EXPECT_NO_THROW(c.validate());
  }
}

TEST(Config, RejectsSizesOtherThanThreeFPlusOne) {
  EXPECT_THROW(Config::for_nodes(5).validate(), ConfigError);
  EXPECT_THROW(Config::for_nodes(3).validate(), ConfigError);
  Config c = Config::for_nodes(4);
  c.quorum = 2;
  EXPECT_THROW(c.validate(), ConfigError);
  c = Config::for_nodes(4);
  c.timeout_base = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Hashing, GenesisIsStable) {
  EXPECT_EQ(genesis_block().id(), genesis_block().id());
  // Pinned so that a change to the canonical encoding is noticed.
  EXPECT_EQ(crypto::to_hex(genesis_block().id()),
            "22eb94c1941d04a059c073309c03aef3037175ff68bef6b36eaccf6b0d3e3ef2");
  World w;
  EXPECT_EQ(genesis_qc(w.config, 7), genesis_qc(w.config, 7));
  EXPECT_TRUE(verify_qc(w.genesis, w.committee));
}

TEST(Hashing, OneCommandChangesTheBlock) {
  World w;
  Block a = w.propose(1, w.genesis, {w.request(0, 1, "a")});
  Block b = w.propose(1, w.genesis, {w.request(0, 1, "b")});
  EXPECT_NE(a.header.payload_hash, b.header.payload_hash);
  EXPECT_NE(a.id(), b.id());
}

TEST(Hashing, BlockIdIgnoresViewAndProposer) {
  World w;
  Block a = w.propose(1, w.genesis, {w.request(0, 1)});
  Block b = w.propose(2, w.genesis, {w.request(0, 1)});
  EXPECT_NE(a.header.proposer, b.header.proposer);
  EXPECT_EQ(a.id(), b.id());
  EXPECT_EQ(a.id(), block_id(1, w.genesis.block_hash, a.header.payload_hash));
  EXPECT_EQ(w.u_of(a).block_id(), a.id());
}

TEST(Hashing, DigestsAreDomainSeparated) {
  Hash h = crypto::sha256("x");
  EXPECT_NE(qc_digest(QcKind::block, 1, 1, h), qc_digest(QcKind::ready, 1, 1, h));
  EXPECT_NE(qc_digest(QcKind::block, 1, 1, h), negative_digest(1, h));
}

TEST(MessageKind, Names) {
  World w;
  EXPECT_STREQ(message_kind(Message{w.request(0, 1)}), "request");
  EXPECT_STREQ(message_kind(Message{genesis_block()}), "proposal");
  EXPECT_STREQ(message_kind(Message{Vote{}}), "vote");
  EXPECT_STREQ(message_kind(Message{ViewChangeMsg{}}), "view_change");
  EXPECT_STREQ(message_kind(Message{FetchResponse{}}), "fetch_resp");
}

// ---- codec ------------------------------------------------------------------------

namespace {

template <typename T>
void expect_round_trip(const T& v) {
  Bytes b = encode(v);
  EXPECT_EQ(decode<T>(b), v);
  EXPECT_EQ(encode(decode<T>(b)), b);
}

struct Samples {
  World w;
  std::vector<std::pair<Block, QC>> c = w.chain(3);

  Block block_with_extras() const {
    Block b = c[2].first;
    b.commands = {w.request(0, 9, "op"), w.request(1, 3, "")};
    NegativeResponse nr0 = make_negative(4, b.id(), w.keys[0]);
    NegativeResponse nr1 = make_negative(4, b.id(), w.keys[1]);
    NegativeResponse nr2 = make_negative(4, b.id(), w.keys[2]);
    std::vector<NegativeResponse> nrs{nr0, nr1, nr2};
    b.qc_nr = create_negative_qc(nrs, w.committee);
    b.qc_ready = c[1].second;
    return b;
  }

  ViewChangeMsg vc(NodeId who, bool with_u) const {
    std::optional<UHeader> u;
    if (with_u) u = w.u_of(c[2].first);
    return make_view_change(5, c[1].second, u, std::nullopt, w.keys[who]);
  }

  AggQC aggqc() const {
    std::vector<ViewChangeMsg> vcs{vc(0, true), vc(1, false), vc(2, true)};
    return create_agg_qc(vcs, w.committee);
  }
};

}  // namespace

TEST(Codec, RoundTripsEveryMessageFamily) {
  Samples s;
  const World& w = s.w;
  expect_round_trip(w.request(1, 42, "transfer"));
  expect_round_trip(s.c[0].first.header);
  expect_round_trip(s.c[0].second);
  expect_round_trip(s.block_with_extras());
  expect_round_trip(*s.block_with_extras().qc_nr);
  expect_round_trip(w.u_of(s.c[1].first));
  expect_round_trip(make_vote(s.c[0].first, 1, w.keys[3]));
  expect_round_trip(s.vc(1, true));
  expect_round_trip(s.aggqc());
  expect_round_trip(create_nv_msg(s.aggqc(), 5, [](const Hash&) { return false; }));
  expect_round_trip(make_negative(3, s.c[0].first.id(), w.keys[2]));
  ReadyMsg r = make_ready(5, s.c[1].second, w.keys[1]);
  r.payloads.push_back(s.c[2].first);
  r.negatives.push_back(make_negative(5, s.c[0].first.id(), w.keys[1]));
  expect_round_trip(r);
  expect_round_trip(ReadyCert{s.c[2].second});
  expect_round_trip(PayloadRequest{5, {s.c[0].first.id(), s.c[1].first.id()}});
  expect_round_trip(PayloadResponse{5, s.c[1].first});
  expect_round_trip(FetchRequest{{s.c[0].first.id()}});
  expect_round_trip(FetchResponse{{s.c[0].first, s.c[1].first}});
  expect_round_trip(Reply{3, "ok:x", 9, 1, s.c[0].first.id(), 1, 2});
  Block other = w.propose(3, s.c[1].second, {w.request(0, 1)});
  expect_round_trip(make_proof(w.u_of(s.c[2].first), w.u_of(other)));
}

TEST(Codec, MessageEnvelopeRoundTrips) {
  Samples s;
  std::vector<Message> msgs{s.w.request(0, 1), s.block_with_extras(), s.vc(2, true),
                            FetchRequest{{s.c[0].first.id()}}};
  for (const auto& m : msgs) {
    Bytes b = encode_message(m);
    EXPECT_EQ(decode_message(b), m);
  }
}

TEST(Codec, MalformedInputIsRejected) {
  Samples s;
  Bytes b = encode(s.block_with_extras());
  for (std::size_t cut : {std::size_t{0}, std::size_t{1}, b.size() / 2, b.size() - 1})
    EXPECT_THROW(decode<Block>(std::span(b.data(), cut)), DecodeError) << "cut " << cut;
  Bytes trailing = b;
  trailing.push_back(0);
  EXPECT_THROW(decode<Block>(trailing), DecodeError);

  Bytes tag = encode_message(Message{Vote{}});
  tag[0] = 0xff;
  EXPECT_THROW(decode_message(tag), DecodeError);

  Encoder e;
  e.u8(2);
  Decoder d(e.bytes());
  EXPECT_THROW(d.boolean(), DecodeError);

  Encoder big;
  big.u32(1u << 30);
  Decoder d2(big.bytes());
  EXPECT_THROW(d2.count(), DecodeError);
}

// Randomized round trip over generated values.
TEST(CodecProperty, RandomValuesRoundTrip) {
  std::mt19937_64 rng(2024);
  auto digest = [&] {
    Hash h{};
    for (auto& x : h) x = static_cast<std::uint8_t>(rng());
    return h;
  };
  auto str = [&] {
    std::string s(rng() % 24, ' ');
    for (auto& ch : s) ch = static_cast<char>(rng() % 256);
    return s;
  };
  auto agg = [&] {
    AggregateSignature a;
    a.bytes = digest();
    for (NodeId i = 0; i < rng() % 8; ++i) a.signers.push_back(i * 2);
    return a;
  };
  auto qc = [&] {
    return QC{static_cast<QcKind>(rng() % 3), rng(), rng(), digest(), agg()};
  };
  auto header = [&] {
    return BlockHeader{rng(), rng(), digest(), digest(), static_cast<NodeId>(rng())};
  };
  for (int iter = 0; iter < 300; ++iter) {
    Block b;
    b.header = header();
    b.header_sig.bytes = digest();
    b.qc_parent = qc();
    if (rng() % 2) b.qc_nr = NegativeQC{rng(), digest(), agg()};
    if (rng() % 2) b.qc_ready = qc();
    for (std::size_t i = 0; i < rng() % 4; ++i)
      b.commands.push_back({static_cast<ClientId>(rng()), rng(), str(), {digest()}});
    expect_round_trip(b);

    ViewChangeMsg vc;
    vc.next_view = rng();
    vc.qc_latest = qc();
    if (rng() % 2) vc.u = UHeader{header(), {digest()}};
    if (rng() % 3 == 0) vc.proof = EquivocationProof{header(), header(), {digest()}, {digest()}};
    vc.sender = static_cast<NodeId>(rng());
    vc.sig.bytes = digest();
    expect_round_trip(vc);
    EXPECT_EQ(decode_message(encode_message(Message{vc})), Message{vc});
  }
}
