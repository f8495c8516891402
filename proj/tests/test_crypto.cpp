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

#include <algorithm>
#include <vector>

#include "vbft/crypto.hpp"
#include "vbft/errors.hpp"

using namespace vbft;
using namespace vbft::crypto;

namespace {

std::vector<Digest> public_keys(std::uint64_t seed, std::uint32_t n) {
  std::vector<Digest> out;
  for (NodeId i = 0; i < n; ++i) out.push_back(keygen(seed, i).public_key);
  return out;
}

std::vector<AggregatePart> parts_for(std::uint64_t seed, const Digest& d,
                                     const std::vector<NodeId>& ids) {
  std::vector<AggregatePart> parts;
  for (NodeId id : ids) parts.push_back({d, sign(keygen(seed, id).secret, d), id});
  return parts;
}

std::vector<VerifyItem> items_for(const std::vector<Digest>& keys, const Digest& d,
                                  const std::vector<NodeId>& ids) {
  std::vector<VerifyItem> items;
  for (NodeId id : ids) items.push_back({d, keys[id]});
  return items;
}

}  // namespace

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(to_hex(sha256("")),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(to_hex(sha256("abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(short_hex(sha256("abc")), "ba7816bf8f01");
}

TEST(Keygen, DeterministicPerSeedAndNode) {
  EXPECT_EQ(keygen(1, 0), keygen(1, 0));
  EXPECT_NE(keygen(1, 0).public_key, keygen(1, 1).public_key);
  EXPECT_NE(keygen(1, 0).public_key, keygen(2, 0).public_key);
  EXPECT_EQ(keygen(1, 5).node_id, 5u);
  EXPECT_EQ(derive_public(keygen(3, 2).secret), keygen(3, 2).public_key);
}

TEST(Keygen, PairVerifiesItsOwnSignatures) {
  KeyPair kp = keygen(7, 3);
  for (int i = 0; i < 32; ++i) {
    Digest d = sha256("message " + std::to_string(i));
    EXPECT_TRUE(verify(kp.public_key, d, sign(kp.secret, d)));
  }
}

TEST(Sign, RejectsWrongDigestOrKey) {
  KeyPair a = keygen(1, 0), b = keygen(1, 1);
  Digest d = sha256("x"), e = sha256("y");
  Signature s = sign(a.secret, d);
  EXPECT_TRUE(verify(a.public_key, d, s));
  EXPECT_FALSE(verify(a.public_key, e, s));
  EXPECT_FALSE(verify(b.public_key, d, s));
}

TEST(Sign, DigestMustBe32Bytes) {
  KeyPair a = keygen(1, 0);
  std::vector<std::uint8_t> short_digest(31, 0), long_digest(33, 0), ok(32, 0);
  EXPECT_THROW(sign(a.secret, short_digest), InputError);
  EXPECT_THROW(sign(a.secret, long_digest), InputError);
  EXPECT_NO_THROW(sign(a.secret, ok));
}

TEST(Aggregate, QuorumAtFourNodesVerifies) {
  auto keys = public_keys(1, 4);
  Digest d = sha256("block");
  auto parts = parts_for(1, d, {2, 0, 1});
  AggregateSignature agg = aggregate(parts, keys);
  EXPECT_EQ(agg.signers, (std::vector<NodeId>{0, 1, 2}));
  EXPECT_TRUE(verify_aggregate(agg, items_for(keys, d, {0, 1, 2})));
  EXPECT_FALSE(verify_aggregate(agg, items_for(keys, d, {0, 1, 3})));
}

TEST(Aggregate, OrderOfPartsDoesNotMatter) {
  auto keys = public_keys(1, 4);
  Digest d = sha256("block");
  EXPECT_EQ(aggregate(parts_for(1, d, {0, 1, 2}), keys),
            aggregate(parts_for(1, d, {2, 1, 0}), keys));
}

TEST(Aggregate, TamperedConstituentIsRejected) {
  auto keys = public_keys(1, 4);
  Digest d = sha256("block");
  auto parts = parts_for(1, d, {0, 1, 2});
  parts[1].sig.bytes[0] ^= 1;
  EXPECT_THROW(aggregate(parts, keys), AggregationError);
}

TEST(Aggregate, MalformedInputs) {
  auto keys = public_keys(1, 4);
  Digest d = sha256("block");
  EXPECT_THROW(aggregate(std::vector<AggregatePart>{}, keys), InputError);
  EXPECT_THROW(aggregate(parts_for(1, d, {0, 0, 1}), keys), InputError);
  auto parts = parts_for(1, d, {0, 1});
  parts.push_back({d, sign(keygen(1, 9).secret, d), 9});
  EXPECT_THROW(aggregate(parts, keys), InputError);
}

TEST(Aggregate, DroppingAnySignerKeyFailsAtSevenNodes) {
  auto keys = public_keys(4, 7);
  Digest d = sha256("seven");
  std::vector<NodeId> ids{0, 2, 3, 5, 6};
  AggregateSignature agg = aggregate(parts_for(4, d, ids), keys);
  ASSERT_TRUE(verify_aggregate(agg, items_for(keys, d, ids)));
  for (std::size_t drop = 0; drop < ids.size(); ++drop) {
    auto items = items_for(keys, d, ids);
    // replace the dropped signer's key with a non-signer's
    items[drop].public_key = keys[1];
    EXPECT_FALSE(verify_aggregate(agg, items)) << "slot " << drop;
  }
  EXPECT_THROW(verify_aggregate(agg, items_for(keys, d, {0, 2, 3, 5})), InputError);
}

TEST(Aggregate, PerSignerDigestsAreSupported) {
  auto keys = public_keys(1, 4);
  std::vector<AggregatePart> parts;
  std::vector<VerifyItem> items;
  for (NodeId id : {0u, 1u, 3u}) {
    Digest d = sha256("vc from " + std::to_string(id));
    parts.push_back({d, sign(keygen(1, id).secret, d), id});
    items.push_back({d, keys[id]});
  }
  AggregateSignature agg = aggregate(parts, keys);
  EXPECT_TRUE(verify_aggregate(agg, items));
  std::swap(items[0].digest, items[1].digest);
  EXPECT_FALSE(verify_aggregate(agg, items));
}

TEST(VerifyCounters, OneAggregateCallCountsOnce) {
  auto keys = public_keys(1, 4);
  Digest d = sha256("count");
  AggregateSignature agg = aggregate(parts_for(1, d, {0, 1, 2}), keys);
  VerifyCounters before = verify_counters();
  verify_aggregate(agg, items_for(keys, d, {0, 1, 2}));
  VerifyCounters after = verify_counters();
  EXPECT_EQ(after.aggregate - before.aggregate, 1u);
  EXPECT_EQ(after.constituents - before.constituents, 3u);
  EXPECT_EQ(after.single, before.single);
  verify(keys[0], d, sign(keygen(1, 0).secret, d));
  EXPECT_EQ(verify_counters().single - after.single, 1u);
}
