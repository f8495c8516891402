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

#define OPENSSL_SUPPRESS_DEPRECATED
#include "vbft/crypto.hpp"

#include <openssl/sha.h>

#include <algorithm>

#include "vbft/errors.hpp"

namespace vbft::crypto {
namespace {

constexpr std::string_view kPkTag = "vbft/pk";
constexpr std::string_view kSigTag = "vbft/sig";
constexpr std::string_view kAggTag = "vbft/agg";
constexpr std::string_view kKeyTag = "vbft/keygen";

struct Hasher {
  SHA256_CTX ctx;
  Hasher() { SHA256_Init(&ctx); }
  Hasher& add(std::string_view s) {
    SHA256_Update(&ctx, s.data(), s.size());
    return *this;
  }
  Hasher& add(std::span<const std::uint8_t> s) {
    SHA256_Update(&ctx, s.data(), s.size());
    return *this;
  }
  Hasher& add_u64(std::uint64_t v) {
    std::array<std::uint8_t, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    return add(b);
  }
  Digest finish() {
    Digest out{};
    SHA256_Final(out.data(), &ctx);
    return out;
  }
};

Digest signature_bytes(const Digest& public_key, std::span<const std::uint8_t> digest) {
  return Hasher{}.add(kSigTag).add(public_key).add(digest).finish();
}

}  // namespace

Digest sha256(std::span<const std::uint8_t> data) { return Hasher{}.add(data).finish(); }

Digest sha256(std::string_view data) { return Hasher{}.add(data).finish(); }

std::string to_hex(const Digest& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (auto b : d) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

std::string short_hex(const Digest& d) { return to_hex(d).substr(0, 12); }

VerifyCounters& verify_counters() {
  thread_local VerifyCounters counters;
  return counters;
}

Digest derive_public(const Digest& secret) { return Hasher{}.add(kPkTag).add(secret).finish(); }

KeyPair keygen(std::uint64_t seed, NodeId node_id) {
  KeyPair kp;
  kp.node_id = node_id;
  kp.secret = Hasher{}.add(kKeyTag).add_u64(seed).add_u64(node_id).finish();
  kp.public_key = derive_public(kp.secret);
  return kp;
}

Signature sign(const Digest& secret, std::span<const std::uint8_t> digest) {
  if (digest.size() != 32) {
    throw InputError("sign: digest must be 32 bytes, got " + std::to_string(digest.size()));
  }
  return Signature{signature_bytes(derive_public(secret), digest)};
}

Signature sign(const Digest& secret, const Digest& digest) {
  return sign(secret, std::span<const std::uint8_t>(digest));
}

bool verify(const Digest& public_key, const Digest& digest, const Signature& sig) {
  ++verify_counters().single;
  return signature_bytes(public_key, digest) == sig.bytes;
}

AggregateSignature aggregate(std::span<const AggregatePart> parts,
                             std::span<const Digest> public_keys) {
  if (parts.empty()) throw InputError("aggregate: no parts");
  std::vector<const AggregatePart*> sorted;
  sorted.reserve(parts.size());
  for (const auto& p : parts) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->node < b->node; });
  AggregateSignature agg;
  Hasher h;
  h.add(kAggTag);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& p = *sorted[i];
    if (i > 0 && sorted[i - 1]->node == p.node) {
      throw InputError("aggregate: duplicate node id " + std::to_string(p.node));
    }
    if (p.node >= public_keys.size()) {
      throw InputError("aggregate: unknown node id " + std::to_string(p.node));
    }
    if (signature_bytes(public_keys[p.node], p.digest) != p.sig.bytes) {
      throw AggregationError("aggregate: invalid signature from node " + std::to_string(p.node));
    }
    h.add(p.sig.bytes);
    agg.signers.push_back(p.node);
  }
  agg.bytes = h.finish();
  return agg;
}

bool verify_aggregate(const AggregateSignature& agg, std::span<const VerifyItem> items) {
  if (items.size() != agg.signers.size()) {
    throw InputError("verify_aggregate: " + std::to_string(items.size()) + " items for " +
                     std::to_string(agg.signers.size()) + " signers");
  }
  auto& counters = verify_counters();
  ++counters.aggregate;
  counters.constituents += items.size();
  Hasher h;
  h.add(kAggTag);
  for (const auto& item : items) h.add(signature_bytes(item.public_key, item.digest));
  return h.finish() == agg.bytes;
}

}  // namespace vbft::crypto
