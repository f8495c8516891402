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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vbft {

using NodeId = std::uint32_t;

namespace crypto {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);

std::string to_hex(const Digest& d);
std::string short_hex(const Digest& d);

struct KeyPair {
  NodeId node_id = 0;
  Digest secret{};
  Digest public_key{};

  bool operator==(const KeyPair&) const = default;
};

struct Signature {
  Digest bytes{};

  bool operator==(const Signature&) const = default;
};

// Constant-size aggregate plus the ascending set of contributing node ids.
struct AggregateSignature {
  Digest bytes{};
  std::vector<NodeId> signers;

  bool operator==(const AggregateSignature&) const = default;
};

struct AggregatePart {
  Digest digest{};
  Signature sig;
  NodeId node = 0;
};

struct VerifyItem {
  Digest digest{};
  Digest public_key{};
};

// Per-thread verification accounting. Each simulation run lives on one
// thread, so these behave as per-run accumulators.
struct VerifyCounters {
  std::uint64_t single = 0;        // verify() calls
  std::uint64_t aggregate = 0;     // verify_aggregate() calls
  std::uint64_t constituents = 0;  // signer slots covered by aggregate calls
};

VerifyCounters& verify_counters();

Digest derive_public(const Digest& secret);

KeyPair keygen(std::uint64_t seed, NodeId node_id);

// Throws InputError unless digest is exactly 32 bytes.
Signature sign(const Digest& secret, std::span<const std::uint8_t> digest);
Signature sign(const Digest& secret, const Digest& digest);

bool verify(const Digest& public_key, const Digest& digest, const Signature& sig);

// Parts are validated against `public_keys[node]`; the result lists signers in
// ascending id order. Throws InputError on empty input, duplicate ids or
// unknown ids, AggregationError on an invalid constituent.
AggregateSignature aggregate(std::span<const AggregatePart> parts,
                             std::span<const Digest> public_keys);

// `items` must follow agg.signers order. Counts as exactly one aggregate
// verification. Throws InputError on a length mismatch.
bool verify_aggregate(const AggregateSignature& agg, std::span<const VerifyItem> items);

}  // namespace crypto
}  // namespace vbft
