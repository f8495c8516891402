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

#include <random>
#include <string>
#include <vector>

#include "vbft/protocol.hpp"
#include "vbft/types.hpp"

namespace vbft::testing {

inline constexpr std::uint64_t kKeySeed = 7;

struct World {
  Config config;
  Committee committee;
  QC genesis;
  std::vector<crypto::KeyPair> keys;
  std::vector<crypto::KeyPair> client_keys;

  explicit World(std::uint32_t n = 4, std::uint32_t clients = 2)
      : config(Config::for_nodes(n)),
        committee(Committee::generate(config, kKeySeed, clients)),
        genesis(genesis_qc(config, kKeySeed)) {
    for (NodeId i = 0; i < n; ++i) keys.push_back(replica_key(kKeySeed, i));
    for (ClientId c = 0; c < clients; ++c) client_keys.push_back(client_key(kKeySeed, c));
  }

  ClientRequest request(ClientId c, std::uint64_t ts, std::string op = "put") const {
    return make_request(c, ts, std::move(op), client_keys.at(c));
  }

  // Block at qc.seq + 1 in `view`, proposed by that view's primary.
  Block propose(View view, const QC& parent, std::vector<ClientRequest> cmds = {}) const {
    return create_prepare_msg(view, parent.seq + 1, parent.block_hash, parent, std::nullopt,
                              std::move(cmds), keys.at(primary_of(view, config)));
  }

  QC certify(const Block& b, View view, std::vector<NodeId> voters = {}) const {
    if (voters.empty())
      for (NodeId i = 0; i < config.quorum; ++i) voters.push_back(i);
    std::vector<Vote> votes;
    for (NodeId v : voters) votes.push_back(make_vote(b, view, keys.at(v)));
    return generate_qc(votes, committee);
  }

  // A certified chain of `len` blocks, block i proposed in view i.
  std::vector<std::pair<Block, QC>> chain(std::size_t len) const {
    std::vector<std::pair<Block, QC>> out;
    QC parent = genesis;
    for (std::size_t i = 1; i <= len; ++i) {
      Block b = propose(i, parent);
      QC qc = certify(b, i);
      out.emplace_back(b, qc);
      parent = qc;
    }
    return out;
  }

  UHeader u_of(const Block& b) const { return UHeader{b.header, b.header_sig}; }
};

}  // namespace vbft::testing
