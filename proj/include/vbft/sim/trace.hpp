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
#include <ostream>
#include <string>
#include <vector>

#include "vbft/types.hpp"

namespace vbft::sim {

enum class RecordKind : std::uint8_t {
  send,         // node = sender, a = receiver, c = hops, note = message kind
  deliver,      // node = receiver, a = sender, c = hops, note = message kind
  hold,         // like send; b = release time
  propose,      // node = proposer, view/seq/hash of the block, a = 1 if re-proposal, c = 1 with qc_nr
  vote,         // node = voter
  commit,       // view = QC view, a = hops, b = proposer
  revoke,       // view = header view, b = proposer
  view_change,  // view = target, a = 1 if timer driven
  new_view,     // view, a = aggregate verifies, b = authenticators, c = accepted
  blacklist,    // node = replica, a = culprit
  request,      // node = client, a = client, b = timestamp
  reply,        // node = replica, a = client, b = timestamp
  confirm,      // node = client, a = client, b = timestamp
  audit,        // note
};

const char* to_string(RecordKind k);

struct TraceRecord {
  SimTime t = 0;
  RecordKind kind = RecordKind::audit;
  std::int64_t node = -1;
  View view = 0;
  Seq seq = 0;
  Hash hash{};
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::int64_t c = 0;
  std::string note;

  bool operator==(const TraceRecord&) const = default;
};

using Trace = std::vector<TraceRecord>;

// One JSON object per line: {t, kind, node, view, seq, hash, extra}.
std::string to_json_line(const TraceRecord& r);
void write_jsonl(std::ostream& out, const Trace& trace);

}  // namespace vbft::sim
