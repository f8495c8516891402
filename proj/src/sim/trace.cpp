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

#include "vbft/sim/trace.hpp"

#include <nlohmann/json.hpp>

#include "vbft/crypto.hpp"

namespace vbft::sim {

const char* to_string(RecordKind k) {
  switch (k) {
    case RecordKind::send: return "send";
    case RecordKind::deliver: return "deliver";
    case RecordKind::hold: return "hold";
    case RecordKind::propose: return "propose";
    case RecordKind::vote: return "vote";
    case RecordKind::commit: return "commit";
    case RecordKind::revoke: return "revoke";
    case RecordKind::view_change: return "view_change";
    case RecordKind::new_view: return "new_view";
    case RecordKind::blacklist: return "blacklist";
    case RecordKind::request: return "request";
    case RecordKind::reply: return "reply";
    case RecordKind::confirm: return "confirm";
    case RecordKind::audit: return "audit";
  }
  return "?";
}

namespace {

nlohmann::ordered_json extra_of(const TraceRecord& r) {
  nlohmann::ordered_json e = nlohmann::ordered_json::object();
  switch (r.kind) {
    case RecordKind::send:
    case RecordKind::deliver:
    case RecordKind::hold:
      e[r.kind == RecordKind::deliver ? "from" : "to"] = r.a;
      e["msg"] = r.note;
      e["hops"] = r.c;
      if (r.kind == RecordKind::hold) e["release"] = r.b;
      break;
    case RecordKind::propose:
      e["reproposal"] = r.a != 0;
      e["qc_nr"] = r.c != 0;
      break;
    case RecordKind::commit:
      e["hops"] = r.a;
      e["proposer"] = r.b;
      break;
    case RecordKind::revoke: e["proposer"] = r.b; break;
    case RecordKind::view_change: e["timer"] = r.a != 0; break;
    case RecordKind::new_view:
      e["agg_verifies"] = r.a;
      e["authenticators"] = r.b;
      e["accepted"] = r.c != 0;
      break;
    case RecordKind::blacklist: e["culprit"] = r.a; break;
    case RecordKind::request:
    case RecordKind::reply:
    case RecordKind::confirm:
      e["client"] = r.a;
      e["timestamp"] = r.b;
      break;
    case RecordKind::vote:
    case RecordKind::audit: break;
  }
  if (!r.note.empty() && r.kind == RecordKind::audit) e["note"] = r.note;
  return e;
}

}  // namespace

std::string to_json_line(const TraceRecord& r) {
  nlohmann::ordered_json j;
  j["t"] = r.t;
  j["kind"] = to_string(r.kind);
  j["node"] = r.node;
  j["view"] = r.view;
  j["seq"] = r.seq;
  j["hash"] = r.hash == Hash{} ? std::string() : crypto::to_hex(r.hash);
  j["extra"] = extra_of(r);
  return j.dump();
}

void write_jsonl(std::ostream& out, const Trace& trace) {
  for (const auto& r : trace) out << to_json_line(r) << '\n';
}

}  // namespace vbft::sim
