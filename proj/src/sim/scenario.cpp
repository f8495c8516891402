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

#include "vbft/sim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "vbft/errors.hpp"

namespace vbft::sim {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::none: return "none";
    case Strategy::crash: return "crash";
    case Strategy::mute: return "mute";
    case Strategy::equivocate: return "equivocate";
    case Strategy::delay: return "delay";
    case Strategy::vc_spam: return "vc_spam";
  }
  return "?";
}

View message_view(const Message& m) {
  return std::visit(
      [](const auto& x) -> View {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Block>) return x.header.view;
        else if constexpr (std::is_same_v<T, ViewChangeMsg>) return x.next_view;
        else if constexpr (std::is_same_v<T, ReadyCert>) return x.qc.view;
        else if constexpr (std::is_same_v<T, Vote> || std::is_same_v<T, NewViewMsg> ||
                           std::is_same_v<T, ReadyMsg> || std::is_same_v<T, PayloadRequest> ||
                           std::is_same_v<T, PayloadResponse> ||
                           std::is_same_v<T, NegativeResponse>)
          return x.view;
        else return 0;
      },
      m);
}

bool HoldRule::matches(NodeId src, NodeId dst, const Message& m) const {
  if (from && *from != src) return false;
  if (to && *to != dst) return false;
  if (!kind.empty() && kind != message_kind(m)) return false;
  if (view && *view != message_view(m)) return false;
  return true;
}

bool Scenario::is_byzantine(NodeId id) const {
  return std::find(byzantine.begin(), byzantine.end(), id) != byzantine.end();
}

void Scenario::validate() const {
  config.validate();
  auto in_range = [&](const std::vector<NodeId>& ids, const char* what) {
    for (NodeId id : ids)
      if (id >= config.n) throw ConfigError(std::string(what) + ": node id out of range");
  };
  in_range(byzantine, "byzantine");
  if (adversary.partition) in_range(*adversary.partition, "adv_partition");
  if (adversary.vote_targets) in_range(*adversary.vote_targets, "adv_vote_targets");
  in_range(adversary.targets, "adv_targets");
  std::vector<NodeId> b = byzantine;
  std::sort(b.begin(), b.end());
  if (std::adjacent_find(b.begin(), b.end()) != b.end())
    throw ConfigError("byzantine: duplicate node id");
  if (byzantine.size() > config.f) throw ConfigError("byzantine set larger than f");
  if (adversary.strategy != Strategy::none && byzantine.empty())
    throw ConfigError("adversary strategy needs at least one byzantine node");
  if (adversary.strategy == Strategy::vc_spam && adversary.count > config.f)
    throw ConfigError("vc_spam count exceeds f");
  if (adversary.strategy == Strategy::delay && adversary.amount > delta_post)
    throw ConfigError("delay amount exceeds delta_post");
  if (delta_min > delta_pre || delta_min > delta_post)
    throw ConfigError("delta_min must not exceed delta_pre or delta_post");
  if (delta_post == 0) throw ConfigError("delta_post must be positive");
  if (drop_pre < 0.0 || drop_pre > 1.0) throw ConfigError("drop_pre must lie in [0, 1]");
  if (duration == 0) throw ConfigError("duration must be positive");
  if (clients > 0 && request_interval == 0) throw ConfigError("request_interval must be positive");
  for (const auto& h : holds) {
    if ((h.from && *h.from >= config.n) || (h.to && *h.to >= config.n))
      throw ConfigError("hold: node id out of range");
  }
}

namespace {

std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw ConfigError(key + ": bad number");
    return d;
  } catch (const std::logic_error&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected on/off, got '" + v + "'");
}

std::vector<NodeId> to_ids(const std::string& key, const std::string& v) {
  std::vector<NodeId> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<NodeId>(to_u64(key, item)));
  }
  return out;
}

std::optional<std::uint64_t> wildcard(const std::string& key, const std::string& v) {
  if (v == "*" || v.empty()) return std::nullopt;
  return to_u64(key, v);
}

// from:to:kind:view, each part may be `*`.
HoldRule to_hold(const std::string& v) {
  std::vector<std::string> parts;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(trim(item));
  if (parts.size() != 4) throw ConfigError("hold: expected from:to:kind:view");
  HoldRule r;
  if (auto x = wildcard("hold", parts[0])) r.from = static_cast<NodeId>(*x);
  if (auto x = wildcard("hold", parts[1])) r.to = static_cast<NodeId>(*x);
  if (parts[2] != "*") r.kind = parts[2];
  if (auto x = wildcard("hold", parts[3])) r.view = *x;
  return r;
}

Strategy to_strategy(const std::string& v) {
  for (Strategy s : {Strategy::none, Strategy::crash, Strategy::mute, Strategy::equivocate,
                     Strategy::delay, Strategy::vc_spam})
    if (v == to_string(s)) return s;
  throw ConfigError("adversary: unknown strategy '" + v + "'");
}

}  // namespace

void apply_key(Scenario& sc, const std::string& key, const std::string& value) {
  const std::string& v = value;
  auto u = [&] { return to_u64(key, v); };
  auto& a = sc.adversary;
  if (key == "name") sc.name = v;
  else if (key == "n") {
    SimTime t = sc.config.timeout_base;
    PrimaryMode m = sc.config.primary_mode;
    std::uint64_t ps = sc.config.primary_seed;
    std::uint64_t n = u();
    if (n < 4 || n > 1000) throw ConfigError("n must lie in [4, 1000]");
    sc.config = Config::for_nodes(static_cast<std::uint32_t>(n), t, m, ps);
  } else if (key == "timeout_base") sc.config.timeout_base = u();
  else if (key == "primary_mode") {
    if (v == "round_robin") sc.config.primary_mode = PrimaryMode::round_robin;
    else if (v == "seeded_random") sc.config.primary_mode = PrimaryMode::seeded_random;
    else throw ConfigError("primary_mode: expected round_robin or seeded_random");
  } else if (key == "primary_seed") sc.config.primary_seed = u();
  else if (key == "seed") sc.seed = u();
  else if (key == "key_seed") sc.key_seed = u();
  else if (key == "gst") sc.gst = u();
  else if (key == "delta_min") sc.delta_min = u();
  else if (key == "delta_pre") sc.delta_pre = u();
  else if (key == "delta_post") sc.delta_post = u();
  else if (key == "delta") sc.delta_min = sc.delta_pre = sc.delta_post = u();
  else if (key == "drop_pre") sc.drop_pre = to_double(key, v);
  else if (key == "byzantine") sc.byzantine = to_ids(key, v);
  else if (key == "adversary") a.strategy = to_strategy(v);
  else if (key == "adv_view") a.view = u();
  else if (key == "adv_view_to") a.view_to = u();
  else if (key == "adv_partition") a.partition = v == "none" ? std::vector<NodeId>{} : to_ids(key, v);
  else if (key == "adv_vote_targets")
    a.vote_targets = v == "none" ? std::vector<NodeId>{} : to_ids(key, v);
  else if (key == "adv_silent_vc") a.silent_vc = to_bool(key, v);
  else if (key == "adv_targets") a.targets = to_ids(key, v);
  else if (key == "adv_amount") a.amount = u();
  else if (key == "adv_count") a.count = static_cast<std::uint32_t>(u());
  else if (key == "adv_label") a.label = u();
  else if (key == "hold") sc.holds.push_back(to_hold(v));
  else if (key == "clients") sc.clients = static_cast<std::uint32_t>(u());
  else if (key == "request_interval") sc.request_interval = u();
  else if (key == "requests_per_client") sc.requests_per_client = static_cast<std::uint32_t>(u());
  else if (key == "duration") sc.duration = u();
  else if (key == "target_blocks") sc.target_blocks = u();
  else if (key == "min_view_changes") sc.min_view_changes = static_cast<std::uint32_t>(u());
  else if (key == "max_seq") sc.options.max_seq = u();
  else if (key == "batch") sc.options.batch_size = u();
  else if (key == "piggyback") sc.options.piggyback = to_bool(key, v);
  else if (key == "verify_mode") {
    if (v == "linear") sc.options.verify_mode = VerifyMode::linear;
    else if (v == "quadratic") sc.options.verify_mode = VerifyMode::quadratic;
    else throw ConfigError("verify_mode: expected linear or quadratic");
  } else if (key == "trace_messages") sc.trace_messages = to_bool(key, v);
  else if (key == "check_liveness") sc.check_liveness = to_bool(key, v);
  else if (key == "self_test_corrupt") sc.self_test_corrupt = to_bool(key, v);
  else throw ConfigError("unknown key '" + key + "'");
}

Scenario parse_scenario(const std::string& text) {
  Scenario sc;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  bool explicit_timeout = false;
  while (std::getline(ss, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    explicit_timeout |= key == "timeout_base";
    try {
      apply_key(sc, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  // Initial timeout defaults to four post-GST delay bounds.
  if (!explicit_timeout) sc.config.timeout_base = 4 * sc.delta_post;
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  Scenario sc = parse_scenario(buf.str());
  if (sc.name == "scenario") {
    auto slash = path.find_last_of('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    if (auto dot = base.rfind('.'); dot != std::string::npos) base.erase(dot);
    sc.name = base;
  }
  return sc;
}

}  // namespace vbft::sim
