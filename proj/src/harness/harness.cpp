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

#include "vbft/harness/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "vbft/errors.hpp"
#include "vbft/sim/trace.hpp"

namespace vbft::harness {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    unsigned long long x = std::stoull(v, &used);
    if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open '" + p.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + p.string() + "'");
  out << text;
}

}  // namespace

VerifyMode parse_verify_mode(const std::string& s) {
  if (s == "linear") return VerifyMode::linear;
  if (s == "quadratic") return VerifyMode::quadratic;
  throw ConfigError("verify mode must be linear or quadratic, got '" + s + "'");
}

const char* to_string(VerifyMode m) { return m == VerifyMode::linear ? "linear" : "quadratic"; }

void apply(const Overrides& o, sim::Scenario& sc) {
  if (o.n) sim::apply_key(sc, "n", std::to_string(*o.n));
  if (o.seed) sc.seed = *o.seed;
  if (o.piggyback) sc.options.piggyback = *o.piggyback;
  if (o.verify_mode) sc.options.verify_mode = *o.verify_mode;
}

std::string report_json(const sim::Scenario& sc, const sim::RunResult& res) {
  nlohmann::ordered_json j;
  j["scenario"] = sc.name;
  j["seed"] = sc.seed;
  auto& vs = j["violations"] = nlohmann::ordered_json::array();
  for (const auto& v : res.violations) {
    nlohmann::ordered_json e;
    e["kind"] = sim::to_string(v.kind);
    e["node"] = v.node;
    e["view"] = v.view;
    e["seq"] = v.seq;
    e["detail"] = v.detail;
    vs.push_back(std::move(e));
  }
  auto& mt = j["minimal_trace"] = nlohmann::ordered_json::array();
  for (const auto& r : res.minimized) mt.push_back(nlohmann::ordered_json::parse(sim::to_json_line(r)));
  return j.dump(2) + "\n";
}

RunFiles write_run(const sim::Scenario& sc, const sim::RunResult& res, const fs::path& dir) {
  fs::create_directories(dir);
  RunFiles files{dir / "trace.jsonl", dir / "metrics.json", std::nullopt};
  {
    std::ofstream out(files.trace, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + files.trace.string() + "'");
    sim::write_jsonl(out, res.trace);
  }
  write_file(files.metrics, sim::to_json(res.metrics));
  fs::path report = dir / "report.json";
  if (!res.violations.empty()) {
    write_file(report, report_json(sc, res));
    files.report = report;
  } else {
    fs::remove(report);
  }
  return files;
}

int cmd_run(const fs::path& scenario_path, const Overrides& o, const fs::path& out,
            std::ostream& log) {
  sim::Scenario sc;
  try {
    sc = sim::load_scenario(scenario_path.string());
    apply(o, sc);
    sc.validate();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  sim::RunResult res = sim::run_scenario(sc);
  RunFiles files;
  try {
    files = write_run(sc, res, out);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  log << sc.name << " seed " << sc.seed << ": " << res.metrics.committed_blocks
      << " blocks, mean latency " << num(res.metrics.mean_latency_ms) << " ms, "
      << res.violations.size() << " violations\n";
  if (files.report) {
    log << "violation report: " << files.report->string() << "\n";
    return kExitViolation;
  }
  return kExitOk;
}

// ---- suites ----------------------------------------------------------------------

void SuiteSpec::validate() const {
  if (scenarios.empty()) throw ConfigError("suite: at least one scenario is required");
  if (seed_lo > seed_hi) throw ConfigError("suite: empty seed range");
}

SuiteSpec parse_suite(const std::string& text, const fs::path& base_dir) {
  SuiteSpec spec;
  spec.output_dir = base_dir / "suite-out";
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("suite line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string v = trim(line.substr(eq + 1));
    try {
      if (key == "scenario") {
        spec.scenarios.push_back((base_dir / v).lexically_normal());
      } else if (key == "seeds") {
        auto dots = v.find("..");
        if (dots == std::string::npos) {
          spec.seed_lo = spec.seed_hi = to_u64(key, v);
        } else {
          spec.seed_lo = to_u64(key, trim(v.substr(0, dots)));
          spec.seed_hi = to_u64(key, trim(v.substr(dots + 2)));
        }
      } else if (key == "output_dir") {
        spec.output_dir = (base_dir / v).lexically_normal();
      } else if (key == "verify_modes") {
        spec.verify_modes.clear();
        for (const auto& m : split(v, ',')) spec.verify_modes.push_back(parse_verify_mode(m));
      } else if (key == "n_values") {
        spec.n_values.clear();
        for (const auto& x : split(v, ','))
          spec.n_values.push_back(static_cast<std::uint32_t>(to_u64(key, x)));
      } else if (key == "piggyback") {
        if (v != "on" && v != "off") throw ConfigError("piggyback: expected on or off");
        spec.piggyback = v == "on";
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      throw ConfigError("suite line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  spec.validate();
  return spec;
}

SuiteSpec load_suite(const fs::path& path) {
  return parse_suite(read_file(path), path.parent_path().empty() ? "." : path.parent_path());
}

namespace {

struct Job {
  sim::Scenario sc;
  fs::path dir;
};

std::vector<Job> expand(const SuiteSpec& spec) {
  std::vector<Job> jobs;
  std::vector<std::optional<std::uint32_t>> ns(spec.n_values.begin(), spec.n_values.end());
  if (ns.empty()) ns.push_back(std::nullopt);
  std::vector<std::optional<VerifyMode>> modes(spec.verify_modes.begin(), spec.verify_modes.end());
  if (modes.empty()) modes.push_back(std::nullopt);
  for (const auto& path : spec.scenarios) {
    sim::Scenario base = sim::load_scenario(path.string());
    for (const auto& n : ns) {
      for (const auto& mode : modes) {
        sim::Scenario sc = base;
        Overrides o;
        o.n = n;
        o.verify_mode = mode;
        o.piggyback = spec.piggyback;
        apply(o, sc);
        if (n) sc.name += "_n" + std::to_string(*n);
        if (mode) sc.name += std::string("_") + to_string(*mode);
        for (std::uint64_t seed = spec.seed_lo;; ++seed) {
          sc.seed = seed;
          sc.validate();
          jobs.push_back({sc, spec.output_dir / sc.name / std::to_string(seed)});
          if (seed == spec.seed_hi) break;
        }
      }
    }
  }
  return jobs;
}

}  // namespace

std::vector<SuiteRow> run_suite(const SuiteSpec& spec, unsigned parallel) {
  spec.validate();
  std::vector<Job> jobs = expand(spec);
  std::vector<SuiteRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        sim::RunResult res = sim::run_scenario(jobs[i].sc);
        write_run(jobs[i].sc, res, jobs[i].dir);
        rows[i] = {jobs[i].sc.name, jobs[i].sc.seed, res.metrics};
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned k = std::max(1u, std::min<unsigned>(parallel, static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < k; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::string summary_csv(const std::vector<SuiteRow>& rows) {
  std::ostringstream out;
  out << "scenario,seed,commits,mean_latency_ms,steps_per_commit,agg_verifies_per_nv,"
         "revocations,chain_quality,violations\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << r.scenario << ',' << r.seed << ',' << m.committed_blocks << ','
        << num(m.mean_latency_ms) << ',' << num(m.steps_per_commit) << ','
        << num(m.agg_verifies_per_nv) << ',' << m.revocations << ',' << num(m.chain_quality)
        << ',' << m.violations << '\n';
  }
  return out.str();
}

int cmd_suite(const fs::path& suite_path, unsigned parallel, std::optional<fs::path> out,
              std::ostream& log) {
  SuiteSpec spec;
  std::vector<SuiteRow> rows;
  try {
    spec = load_suite(suite_path);
    if (out) spec.output_dir = *out;
    rows = run_suite(spec, parallel);
    fs::create_directories(spec.output_dir);
    write_file(spec.output_dir / "summary.csv", summary_csv(rows));
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  std::uint64_t bad = 0;
  for (const auto& r : rows) {
    if (r.metrics.violations == 0) continue;
    ++bad;
    log << "violation: " << r.scenario << " seed " << r.seed << " (see "
        << (spec.output_dir / r.scenario / std::to_string(r.seed) / "report.json").string()
        << ")\n";
  }
  log << rows.size() << " runs, " << bad << " with violations; summary "
      << (spec.output_dir / "summary.csv").string() << "\n";
  return bad == 0 ? kExitOk : kExitViolation;
}

// ---- figures -----------------------------------------------------------------------

FigureMetric parse_figure_metric(const std::string& s) {
  if (s == "agg_verifies") return FigureMetric::agg_verifies;
  if (s == "authenticators") return FigureMetric::authenticators;
  throw InputError("figure metric must be agg_verifies or authenticators, got '" + s + "'");
}

std::string figure_csv(FigureMetric metric, const fs::path& suite_out) {
  if (!fs::is_directory(suite_out))
    throw InputError("suite output '" + suite_out.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(suite_out))
    if (e.is_regular_file() && e.path().filename() == "metrics.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::map<std::pair<std::uint32_t, std::string>, std::pair<double, std::size_t>> acc;
  for (const auto& p : files) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(p));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("malformed '" + p.string() + "': " + e.what());
    }
    if (j.value("new_views", 0) == 0) continue;
    double v = metric == FigureMetric::agg_verifies ? j.at("agg_verifies_per_nv").get<double>()
                                                    : j.at("authenticators_per_nv").get<double>();
    auto& [sum, count] = acc[{j.at("n").get<std::uint32_t>(), j.at("verify_mode").get<std::string>()}];
    sum += v;
    ++count;
  }
  if (acc.empty())
    throw InputError("no runs with new-view messages under '" + suite_out.string() + "'");
  std::ostringstream out;
  out << "n,mode,value\n";
  for (const auto& [key, v] : acc)
    out << key.first << ',' << key.second << ',' << num(v.first / static_cast<double>(v.second))
        << '\n';
  return out.str();
}

int cmd_figure(const std::string& metric, const fs::path& suite_out, std::ostream& out,
               std::ostream& log) {
  try {
    out << figure_csv(parse_figure_metric(metric), suite_out);
  } catch (const InputError& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace vbft::harness
