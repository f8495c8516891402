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

// acceptance: runs the eight acceptance criteria and prints one PASS/FAIL line each.
// Exit status is 0 only when every criterion passes.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "vbft/harness/harness.hpp"
#include "vbft/sim/explorer.hpp"
#include "vbft/sim/simulator.hpp"

namespace fs = std::filesystem;
using namespace vbft;
using namespace vbft::sim;

namespace {

// Pinned limits.
constexpr double kHappyBudgetSec = 10.0;
constexpr double kSafetyBudgetSec = 300.0;
constexpr std::uint64_t kMinViewChanges = 5;
constexpr std::uint64_t kHappyBlocks = 50;
constexpr SimTime kDelta = 10;
constexpr int kPrimaryViews = 10000;
constexpr double kSigmas = 3.0;
constexpr std::uint64_t kPiggybackSaving = 3;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Reporter {
  int failed = 0;
  void line(int id, bool ok, const std::string& what, const std::string& detail) {
    if (!ok) ++failed;
    std::cout << (ok ? "PASS" : "FAIL") << " " << id << " " << what << ": " << detail << std::endl;
  }
};

// Runs job(i) for i in [0, count) on `threads` workers.
template <class Job>
void parallel_for(std::size_t count, unsigned threads, Job job) {
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::max(1u, threads); ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  for (auto& th : pool) th.join();
}

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

Scenario load(const fs::path& dir, const std::string& name) {
  return load_scenario((dir / (name + ".scenario")).string());
}

// 1. Every block of a failure-free run commits two hops and 2 * delta after its proposal.
void two_step_commit(Reporter& rep, const fs::path& dir) {
  auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (std::uint32_t n : {4u, 7u, 10u}) {
    Scenario sc = load(dir, "happy_path");
    apply_key(sc, "n", std::to_string(n));
    sc.target_blocks = kHappyBlocks;
    sc.validate();
    RunResult r = run_scenario(sc);
    CheckContext ctx = context_of(sc);
    std::uint64_t bad_steps = 0;
    for (Seq s = 1; s <= kHappyBlocks; ++s)
      if (count_steps(r.trace, s, ctx) != 2) ++bad_steps;
    bool run_ok = r.violations.empty() && r.metrics.committed_blocks >= kHappyBlocks &&
                  bad_steps == 0 && r.metrics.min_latency_ms == 2 * kDelta &&
                  r.metrics.max_latency_ms == 2 * kDelta;
    ok = ok && run_ok;
    detail += "n=" + std::to_string(n) + " latency [" + fmt(r.metrics.min_latency_ms) + "," +
              fmt(r.metrics.max_latency_ms) + "] steps!=2:" + std::to_string(bad_steps) + "; ";
  }
  double secs = since(t0);
  rep.line(1, ok && secs < kHappyBudgetSec, "two-step commit",
           detail + "runtime " + fmt(secs) + "s");
}

struct StressTotals {
  std::uint64_t runs = 0;
  std::uint64_t short_horizon = 0;  // fewer than kMinViewChanges honest view changes
  std::uint64_t incomplete = 0;
  std::map<ViolationKind, std::uint64_t> kinds;
  std::vector<std::string> examples;
};

StressTotals stress(const fs::path& dir, std::uint64_t seeds, unsigned threads) {
  struct Job {
    Scenario base;
  };
  std::vector<Job> jobs;
  for (const char* name : {"crash", "mute", "equivocate", "delay", "vc_spam"})
    for (std::uint32_t n : {4u, 7u}) {
      Scenario sc = load(dir, name);
      apply_key(sc, "n", std::to_string(n));
      sc.min_view_changes = std::max<std::uint32_t>(sc.min_view_changes, kMinViewChanges);
      sc.trace_messages = false;
      sc.validate();
      jobs.push_back({sc});
    }
  StressTotals tot;
  std::mutex mu;
  parallel_for(jobs.size() * seeds, threads, [&](std::size_t i) {
    Scenario sc = jobs[i / seeds].base;
    sc.seed = 1 + i % seeds;
    RunResult r = run_scenario(sc);
    std::lock_guard lock(mu);
    ++tot.runs;
    if (r.metrics.view_changes < kMinViewChanges) ++tot.short_horizon;
    if (r.metrics.committed_blocks < sc.target_blocks) ++tot.incomplete;
    for (const auto& v : r.violations) {
      ++tot.kinds[v.kind];
      if (tot.examples.size() < 5)
        tot.examples.push_back(sc.name + " n=" + std::to_string(sc.config.n) + " seed " +
                               std::to_string(sc.seed) + ": " + to_string(v.kind) + " " +
                               v.detail);
    }
  });
  return tot;
}

std::uint64_t count(const StressTotals& t, ViolationKind k) {
  auto it = t.kinds.find(k);
  return it == t.kinds.end() ? 0 : it->second;
}

// 4. Bounded-exhaustive equivocation search.
void equivocation_search(Reporter& rep) {
  auto t0 = Clock::now();
  ExploreOutcome o = explore_equivocation();
  bool ok = o.schedules == equivocation_space_size() && o.violating == 0 &&
            o.incomplete == 0 && o.revoked_and_blacklisted >= 1;
  std::string detail = std::to_string(o.schedules) + " schedules, " +
                       std::to_string(o.violating) + " violating, " +
                       std::to_string(o.incomplete) + " incomplete, " +
                       std::to_string(o.revoked_and_blacklisted) +
                       " revoke-and-blacklist witnesses; runtime " + fmt(since(t0)) + "s";
  if (!o.violations.empty()) detail += "; first: " + o.violations.front();
  rep.line(4, ok, "R-safety under equivocation", detail);
}

// Frequency of k consecutive Byzantine primaries under seeded-random rotation.
bool primary_runs_ok(std::string& detail) {
  bool ok = true;
  for (std::uint32_t n : {4u, 7u, 10u}) {
    Config c = Config::for_nodes(n);
    c.primary_mode = PrimaryMode::seeded_random;
    c.primary_seed = 1;
    for (std::uint32_t k = 1; k <= 4; ++k) {
      int hits = 0;
      for (View v = 0; v < kPrimaryViews; ++v) {
        bool all = true;
        for (std::uint32_t j = 0; j < k && all; ++j) all = primary_of(v + j, c) < c.f;
        hits += all;
      }
      double p = std::pow(static_cast<double>(c.f) / n, k);
      double bound = std::pow(1.0 / 3.0, k) + kSigmas * std::sqrt(p * (1 - p) / kPrimaryViews);
      double frac = static_cast<double>(hits) / kPrimaryViews;
      if (frac > bound) {
        ok = false;
        detail += " n=" + std::to_string(n) + " k=" + std::to_string(k) + " " + fmt(frac) +
                  ">" + fmt(bound);
      }
    }
  }
  return ok;
}

// 6. Aggregate verifications per new-view message, linear vs quadratic.
void verification_cost(Reporter& rep, const fs::path& dir, const fs::path& out, unsigned threads) {
  harness::SuiteSpec spec;
  spec.scenarios = {dir / "view_change_sweep.scenario"};
  spec.n_values = {4, 7, 10, 13, 16};
  spec.verify_modes = {VerifyMode::linear, VerifyMode::quadratic};
  spec.output_dir = out / "verification";
  std::map<std::pair<std::uint32_t, std::string>, double> value;
  bool ok = true;
  std::string detail;
  try {
    for (const auto& row : harness::run_suite(spec, threads)) {
      value[{row.metrics.n, row.metrics.verify_mode}] = row.metrics.agg_verifies_per_nv;
      ok = ok && row.metrics.violations == 0 && row.metrics.new_views > 0;
    }
    // Figure CSV for the same runs.
    std::string csv = harness::figure_csv(harness::FigureMetric::agg_verifies, spec.output_dir);
    std::ofstream(out / "figure_agg_verifies.csv") << csv;
  } catch (const std::exception& e) {
    rep.line(6, false, "linear view-change verification", e.what());
    return;
  }
  double prev_ratio = 0;
  for (std::uint32_t n : spec.n_values) {
    std::uint32_t f = (n - 1) / 3;
    double lin = value[{n, "linear"}];
    double quad = value[{n, "quadratic"}];
    double ratio = lin > 0 ? quad / lin : 0;
    ok = ok && lin == 2 && quad == 2 * f + 1 && ratio > prev_ratio;
    prev_ratio = ratio;
    detail += "n=" + std::to_string(n) + " " + fmt(lin) + "/" + fmt(quad) + "; ";
  }
  rep.line(6, ok, "linear view-change verification", detail + "(linear/quadratic)");
}

// 7. Hops to commit the first block after a view change that needs payload recovery.
void piggyback_saving(Reporter& rep, const fs::path& dir) {
  auto hops = [&](bool piggyback, bool& clean) {
    Scenario sc = load(dir, "recovery_piggyback");
    sc.options.piggyback = piggyback;
    RunResult r = run_scenario(sc);
    clean = clean && r.violations.empty() && r.metrics.committed_blocks >= sc.target_blocks;
    return r.metrics.max_steps;
  };
  bool clean = true;
  std::uint64_t fast = hops(true, clean);
  std::uint64_t base = hops(false, clean);
  rep.line(7, clean && base == fast + kPiggybackSaving, "piggyback recovery",
           "piggyback " + std::to_string(fast) + " hops, base " + std::to_string(base) + " hops");
}

// 8. Replaying a (scenario, seed) reproduces the trace byte for byte.
void determinism(Reporter& rep, const fs::path& dir) {
  bool ok = true;
  std::string detail;
  int checked = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".scenario") continue;
    Scenario sc;
    try {
      sc = load_scenario(entry.path().string());
      sc.validate();
    } catch (const std::exception&) {
      continue;  // deliberately invalid scenarios
    }
    for (std::uint64_t seed : {sc.seed, sc.seed + 101}) {
      sc.seed = seed;
      std::ostringstream a, b;
      write_jsonl(a, run_scenario(sc).trace);
      write_jsonl(b, run_scenario(sc).trace);
      if (a.str() != b.str() || a.str().empty()) {
        ok = false;
        detail += " " + entry.path().filename().string() + "@" + std::to_string(seed);
      }
      ++checked;
    }
  }
  rep.line(8, ok && checked > 0, "deterministic replay",
           std::to_string(checked) + " (scenario, seed) pairs replayed" +
               (detail.empty() ? "" : "; differing:" + detail));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for the VBFT replica and simulator"};
  std::string scenarios = VBFT_SCENARIO_DIR;
  std::uint64_t seeds = 1000;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::string out;
  app.add_option("--scenarios", scenarios, "Scenario directory")->capture_default_str();
  app.add_option("--seeds", seeds, "Seeds per (strategy, n) in the safety suite")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--parallel", threads, "Concurrent runs")->capture_default_str();
  app.add_option("--out", out, "Directory for figure output (default: a temp directory)");
  CLI11_PARSE(app, argc, argv);

  fs::path dir = scenarios;
  fs::path out_dir = out.empty() ? fs::temp_directory_path() / "vbft-acceptance" : fs::path(out);
  fs::create_directories(out_dir);

  Reporter rep;
  try {
    two_step_commit(rep, dir);

    auto t0 = Clock::now();
    StressTotals tot = stress(dir, seeds, threads);
    double secs = since(t0);
    std::string examples;
    for (const auto& e : tot.examples) examples += "; " + e;
    std::uint64_t agreement = count(tot, ViolationKind::agreement);
    std::uint64_t double_spend = count(tot, ViolationKind::double_spend);
    rep.line(2, agreement == 0 && double_spend == 0 && tot.short_horizon == 0 &&
                    secs < kSafetyBudgetSec,
             "safety suite",
             std::to_string(tot.runs) + " runs, " + std::to_string(agreement) + " agreement, " +
                 std::to_string(double_spend) + " double-spend, " +
                 std::to_string(tot.short_horizon) + " below " +
                 std::to_string(kMinViewChanges) + " view changes; runtime " + fmt(secs) + "s" +
                 examples);

    std::uint64_t eventual = count(tot, ViolationKind::eventual_commit);
    rep.line(3, eventual == 0 && count(tot, ViolationKind::honest_revoked) == 0,
             "honest-primary S-safety",
             std::to_string(eventual) + " eventual-commit and " +
                 std::to_string(count(tot, ViolationKind::honest_revoked)) +
                 " honest-revocation violations over " + std::to_string(tot.runs) + " runs");

    equivocation_search(rep);

    std::string primary_detail;
    bool primaries = primary_runs_ok(primary_detail);
    std::uint64_t liveness = count(tot, ViolationKind::liveness);
    rep.line(5, liveness == 0 && tot.incomplete == 0 && primaries, "liveness",
             std::to_string(liveness) + " runs over f+1 view changes between commits, " +
                 std::to_string(tot.incomplete) + " short of target; consecutive Byzantine " +
                 "primaries within (1/3)^k + 3 sigma: " + (primaries ? "yes" : "no") +
                 primary_detail);

    verification_cost(rep, dir, out_dir, threads);
    piggyback_saving(rep, dir);
    determinism(rep, dir);
  } catch (const std::exception& e) {
    std::cout << "FAIL aborted: " << e.what() << std::endl;
    return 1;
  }
  return rep.failed == 0 ? 0 : 1;
}
