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

// vbft: scenario runner, suite runner and figure CSV emitter.

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "vbft/errors.hpp"
#include "vbft/harness/harness.hpp"
#include "vbft/sim/explorer.hpp"

namespace h = vbft::harness;

int main(int argc, char** argv) {
  CLI::App app{"Simulation harness for the VBFT replica"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run one scenario and check its invariants");
  std::string scenario_path;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string piggyback;
  std::string verify_mode;
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Seed (default: as in the scenario)");
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--piggyback", piggyback, "on|off")->check(CLI::IsMember({"on", "off"}));
  run->add_option("--verify-mode", verify_mode, "linear|quadratic")
      ->check(CLI::IsMember({"linear", "quadratic"}));

  // suite
  auto* suite = app.add_subcommand("suite", "Run every (scenario, seed) of a suite file");
  std::string suite_path;
  unsigned parallel = 1;
  std::string suite_out;
  suite->add_option("suite", suite_path, "Suite file")->required();
  suite->add_option("--parallel", parallel, "Concurrent runs")->check(CLI::Range(1u, 1024u));
  suite->add_option("--out", suite_out, "Override the suite's output_dir");

  // figure
  auto* figure = app.add_subcommand("figure", "Emit n,mode,value CSV from suite output");
  std::string metric;
  std::string figure_in;
  std::string figure_csv;
  figure->add_option("metric", metric, "agg_verifies|authenticators")->required();
  figure->add_option("--suite-out", figure_in, "Suite output directory")->required();
  figure->add_option("--csv", figure_csv, "Write to this file instead of stdout");

  // explore
  auto* explore = app.add_subcommand(
      "explore", "Bounded-exhaustive equivocation search at n = 4 (prints a summary)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : h::kExitConfig;
  }

  if (*run) {
    h::Overrides o;
    if (*seed_opt) o.seed = seed;
    if (!piggyback.empty()) o.piggyback = piggyback == "on";
    if (!verify_mode.empty()) o.verify_mode = h::parse_verify_mode(verify_mode);
    return h::cmd_run(scenario_path, o, out_dir, std::cerr);
  }
  if (*suite) {
    std::optional<std::filesystem::path> out;
    if (!suite_out.empty()) out = suite_out;
    return h::cmd_suite(suite_path, parallel, out, std::cerr);
  }
  if (*figure) {
    if (figure_csv.empty()) return h::cmd_figure(metric, figure_in, std::cout, std::cerr);
    std::ostringstream buf;
    int rc = h::cmd_figure(metric, figure_in, buf, std::cerr);
    if (rc != h::kExitOk) return rc;
    std::ofstream file(figure_csv, std::ios::binary);
    if (!file) {
      std::cerr << "error: cannot write '" << figure_csv << "'\n";
      return h::kExitConfig;
    }
    file << buf.str();
    return h::kExitOk;
  }
  if (*explore) {
    auto outcome = vbft::sim::explore_equivocation({}, [](std::size_t done, std::size_t total) {
      if (done % 8192 == 0) std::cerr << done << "/" << total << " schedules\n";
    });
    std::cout << "schedules " << outcome.schedules << "\n"
              << "violating " << outcome.violating << "\n"
              << "incomplete " << outcome.incomplete << "\n"
              << "revoked_and_blacklisted " << outcome.revoked_and_blacklisted << "\n";
    if (!outcome.witness.empty()) std::cout << "witness " << outcome.witness << "\n";
    for (const auto& v : outcome.violations) std::cout << "violation " << v << "\n";
    return outcome.violating == 0 ? h::kExitOk : h::kExitViolation;
  }
  return h::kExitOk;
}
