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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vbft/protocol.hpp"
#include "vbft/sim/scenario.hpp"
#include "vbft/sim/simulator.hpp"

namespace vbft::harness {

namespace fs = std::filesystem;

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitViolation = 2;

// Command-line overrides applied on top of a scenario file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<bool> piggyback;
  std::optional<VerifyMode> verify_mode;
  std::optional<std::uint32_t> n;
};

void apply(const Overrides& o, sim::Scenario& sc);

VerifyMode parse_verify_mode(const std::string& s);
const char* to_string(VerifyMode m);

// Writes trace.jsonl and metrics.json into `dir`, plus report.json when the
// run has violations.
struct RunFiles {
  fs::path trace;
  fs::path metrics;
  std::optional<fs::path> report;
};
RunFiles write_run(const sim::Scenario& sc, const sim::RunResult& res, const fs::path& dir);

std::string report_json(const sim::Scenario& sc, const sim::RunResult& res);

// `run`: 0 ok, 2 violation (report path printed to `log`), 1 config error.
int cmd_run(const fs::path& scenario_path, const Overrides& o, const fs::path& out,
            std::ostream& log);

// One scenario line of a suite. Paths are relative to the suite file.
struct SuiteSpec {
  std::vector<fs::path> scenarios;
  std::uint64_t seed_lo = 1;
  std::uint64_t seed_hi = 1;
  fs::path output_dir = "suite-out";
  std::vector<VerifyMode> verify_modes;  // empty: as in each scenario
  std::vector<std::uint32_t> n_values;   // empty: as in each scenario
  std::optional<bool> piggyback;

  void validate() const;
};

// Flat `key = value` format:
//   scenario = path        (repeatable)
//   seeds = 1..100         (or a single seed)
//   output_dir = path      (relative to the suite file)
//   verify_modes = linear,quadratic
//   n_values = 4,7,10
//   piggyback = on|off
SuiteSpec parse_suite(const std::string& text, const fs::path& base_dir = ".");
SuiteSpec load_suite(const fs::path& path);

struct SuiteRow {
  std::string scenario;
  std::uint64_t seed = 0;
  sim::Metrics metrics;
};

// Runs every (scenario x n x mode x seed) job on `parallel` threads. Per-run
// files go to <output_dir>/<scenario>/<seed>/; summary.csv is written in job
// order regardless of completion order.
std::vector<SuiteRow> run_suite(const SuiteSpec& spec, unsigned parallel);
std::string summary_csv(const std::vector<SuiteRow>& rows);

int cmd_suite(const fs::path& suite_path, unsigned parallel, std::optional<fs::path> out,
              std::ostream& log);

enum class FigureMetric : std::uint8_t { agg_verifies, authenticators };
FigureMetric parse_figure_metric(const std::string& s);

// Long-format CSV `n,mode,value` averaged over every metrics.json under
// `suite_out` with at least one new-view. Throws InputError when none exist.
std::string figure_csv(FigureMetric metric, const fs::path& suite_out);

int cmd_figure(const std::string& metric, const fs::path& suite_out, std::ostream& out,
               std::ostream& log);

}  // namespace vbft::harness
