#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "decel/hmd.hpp"
#include "decel/simulate.hpp"

namespace decel::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kNumericError = 3 };

/// Entry point shared by main() and the tests. `args` excludes the program
/// name. Reports go to --out when given, otherwise to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// 9 significant digits, '.' decimal point, independent of locale.
std::string format_number(double v);

// ---------------------------------------------------------------------------
// Scenario files: INI sections, one per scenario.
//
//   [het_a1_b1_s1]
//   a = 0.0001
//   b = 0.1
//   sigma2 = 0.2
//   sample_size = 10000   ; optional, default 10000
//   replications = 200    ; optional, default 200
//   max_age = 120         ; optional
//   seed = 7              ; optional; otherwise derived from the master seed

struct ScenarioFileEntry {
  SimulationScenario scenario;
  bool has_replications = false;
};

std::vector<ScenarioFileEntry> parse_scenarios(std::istream& in, std::uint64_t master_seed);

// ---------------------------------------------------------------------------
// Batch manifests: CSV with header
//   label,deaths,exposures,years,sexes[,start_age][,layout]
// years as "1950-2019" or "1960;1980"; sexes as "f;m"; layout period|cohort.
// Relative paths resolve against the manifest's directory.

struct ManifestEntry {
  std::string label;
  std::filesystem::path deaths;
  std::filesystem::path exposures;
  std::vector<int> years;
  std::vector<Sex> sexes;
  int start_age = 70;
  HmdLayout layout = HmdLayout::period;
};

std::vector<ManifestEntry> parse_manifest(std::istream& in, const std::filesystem::path& base_dir);

}  // namespace decel::cli
