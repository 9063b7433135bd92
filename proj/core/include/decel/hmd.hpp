#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "decel/life_table.hpp"

namespace decel {

enum class Sex { female, male, total };
enum class HmdKind { deaths, exposures };
enum class HmdLayout { period, cohort };

/// Accepts f|female|m|male|t|total (case-insensitive).
Sex parse_sex(std::string_view token);
const char* to_string(Sex s) noexcept;
const char* to_string(HmdKind k) noexcept;

/// Bad data or a failed lookup in HMD input.
class HmdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed HMD text; `line()` is 1-based.
class HmdParseError : public HmdError {
 public:
  HmdParseError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline constexpr int kHmdOpenAge = 110;

struct HmdRow {
  int year = 0;
  int age = 0;
  bool open_interval = false;  // the "110+" row
  std::array<std::optional<double>, 3> values;  // female, male, total; '.' is absent

  const std::optional<double>& value(Sex s) const { return values[static_cast<std::size_t>(s)]; }
  friend bool operator==(const HmdRow&, const HmdRow&) = default;
};

/// Contents of one HMD 1x1 Deaths or Exposures file. For cohort files the
/// year column is the birth cohort.
struct HmdDataset {
  HmdKind kind = HmdKind::deaths;
  HmdLayout layout = HmdLayout::period;
  std::string label;  // population, taken from the title up to the first comma
  std::string title;
  std::map<std::pair<int, int>, HmdRow> rows;  // keyed by (year, age)

  bool has_year(int year) const;
  std::vector<int> years() const;
  const HmdRow* find(int year, int age) const;

  friend bool operator==(const HmdDataset&, const HmdDataset&) = default;
};

/// Parses the published layout: a title line, a blank line, the header
/// "Year Age Female Male Total", then whitespace-separated rows. Every year
/// must list ages 0..110 exactly once. The layout is cohort when the title
/// mentions "cohort".
HmdDataset parse_hmd_file(std::istream& in, HmdKind kind);
HmdDataset parse_hmd_file(const std::filesystem::path& path, HmdKind kind);

/// Writes `data` back in the published layout (values in shortest
/// round-trip form).
void write_hmd_file(std::ostream& out, const HmdDataset& data);

/// Ages start_age..110 for one calendar year; the 110+ interval is the last
/// cell. Deaths are kept as published, including fractional values.
LifeTable extract_period_table(const HmdDataset& deaths, const HmdDataset& exposures, int year,
                               Sex sex, int start_age);

/// As extract_period_table for a birth cohort.
LifeTable extract_cohort_table(const HmdDataset& deaths, const HmdDataset& exposures,
                               int cohort_year, Sex sex, int start_age);

}  // namespace decel
