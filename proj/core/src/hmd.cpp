#include "decel/hmd.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace decel {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> tokens;
  for (std::string t; is >> t;) tokens.push_back(std::move(t));
  return tokens;
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

template <class T>
bool parse_number(std::string_view token, T& out) {
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

std::string format_value(const std::optional<double>& v) {
  if (!v) return ".";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, *v);
  return std::string(buf, ptr);
}

std::string cell_name(const HmdDataset& d, int year, int age, Sex sex) {
  std::ostringstream os;
  os << (d.label.empty() ? "population" : d.label) << ' ' << to_string(d.kind) << ' '
     << (d.layout == HmdLayout::cohort ? "cohort " : "year ") << year << " age " << age
     << (age == kHmdOpenAge ? "+" : "") << ' ' << to_string(sex);
  return os.str();
}

LifeTable extract_table(const HmdDataset& deaths, const HmdDataset& exposures, int year, Sex sex,
                        int start_age, HmdLayout layout) {
  if (deaths.kind != HmdKind::deaths) throw HmdError("first dataset is not a deaths file");
  if (exposures.kind != HmdKind::exposures) throw HmdError("second dataset is not an exposures file");
  const char* want = layout == HmdLayout::cohort ? "cohort" : "period";
  if (deaths.layout != layout || exposures.layout != layout)
    throw HmdError(std::string("expected ") + want + " layout in both deaths and exposures files");
  if (start_age < 0 || start_age > kHmdOpenAge)
    throw HmdError("start age must lie in 0.." + std::to_string(kHmdOpenAge));
  const char* unit = layout == HmdLayout::cohort ? "cohort " : "year ";
  if (!deaths.has_year(year))
    throw HmdError(std::string(unit) + std::to_string(year) + " not present in deaths file");
  if (!exposures.has_year(year))
    throw HmdError(std::string(unit) + std::to_string(year) + " not present in exposures file");

  std::vector<LifeTableCell> cells;
  cells.reserve(static_cast<std::size_t>(kHmdOpenAge - start_age + 1));
  for (int age = start_age; age <= kHmdOpenAge; ++age) {
    const auto* dr = deaths.find(year, age);
    const auto* er = exposures.find(year, age);
    if (!dr || !dr->value(sex)) throw HmdError("missing value: " + cell_name(deaths, year, age, sex));
    if (!er || !er->value(sex)) throw HmdError("missing value: " + cell_name(exposures, year, age, sex));
    const double d = *dr->value(sex);
    const double e = *er->value(sex);
    if (e == 0.0 && d > 0.0)
      throw HmdError("deaths with zero exposure: " + cell_name(deaths, year, age, sex));
    cells.push_back({d, e});
  }
  return LifeTable(start_age, std::move(cells));
}

}  // namespace

Sex parse_sex(std::string_view token) {
  const auto t = lower(token);
  if (t == "f" || t == "female") return Sex::female;
  if (t == "m" || t == "male") return Sex::male;
  if (t == "t" || t == "total") return Sex::total;
  throw std::invalid_argument("unknown sex '" + std::string(token) + "' (expected f, m or t)");
}

const char* to_string(Sex s) noexcept {
  switch (s) {
    case Sex::female: return "female";
    case Sex::male: return "male";
    case Sex::total: return "total";
  }
  return "?";
}

const char* to_string(HmdKind k) noexcept { return k == HmdKind::deaths ? "deaths" : "exposures"; }

HmdParseError::HmdParseError(std::size_t line, const std::string& message)
    : HmdError("line " + std::to_string(line) + ": " + message), line_(line) {}

bool HmdDataset::has_year(int year) const {
  const auto it = rows.lower_bound({year, 0});
  return it != rows.end() && it->first.first == year;
}

std::vector<int> HmdDataset::years() const {
  std::vector<int> out;
  for (const auto& [key, row] : rows)
    if (out.empty() || out.back() != key.first) out.push_back(key.first);
  return out;
}

const HmdRow* HmdDataset::find(int year, int age) const {
  const auto it = rows.find({year, age});
  return it == rows.end() ? nullptr : &it->second;
}

HmdDataset parse_hmd_file(std::istream& in, HmdKind kind) {
  HmdDataset data;
  data.kind = kind;

  std::string line;
  std::size_t n = 0;
  auto next = [&] {
    if (!std::getline(in, line)) return false;
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next()) throw HmdParseError(1, "empty input; expected a title line");
  data.title = line;
  data.label = line.substr(0, line.find(','));
  while (!data.label.empty() && std::isspace(static_cast<unsigned char>(data.label.back())))
    data.label.pop_back();
  data.layout = lower(line).find("cohort") != std::string::npos ? HmdLayout::cohort : HmdLayout::period;

  if (!next() || !is_blank(line)) throw HmdParseError(2, "expected a blank line after the title");
  if (!next()) throw HmdParseError(n + 1, "missing header line");
  const std::vector<std::string> header{"Year", "Age", "Female", "Male", "Total"};
  if (split_ws(line) != header)
    throw HmdParseError(n, "malformed header; expected 'Year Age Female Male Total'");

  while (next()) {
    if (is_blank(line)) continue;
    const auto tok = split_ws(line);
    if (tok.size() != 5)
      throw HmdParseError(n, "expected 5 fields, found " + std::to_string(tok.size()));

    HmdRow row;
    if (!parse_number(tok[0], row.year)) throw HmdParseError(n, "non-numeric year '" + tok[0] + "'");
    std::string_view age = tok[1];
    if (!age.empty() && age.back() == '+') {
      row.open_interval = true;
      age.remove_suffix(1);
    }
    if (!parse_number(age, row.age)) throw HmdParseError(n, "non-numeric age '" + tok[1] + "'");
    if (row.age < 0 || row.age > kHmdOpenAge)
      throw HmdParseError(n, "age " + tok[1] + " outside 0..110");
    if (row.open_interval && row.age != kHmdOpenAge)
      throw HmdParseError(n, "only age 110 may carry the open-interval '+'");

    for (std::size_t k = 0; k < 3; ++k) {
      const auto& t = tok[2 + k];
      if (t == ".") continue;
      double v = 0.0;
      if (!parse_number(t, v) || !std::isfinite(v)) throw HmdParseError(n, "non-numeric value '" + t + "'");
      if (v < 0.0) throw HmdParseError(n, "negative value '" + t + "'");
      row.values[k] = v;
    }
    const std::pair key{row.year, row.age};
    if (!data.rows.emplace(key, row).second)
      throw HmdParseError(n, "duplicate row for year " + tok[0] + " age " + tok[1]);
  }

  for (const int year : data.years()) {
    for (int age = 0; age <= kHmdOpenAge; ++age) {
      if (!data.find(year, age))
        throw HmdParseError(n, "year " + std::to_string(year) + " lacks age " + std::to_string(age));
    }
  }
  return data;
}

HmdDataset parse_hmd_file(const std::filesystem::path& path, HmdKind kind) {
  std::ifstream in(path);
  if (!in) throw HmdError("cannot open " + path.string());
  try {
    return parse_hmd_file(in, kind);
  } catch (const HmdParseError& e) {
    throw HmdParseError(e.line(), path.string() + ": " + std::string(e.what()));
  }
}

void write_hmd_file(std::ostream& out, const HmdDataset& data) {
  out << data.title << "\n\n";
  out << "  Year          Age             Female            Male           Total\n";
  for (const auto& [key, row] : data.rows) {
    std::string age = std::to_string(row.age);
    if (row.open_interval) age += '+';
    char buf[160];
    std::snprintf(buf, sizeof buf, "%6d%13s%19s%16s%16s\n", row.year, age.c_str(),
                  format_value(row.values[0]).c_str(), format_value(row.values[1]).c_str(),
                  format_value(row.values[2]).c_str());
    out << buf;
  }
}

LifeTable extract_period_table(const HmdDataset& deaths, const HmdDataset& exposures, int year,
                               Sex sex, int start_age) {
  return extract_table(deaths, exposures, year, sex, start_age, HmdLayout::period);
}

LifeTable extract_cohort_table(const HmdDataset& deaths, const HmdDataset& exposures,
                               int cohort_year, Sex sex, int start_age) {
  return extract_table(deaths, exposures, cohort_year, sex, start_age, HmdLayout::cohort);
}

}  // namespace decel
