#include <algorithm>
#include <cctype>
#include <istream>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "cli.hpp"
#include "decel/random.hpp"

namespace decel::cli {
namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(s);
  while (std::getline(is, field, sep)) out.push_back(trim(field));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

int to_int(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw std::invalid_argument(what + ": not an integer: '" + s + "'");
  return v;
}

std::vector<int> parse_years(const std::string& spec, const std::string& where) {
  std::vector<int> years;
  for (const auto& part : split(spec, ';')) {
    const auto dash = part.find('-', 1);
    if (dash == std::string::npos) {
      years.push_back(to_int(part, where));
      continue;
    }
    const int lo = to_int(trim(part.substr(0, dash)), where);
    const int hi = to_int(trim(part.substr(dash + 1)), where);
    if (hi < lo) throw std::invalid_argument(where + ": empty year range '" + part + "'");
    for (int y = lo; y <= hi; ++y) years.push_back(y);
  }
  if (years.empty()) throw std::invalid_argument(where + ": no years");
  return years;
}

}  // namespace

std::string format_number(double v) { return fmt::format("{:.9g}", v); }

std::vector<ScenarioFileEntry> parse_scenarios(std::istream& in, std::uint64_t master_seed) {
  namespace pt = boost::property_tree;
  // read_ini only understands whole-line comments; drop trailing ones too.
  std::stringstream cleaned;
  for (std::string line; std::getline(in, line);) cleaned << line.substr(0, line.find_first_of(";#")) << '\n';
  pt::ptree tree;
  try {
    pt::read_ini(cleaned, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument("scenario file: " + std::string(e.what()));
  }

  std::vector<ScenarioFileEntry> out;
  std::size_t index = 0;
  for (const auto& [id, section] : tree) {
    if (section.empty())
      throw std::invalid_argument("scenario file: key '" + id + "' outside a [scenario] section");
    const auto where = "scenario [" + id + "]";
    auto required = [&](const char* key) {
      const auto v = section.get_optional<double>(key);
      if (!v) throw std::invalid_argument(where + ": missing or non-numeric '" + key + "'");
      return *v;
    };
    for (const auto& [key, value] : section) {
      static const char* known[] = {"a", "b", "sigma2", "sample_size", "replications", "max_age", "seed"};
      if (std::find(std::begin(known), std::end(known), key) == std::end(known))
        throw std::invalid_argument(where + ": unknown key '" + key + "'");
    }

    ScenarioFileEntry e;
    e.scenario.id = id;
    e.scenario.true_params = {required("a"), required("b"), required("sigma2")};
    try {
      e.scenario.sample_size = section.get<std::size_t>("sample_size", 10000);
      const auto reps = section.get_optional<std::size_t>("replications");
      e.has_replications = reps.has_value();
      e.scenario.replications = reps.value_or(200);
      e.scenario.max_age = section.get<int>("max_age", 120);
      e.scenario.master_seed = section.get<std::uint64_t>("seed", derive_seed(master_seed, index));
    } catch (const pt::ptree_bad_data& err) {
      throw std::invalid_argument(where + ": " + err.what());
    }
    try {
      e.scenario.validate();
    } catch (const std::exception& err) {
      throw std::invalid_argument(where + ": " + err.what());
    }
    out.push_back(std::move(e));
    ++index;
  }
  if (out.empty()) throw std::invalid_argument("scenario file defines no scenarios");
  return out;
}

std::vector<ManifestEntry> parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  std::string line;
  std::size_t n = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++n;
    if (!trim(line).empty()) {
      header = split(trim(line), ',');
      break;
    }
  }
  if (header.empty()) throw std::invalid_argument("manifest is empty");
  const std::vector<std::string> required{"label", "deaths", "exposures", "years", "sexes"};
  if (header.size() < required.size() || !std::equal(required.begin(), required.end(), header.begin()))
    throw std::invalid_argument("manifest header must start with label,deaths,exposures,years,sexes");
  auto column = [&](const std::string& name) -> std::ptrdiff_t {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  const auto start_col = column("start_age");
  const auto layout_col = column("layout");

  std::vector<ManifestEntry> out;
  while (std::getline(in, line)) {
    ++n;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto f = split(t, ',');
    const auto where = "manifest line " + std::to_string(n);
    if (f.size() != header.size())
      throw std::invalid_argument(where + ": expected " + std::to_string(header.size()) + " fields");

    ManifestEntry e;
    e.label = f[0];
    e.deaths = base_dir / f[1];
    e.exposures = base_dir / f[2];
    e.years = parse_years(f[3], where);
    for (const auto& s : split(f[4], ';')) e.sexes.push_back(parse_sex(s));
    if (start_col >= 0) e.start_age = to_int(f[static_cast<std::size_t>(start_col)], where);
    if (layout_col >= 0) {
      const auto& l = f[static_cast<std::size_t>(layout_col)];
      if (l == "cohort")
        e.layout = HmdLayout::cohort;
      else if (l != "period" && !l.empty())
        throw std::invalid_argument(where + ": layout must be period or cohort");
    }
    out.push_back(std::move(e));
  }
  if (out.empty()) throw std::invalid_argument("manifest lists no populations");
  return out;
}

}  // namespace decel::cli
