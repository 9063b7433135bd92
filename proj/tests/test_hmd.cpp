#include <doctest.h>

#include <sstream>

#include "decel/hmd.hpp"
#include "hmd_fixtures.hpp"

using namespace decel;

namespace {

const char* kHeader = "  Year          Age             Female            Male           Total\n";

std::string full_year(int year, const std::string& override_row = {}, int override_age = -1) {
  std::string out;
  for (int age = 0; age <= 110; ++age) {
    if (age == override_age) {
      out += override_row + "\n";
      continue;
    }
    out += "  " + std::to_string(year) + "  " + (age == 110 ? std::string("110+") : std::to_string(age)) +
           "  10.00  8.00  18.00\n";
  }
  return out;
}

HmdDataset parse(const std::string& text, HmdKind kind) {
  std::istringstream in(text);
  return parse_hmd_file(in, kind);
}

std::size_t error_line(const std::string& text) {
  try {
    parse(text, HmdKind::deaths);
  } catch (const HmdParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("parse maps a row to three sex records") {
  const std::string title = "France, Exposure to risk (period 1x1)\tLast modified: 01 Jan 2024\n\n";
  const auto d = parse(title + kHeader + full_year(1960, "1960  70  1292.53  801.12  2093.65", 70),
                       HmdKind::exposures);
  CHECK(d.label == "France");
  CHECK(d.layout == HmdLayout::period);
  CHECK(d.kind == HmdKind::exposures);
  const auto* row = d.find(1960, 70);
  REQUIRE(row);
  CHECK(*row->value(Sex::female) == 1292.53);
  CHECK(*row->value(Sex::male) == 801.12);
  CHECK(*row->value(Sex::total) == 2093.65);
  CHECK_FALSE(row->open_interval);
  CHECK(d.rows.size() == 111u);
}

TEST_CASE("open interval and missing markers") {
  const std::string title = "Japan, Deaths (period 1x1)\n\n";
  const auto d = parse(title + kHeader + full_year(2020, "2020  110+  43.2  .  .", 110), HmdKind::deaths);
  const auto* row = d.find(2020, 110);
  REQUIRE(row);
  CHECK(row->open_interval);
  CHECK(*row->value(Sex::female) == 43.2);
  CHECK_FALSE(row->value(Sex::male).has_value());
  CHECK_FALSE(row->value(Sex::total).has_value());
}

TEST_CASE("parse errors carry line numbers") {
  const std::string title = "X, Deaths (period 1x1)\n\n";
  CHECK(error_line("") == 1u);
  CHECK(error_line("X, Deaths\nnot blank\n") == 2u);
  CHECK(error_line(title + "Year Age Female Male\n") == 3u);
  // row 70 of the body sits on line 4 + 70
  CHECK(error_line(title + kHeader + full_year(1960, "1960 70 12.x 1 2", 70)) == 74u);
  CHECK(error_line(title + kHeader + full_year(1960, "1960 70 12 1", 70)) == 74u);
  CHECK(error_line(title + kHeader + full_year(1960, "1960 70 -1 1 2", 70)) == 74u);
  CHECK(error_line(title + kHeader + full_year(1960, "1960 50+ 1 1 2", 70)) == 74u);
  CHECK(error_line(title + kHeader + full_year(1960, "19x0 70 1 1 2", 70)) == 74u);
  // duplicate (year, age): age 69 repeated in place of 70
  CHECK(error_line(title + kHeader + full_year(1960, "1960 69 1 1 2", 70)) == 74u);
  // a year lacking an age is reported at end of input
  std::string missing = full_year(1960);
  missing.erase(missing.find("  1960  5  "), std::string("  1960  5  10.00  8.00  18.00\n").size());
  CHECK(error_line(title + kHeader + missing) > 0u);
}

TEST_CASE("golden fixture round-trips") {
  testing::SyntheticPopulation pop;
  const std::vector<int> years{1960, 1980, 2000, 2010, 2020};
  const auto text = testing::synthetic_pair_text(pop, "Testland", years, false, true);
  const auto first = parse(text, HmdKind::deaths);
  CHECK(first.rows.size() == 5u * 111u);
  CHECK(first.years() == years);

  std::ostringstream out;
  write_hmd_file(out, first);
  const auto second = parse(out.str(), HmdKind::deaths);
  CHECK(second == first);
}

TEST_CASE("extract_period_table") {
  testing::SyntheticPopulation pop;
  const std::vector<int> years{1960, 2000};
  const auto deaths = parse(testing::synthetic_pair_text(pop, "France", years, false, true), HmdKind::deaths);
  const auto expo = parse(testing::synthetic_pair_text(pop, "France", years, false, false), HmdKind::exposures);

  const auto t = extract_period_table(deaths, expo, 1960, Sex::female, 70);
  CHECK(t.size() == 41u);
  CHECK(t.start_age() == 70);
  CHECK(t[0].deaths == *deaths.find(1960, 70)->value(Sex::female));
  CHECK(t[40].exposure == *expo.find(1960, 110)->value(Sex::female));
  for (int start : {0, 50, 110}) CHECK(extract_period_table(deaths, expo, 2000, Sex::male, start).size() == 111u - start);

  CHECK_THROWS_AS(extract_period_table(deaths, expo, 1970, Sex::female, 70), HmdError);
  CHECK_THROWS_AS(extract_period_table(expo, deaths, 1960, Sex::female, 70), HmdError);
  CHECK_THROWS_AS(extract_period_table(deaths, expo, 1960, Sex::female, 111), HmdError);
  CHECK_THROWS_AS(extract_cohort_table(deaths, expo, 1960, Sex::female, 70), HmdError);
}

TEST_CASE("fractional deaths are kept bit-exactly") {
  const std::string dt = "F, Deaths (period 1x1)\n\n" + std::string(kHeader) +
                         full_year(1990, "1990 80 12.3456789012345 1 2", 80);
  const std::string et = "F, Exposure to risk (period 1x1)\n\n" + std::string(kHeader) + full_year(1990);
  const auto t = extract_period_table(parse(dt, HmdKind::deaths), parse(et, HmdKind::exposures), 1990,
                                      Sex::female, 70);
  CHECK(t[10].deaths == 12.3456789012345);
}

TEST_CASE("missing and inconsistent cells are named") {
  const std::string dt = "F, Deaths (period 1x1)\n\n" + std::string(kHeader) + full_year(1990);
  const std::string et_missing = "F, Exposure to risk (period 1x1)\n\n" + std::string(kHeader) +
                                 full_year(1990, "1990 95 . 8 18", 95);
  try {
    extract_period_table(parse(dt, HmdKind::deaths), parse(et_missing, HmdKind::exposures), 1990, Sex::female, 70);
    FAIL("expected an error");
  } catch (const HmdError& e) {
    CHECK(std::string(e.what()).find("age 95") != std::string::npos);
  }
  const std::string et_zero = "F, Exposure to risk (period 1x1)\n\n" + std::string(kHeader) +
                              full_year(1990, "1990 95 0 8 18", 95);
  CHECK_THROWS_AS(
      extract_period_table(parse(dt, HmdKind::deaths), parse(et_zero, HmdKind::exposures), 1990, Sex::female, 70),
      HmdError);
}

TEST_CASE("extract_cohort_table") {
  testing::SyntheticPopulation pop;
  const std::vector<int> cohorts{1847, 1848};
  const auto deaths = parse(testing::synthetic_pair_text(pop, "France", cohorts, true, true), HmdKind::deaths);
  const auto expo = parse(testing::synthetic_pair_text(pop, "France", cohorts, true, false), HmdKind::exposures);
  CHECK(deaths.layout == HmdLayout::cohort);

  const auto t = extract_cohort_table(deaths, expo, 1848, Sex::female, 70);
  CHECK(t.size() == 41u);
  for (const auto& c : t.cells()) CHECK((c.exposure > 0.0 || c.deaths == 0.0));
  CHECK_THROWS_AS(extract_cohort_table(deaths, expo, 1900, Sex::female, 70), HmdError);
  CHECK_THROWS_AS(extract_period_table(deaths, expo, 1848, Sex::female, 70), HmdError);
}

TEST_CASE("sex tokens") {
  CHECK(parse_sex("f") == Sex::female);
  CHECK(parse_sex("Male") == Sex::male);
  CHECK(parse_sex("t") == Sex::total);
  CHECK_THROWS_AS(parse_sex("x"), std::invalid_argument);
}
