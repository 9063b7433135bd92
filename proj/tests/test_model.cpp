#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "decel/model.hpp"
#include "decel/simulate.hpp"
#include "oracles.hpp"

using namespace decel;

namespace {

LifeTable single_cell(double d, double e) { return LifeTable(0, {{d, e}}); }

LifeTable synthetic_table(const ModelParams& p, std::size_t n, std::uint64_t seed) {
  return build_life_table(sample_lifetimes(n, p, seed), 120).table;
}

}  // namespace

TEST_CASE("LifeTable rejects inconsistent cells") {
  CHECK_THROWS_AS(LifeTable(0, {{1.0, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(LifeTable(0, {{-1.0, 2.0}}), std::invalid_argument);
  CHECK_THROWS_AS(LifeTable(0, {{0.0, -2.0}}), std::invalid_argument);
  CHECK_THROWS_AS(LifeTable(-1, {}), std::invalid_argument);
  CHECK_NOTHROW(LifeTable(70, {{0.0, 0.0}, {2.5, 10.0}}));
  const LifeTable t(70, {{1.0, 2.0}, {3.0, 4.0}});
  CHECK(t.age(1) == 71);
  CHECK(t.total_deaths() == 4.0);
  CHECK(t.total_exposure() == 6.0);
}

TEST_CASE("gompertz_hazard") {
  CHECK(gompertz_hazard(0.0, 1e-4, 0.1) == 1e-4);
  CHECK(gompertz_hazard(70.0, 1e-4, 0.1) == doctest::Approx(0.109663315842846).epsilon(1e-13));
  CHECK_THROWS_AS(gompertz_hazard(10.0, 1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(gompertz_hazard(10.0, 0.0, 0.1), std::domain_error);
  CHECK_THROWS_AS(gompertz_hazard(-1.0, 1e-4, 0.1), std::domain_error);
  for (double x = 0.0; x < 120.0; x += 1.0)
    CHECK(gompertz_hazard(x + 1.0, 1e-4, 0.1) > gompertz_hazard(x, 1e-4, 0.1));
}

TEST_CASE("gg_hazard: age 0, submodel identity and plateau") {
  CHECK(gg_hazard(0.0, {3e-3, 0.11, 0.4}) == doctest::Approx(3e-3).epsilon(1e-15));
  for (double x = 0.0; x <= 110.0; x += 0.5)
    CHECK(gg_hazard(x, {1e-4, 0.1, 0.0}) == gompertz_hazard(x, 1e-4, 0.1));

  const ModelParams p{1e-4, 0.1, 0.2};
  CHECK(std::abs(gg_hazard(120.0, p) - 0.5) < 0.025);

  // monotone below the plateau b / sigma2 and converging to it
  double prev = 0.0;
  for (double x = 0.0; x <= 400.0; x += 0.25) {
    const double h = gg_hazard(x, p);
    CHECK(h > prev);
    CHECK(h < p.b / p.sigma2);
    prev = h;
  }
  CHECK(std::abs(gg_hazard(400.0, p) - 0.5) < 1e-12);

  CHECK_THROWS_AS(gg_hazard(1.0, {1e-4, 0.1, -0.1}), std::domain_error);
}

TEST_CASE("hazards survive extreme ages without overflow") {
  const ModelParams p{1e-4, 0.15, 0.3};
  CHECK(gg_hazard(1e4, p) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::isfinite(log_gg_hazard(1e4, p)));
  CHECK(gg_survival(1e4, p) == 0.0);
  CHECK(log_gg_hazard(1e4, {1e-4, 0.15, 0.0}) == doctest::Approx(std::log(1e-4) + 1500.0));
}

TEST_CASE("gg_survival") {
  CHECK(gg_survival(0.0, {1e-4, 0.1, 0.2}) == 1.0);
  CHECK(gg_survival(0.0, {1e-4, 0.1, 0.0}) == 1.0);

  // root-finding oracle on the Gompertz branch (mpmath: 65.4268401375672)
  const ModelParams gomp{1e-4, 0.1, 0.0};
  CHECK(gg_survival(65.4268401375672, gomp) == doctest::Approx(0.5).epsilon(1e-12));
  const double root = testing::find_root([&](double x) { return gg_survival(x, gomp) - 0.5; }, 1.0, 120.0);
  CHECK(root == doctest::Approx(65.4268401375672).epsilon(1e-10));

  const ModelParams p{1e-4, 0.1, 0.2};
  double prev = 1.0;
  for (double x = 0.0; x <= 110.0; x += 2.5) {
    const double s = gg_survival(x, p);
    CHECK(s <= prev);
    CHECK(std::abs(s - testing::survival_by_quadrature(x, p)) < 1e-8);
    prev = s;
  }
}

TEST_CASE("log_likelihood") {
  CHECK(log_likelihood({0.01, 0.1, 0.0}, single_cell(0.0, 100.0)) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(log_likelihood({0.1, 0.1, 0.0}, single_cell(1.0, 1.0)) ==
        doctest::Approx(-2.40258509299405).epsilon(1e-13));
  CHECK_THROWS_AS(log_likelihood({0.1, 0.1, 0.0}, LifeTable{}), std::invalid_argument);
  CHECK_THROWS_AS(log_likelihood({0.0, 0.1, 0.0}, single_cell(1.0, 1.0)), std::domain_error);

  // zero-exposure cells contribute nothing
  const LifeTable with_gap(0, {{1.0, 1.0}, {0.0, 0.0}});
  CHECK(log_likelihood({0.1, 0.1, 0.3}, with_gap) == log_likelihood({0.1, 0.1, 0.3}, single_cell(1.0, 1.0)));

  // agreement with the direct formula, including the Gompertz submodel
  const auto table = synthetic_table({1e-4, 0.1, 0.2}, 5000, 7);
  for (const ModelParams p : {ModelParams{1e-4, 0.1, 0.0}, ModelParams{2e-4, 0.09, 0.3}, ModelParams{5e-5, 0.12, 0.05}}) {
    const double ll = log_likelihood(p, table);
    CHECK(ll == doctest::Approx(testing::direct_log_likelihood(p, table)).epsilon(1e-12));
  }
}

TEST_CASE("likelihood differences scale with the table") {
  const auto table = synthetic_table({1e-4, 0.1, 0.2}, 3000, 11);
  const ModelParams p1{1e-4, 0.1, 0.2};
  const ModelParams p2{1.3e-4, 0.095, 0.1};
  const double d1 = log_likelihood(p1, table) - log_likelihood(p2, table);
  for (const double k : {2.0, 3.5, 0.25}) {
    const auto scaled = table.scaled(k);
    const double dk = log_likelihood(p1, scaled) - log_likelihood(p2, scaled);
    CHECK(dk == doctest::Approx(k * d1).epsilon(1e-9));
  }
}

TEST_CASE("penalty") {
  CHECK(penalty(1.0, 0.5) == 0.5);
  CHECK(penalty(0.2, 0.0) == 0.0);
  CHECK(penalty(0.4549, 0.5) == doctest::Approx(-0.166388832203089).epsilon(1e-12));
  CHECK_THROWS_AS(penalty(0.0, 0.5), std::domain_error);
  CHECK_THROWS_AS(penalty(-1.0, 0.5), std::domain_error);
  double prev = -std::numeric_limits<double>::infinity();
  for (double s = 1e-8; s < 10.0; s *= 1.5) {
    const double v = penalty(s, 0.5);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("penalized_log_likelihood") {
  const PenaltyConfig cfg;
  const auto cell = single_cell(1.0, 1.0);
  CHECK(penalized_log_likelihood({0.1, 0.1, 0.5}, cell, cfg) ==
        doctest::Approx(-2.30601150271407).epsilon(1e-13));
  CHECK(penalized_log_likelihood({0.1, 0.1, 1.0}, cell, cfg) ==
        doctest::Approx(log_likelihood({0.1, 0.1, 1.0}, cell) - 0.5).epsilon(1e-15));

  PenaltyConfig zero = cfg;
  zero.lambda = 0.0;
  const auto table = synthetic_table({1e-4, 0.1, 0.2}, 2000, 3);
  CHECK(penalized_log_likelihood({1e-4, 0.1, 0.3}, table, zero) == log_likelihood({1e-4, 0.1, 0.3}, table));

  CHECK_THROWS_AS(penalized_log_likelihood({0.1, 0.1, 0.0}, cell, cfg), std::domain_error);
  CHECK_THROWS_AS(penalized_log_likelihood({0.1, 0.1, 1e-9}, cell, cfg), std::domain_error);
}

TEST_CASE("penalty identity on random inputs") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> ua(std::log(1e-5), std::log(1e-3)), ub(0.05, 0.15),
      us(1e-6, 2.0), ul(0.0, 2.0);
  const auto table = synthetic_table({1e-4, 0.1, 0.2}, 2000, 5);
  for (int i = 0; i < 1000; ++i) {
    const ModelParams p{std::exp(ua(gen)), ub(gen), us(gen)};
    PenaltyConfig cfg;
    cfg.lambda = ul(gen);
    const double ll = log_likelihood(p, table);
    const double expected = ll - cfg.lambda * (p.sigma2 + std::log(p.sigma2));
    CHECK(penalized_log_likelihood(p, table, cfg) == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("gradient") {
  const PenaltyConfig cfg;
  const auto table = synthetic_table({1e-4, 0.1, 0.2}, 5000, 13);

  SUBCASE("lambda 0 penalized equals plain") {
    PenaltyConfig zero = cfg;
    zero.lambda = 0.0;
    const ModelParams p{1.1e-4, 0.098, 0.25};
    CHECK(gradient(p, table, zero, true) == gradient(p, table, zero, false));
  }
  SUBCASE("penalty gap in the sigma2 component") {
    const ModelParams p{1e-4, 0.1, 1.0};
    const auto plain = gradient(p, table, cfg, false);
    const auto pen = gradient(p, table, cfg, true);
    CHECK(pen[0] == plain[0]);
    CHECK(pen[1] == plain[1]);
    CHECK(pen[2] - plain[2] == doctest::Approx(-1.0).epsilon(1e-9));
  }
  SUBCASE("finite-difference oracle") {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> ua(std::log(1e-5), std::log(1e-3)), ub(0.05, 0.15), us(0.05, 0.8);
    for (int i = 0; i < 50; ++i) {
      const ModelParams p{std::exp(ua(gen)), ub(gen), us(gen)};
      for (const bool penalized : {false, true}) {
        const auto g = gradient(p, table, cfg, penalized);
        const auto fd = testing::central_difference(
            [&](const ModelParams& q) {
              return penalized ? penalized_log_likelihood(q, table, cfg) : log_likelihood(q, table);
            },
            p);
        for (std::size_t k = 0; k < 3; ++k) {
          const double rel = std::abs(g[k] - fd[k]) / std::max({std::abs(g[k]), std::abs(fd[k]), 1.0});
          CHECK(rel < 1e-4);
        }
      }
    }
  }
  SUBCASE("sigma2 = 0 gives the one-sided derivative") {
    const ModelParams p{1e-4, 0.1, 0.0};
    const auto g = gradient(p, table, cfg, false);
    const double h = 1e-7;
    const double fwd = (log_likelihood({1e-4, 0.1, h}, table) - log_likelihood(p, table)) / h;
    CHECK(g[2] == doctest::Approx(fwd).epsilon(1e-4));
    CHECK_THROWS_AS(gradient(p, table, cfg, true), std::domain_error);
  }
}

TEST_CASE("mse") {
  const ModelParams p{1e-4, 0.1, 0.2};
  std::vector<LifeTableCell> cells;
  for (int x = 0; x <= 40; ++x) cells.push_back({gg_hazard(x, p) * 1e6, 1e6});
  CHECK(mse(p, LifeTable(0, cells)) < 1e-20);

  CHECK(mse({0.1, 0.1, 0.0}, single_cell(2.0, 10.0)) == doctest::Approx(0.480453013918201).epsilon(1e-13));

  const auto table = synthetic_table(p, 4000, 17);
  CHECK(mse(p, table.scaled(2.0)) == doctest::Approx(mse(p, table)).epsilon(1e-13));

  // cells without deaths are excluded from both the sum and the count
  const LifeTable sparse(0, {{2.0, 10.0}, {0.0, 5.0}, {0.0, 0.0}});
  CHECK(mse({0.1, 0.1, 0.0}, sparse) == doctest::Approx(0.480453013918201).epsilon(1e-13));
  CHECK_THROWS_AS(mse(p, LifeTable(0, {{0.0, 5.0}})), std::invalid_argument);
}

TEST_CASE("PenaltyConfig validation") {
  CHECK_NOTHROW(PenaltyConfig{}.validate());
  CHECK_NOTHROW((PenaltyConfig{0.0, 1e-8, 0.0}).validate());
  CHECK_THROWS((PenaltyConfig{-0.1, 1e-8, 1e-6}).validate());
  CHECK_THROWS((PenaltyConfig{0.5, 1e-5, 1e-6}).validate());
  CHECK_THROWS((PenaltyConfig{0.5, 0.0, 1e-6}).validate());
  CHECK_THROWS((PenaltyConfig{0.5, 1e-8, 1.0}).validate());
}
