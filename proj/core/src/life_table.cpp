#include "decel/life_table.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace decel {

LifeTable::LifeTable(int start_age, std::vector<LifeTableCell> cells)
    : start_age_(start_age), cells_(std::move(cells)) {
  if (start_age_ < 0) throw std::invalid_argument("life table start age must be >= 0");
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const auto& c = cells_[i];
    const auto where = " at age " + std::to_string(age(i));
    if (!std::isfinite(c.deaths) || !std::isfinite(c.exposure))
      throw std::invalid_argument("non-finite life table cell" + where);
    if (c.deaths < 0.0) throw std::invalid_argument("negative deaths" + where);
    if (c.exposure < 0.0) throw std::invalid_argument("negative exposure" + where);
    if (c.exposure == 0.0 && c.deaths > 0.0)
      throw std::invalid_argument("deaths with zero exposure" + where);
  }
}

double LifeTable::total_deaths() const noexcept {
  double s = 0.0;
  for (const auto& c : cells_) s += c.deaths;
  return s;
}

double LifeTable::total_exposure() const noexcept {
  double s = 0.0;
  for (const auto& c : cells_) s += c.exposure;
  return s;
}

LifeTable LifeTable::scaled(double k) const {
  if (!(k > 0.0) || !std::isfinite(k)) throw std::invalid_argument("scale factor must be > 0");
  auto cells = cells_;
  for (auto& c : cells) {
    c.deaths *= k;
    c.exposure *= k;
  }
  return LifeTable(start_age_, std::move(cells));
}

}  // namespace decel
