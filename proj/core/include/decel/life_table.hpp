#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace decel {

/// One Poisson observation: deaths and person-years in [x, x+1).
struct LifeTableCell {
  double deaths = 0.0;
  double exposure = 0.0;

  friend bool operator==(const LifeTableCell&, const LifeTableCell&) = default;
};

/// Death counts and exposures for consecutive single-year ages starting at
/// `start_age`. Cell i covers ages [start_age + i, start_age + i + 1) and is
/// evaluated by the model at offset x = i.
///
/// Deaths may be fractional (HMD publishes split counts). Construction
/// enforces E >= 0, D >= 0 and D == 0 wherever E == 0.
class LifeTable {
 public:
  LifeTable() = default;
  LifeTable(int start_age, std::vector<LifeTableCell> cells);

  int start_age() const noexcept { return start_age_; }
  std::span<const LifeTableCell> cells() const noexcept { return cells_; }
  std::size_t size() const noexcept { return cells_.size(); }
  bool empty() const noexcept { return cells_.empty(); }
  const LifeTableCell& operator[](std::size_t i) const { return cells_[i]; }

  int age(std::size_t i) const noexcept { return start_age_ + static_cast<int>(i); }

  double total_deaths() const noexcept;
  double total_exposure() const noexcept;

  /// Copy with every D and E multiplied by `k` (k > 0).
  LifeTable scaled(double k) const;

  friend bool operator==(const LifeTable&, const LifeTable&) = default;

 private:
  int start_age_ = 0;
  std::vector<LifeTableCell> cells_;
};

}  // namespace decel
