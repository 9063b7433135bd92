#pragma once

#include <string_view>
#include <vector>

#include "decel/life_table.hpp"
#include "decel/model.hpp"
#include "decel/optimize.hpp"

namespace decel {

enum class ProfileParam { a, b, sigma2 };

/// Re-optimize the free parameters at each grid value, or hold them at the
/// reference estimate.
enum class ProfileMode { profile, slice };

ProfileParam parse_profile_param(std::string_view token);
const char* to_string(ProfileParam p) noexcept;

/// `count` evenly spaced values from `lo` to `hi`; a single point is `lo`.
struct ProfileGrid {
  double lo = 0.0;
  double hi = 0.0;
  int count = 1;

  /// Parses "LO:HI:N".
  static ProfileGrid parse(std::string_view spec);
  void validate(ProfileParam param) const;
  std::vector<double> values() const;
};

struct ProfilePoint {
  double value = 0.0;
  double loglik = 0.0;
  /// +inf at sigma2 == 0 when lambda > 0.
  double penalized_loglik = 0.0;
};

/// Log-likelihood and penalized log-likelihood along one parameter. In
/// profile mode the two free parameters are re-maximized separately for
/// each objective, starting from `reference`; sigma2 stays within
/// [cfg.sigma2_floor, box upper] while free.
std::vector<ProfilePoint> profile_curve(const LifeTable& table, const ModelParams& reference,
                                        ProfileParam param, const ProfileGrid& grid,
                                        ProfileMode mode, const PenaltyConfig& cfg,
                                        const SearchBox& box = {},
                                        const NelderMeadConfig& simplex = {});

}  // namespace decel
