#include "decel/profile.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace decel {
namespace {

// Free-coordinate view: the two parameters other than `fixed`, with a on the
// log scale.
struct FreeCoords {
  ProfileParam fixed;
  double value;

  ModelParams to_params(std::span<const double> x) const {
    switch (fixed) {
      case ProfileParam::a: return {value, x[0], x[1]};
      case ProfileParam::b: return {std::exp(x[0]), value, x[1]};
      case ProfileParam::sigma2: return {std::exp(x[0]), x[1], value};
    }
    return {};
  }

  std::vector<double> from_params(const ModelParams& p) const {
    switch (fixed) {
      case ProfileParam::a: return {p.b, p.sigma2};
      case ProfileParam::b: return {std::log(p.a), p.sigma2};
      case ProfileParam::sigma2: return {std::log(p.a), p.b};
    }
    return {};
  }
};

Bounds free_bounds(ProfileParam fixed, const SearchBox& box, double sigma2_lo) {
  const double la = std::log(box.lower.a);
  const double ua = std::log(box.upper.a);
  switch (fixed) {
    case ProfileParam::a: return {{box.lower.b, sigma2_lo}, {box.upper.b, box.upper.sigma2}};
    case ProfileParam::b: return {{la, sigma2_lo}, {ua, box.upper.sigma2}};
    case ProfileParam::sigma2: return {{la, box.lower.b}, {ua, box.upper.b}};
  }
  return {};
}

ModelParams with_value(ModelParams p, ProfileParam param, double v) {
  switch (param) {
    case ProfileParam::a: p.a = v; break;
    case ProfileParam::b: p.b = v; break;
    case ProfileParam::sigma2: p.sigma2 = v; break;
  }
  return p;
}

double penalized_at(double loglik, double sigma2, double lambda) {
  if (sigma2 > 0.0) return loglik - penalty(sigma2, lambda);
  return lambda > 0.0 ? std::numeric_limits<double>::infinity() : loglik;
}

}  // namespace

ProfileParam parse_profile_param(std::string_view token) {
  if (token == "a") return ProfileParam::a;
  if (token == "b") return ProfileParam::b;
  if (token == "sigma2") return ProfileParam::sigma2;
  throw std::invalid_argument("unknown profile parameter '" + std::string(token) + "' (a, b or sigma2)");
}

const char* to_string(ProfileParam p) noexcept {
  switch (p) {
    case ProfileParam::a: return "a";
    case ProfileParam::b: return "b";
    case ProfileParam::sigma2: return "sigma2";
  }
  return "?";
}

ProfileGrid ProfileGrid::parse(std::string_view spec) {
  const auto c1 = spec.find(':');
  const auto c2 = c1 == std::string_view::npos ? c1 : spec.find(':', c1 + 1);
  if (c2 == std::string_view::npos) throw std::invalid_argument("grid must be LO:HI:N");
  ProfileGrid g;
  try {
    std::size_t used = 0;
    const std::string lo(spec.substr(0, c1));
    const std::string hi(spec.substr(c1 + 1, c2 - c1 - 1));
    const std::string count(spec.substr(c2 + 1));
    g.lo = std::stod(lo, &used);
    if (used != lo.size()) throw std::invalid_argument(lo);
    g.hi = std::stod(hi, &used);
    if (used != hi.size()) throw std::invalid_argument(hi);
    g.count = std::stoi(count, &used);
    if (used != count.size()) throw std::invalid_argument(count);
  } catch (const std::logic_error&) {
    throw std::invalid_argument("grid must be LO:HI:N with numeric fields");
  }
  return g;
}

void ProfileGrid::validate(ProfileParam param) const {
  if (count < 1) throw std::invalid_argument("grid needs at least one point");
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw std::invalid_argument("grid bounds must be finite");
  if (count > 1 && !(lo < hi)) throw std::invalid_argument("grid needs LO < HI for more than one point");
  if (param == ProfileParam::sigma2 ? !(lo >= 0.0) : !(lo > 0.0))
    throw std::invalid_argument(std::string("grid values for ") + to_string(param) +
                                (param == ProfileParam::sigma2 ? " must be >= 0" : " must be > 0"));
}

std::vector<double> ProfileGrid::values() const {
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    v[static_cast<std::size_t>(i)] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
  return v;
}

std::vector<ProfilePoint> profile_curve(const LifeTable& table, const ModelParams& reference,
                                        ProfileParam param, const ProfileGrid& grid,
                                        ProfileMode mode, const PenaltyConfig& cfg,
                                        const SearchBox& box, const NelderMeadConfig& simplex) {
  reference.validate();
  cfg.validate();
  box.validate();
  grid.validate(param);

  std::vector<ProfilePoint> out;
  if (mode == ProfileMode::slice) {
    for (const double v : grid.values()) {
      const auto p = with_value(reference, param, v);
      const double ll = log_likelihood(p, table);
      out.push_back({v, ll, penalized_at(ll, p.sigma2, cfg.lambda)});
    }
    return out;
  }

  // The free sigma2 never goes below the floor, so the penalty stays finite.
  const Bounds bounds = free_bounds(param, box, cfg.sigma2_floor);
  auto start = reference;
  start.sigma2 = std::max(start.sigma2, cfg.sigma2_floor);
  ModelParams warm_ll = start;
  ModelParams warm_pen = start;

  for (const double v : grid.values()) {
    const FreeCoords coords{param, v};
    auto maximize = [&](const ObjectiveFn& f, ModelParams& warm) {
      auto best = nelder_mead(f, coords.from_params(warm), bounds, simplex);
      const auto alt = nelder_mead(f, coords.from_params(start), bounds, simplex);
      if (alt.value > best.value) best = alt;
      warm = coords.to_params(best.x);
      return best.value;
    };

    const ObjectiveFn ll = [&](std::span<const double> x) {
      return log_likelihood(coords.to_params(x), table);
    };
    const double ll_max = maximize(ll, warm_ll);

    double pen_max;
    if (param == ProfileParam::sigma2) {
      pen_max = penalized_at(ll_max, v, cfg.lambda);
    } else {
      const ObjectiveFn pen = [&](std::span<const double> x) {
        const auto p = coords.to_params(x);
        return log_likelihood(p, table) - penalty(p.sigma2, cfg.lambda);
      };
      pen_max = maximize(pen, warm_pen);
    }
    out.push_back({v, ll_max, pen_max});
  }
  return out;
}

}  // namespace decel
