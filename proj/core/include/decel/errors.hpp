#pragma once

#include <stdexcept>

namespace decel {

/// A numerical failure: optimizer breakdown, non-definite Hessian, or an
/// objective that cannot be evaluated on the search box. Input problems are
/// reported with std::invalid_argument / std::domain_error instead.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace decel
