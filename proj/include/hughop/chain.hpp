#pragma once

#include "hughop/target.hpp"

namespace hughop {

/// Current position with cached ℓ and ∇ℓ.
struct ChainState {
  Vector x;
  double log_density = 0.0;
  Vector gradient;

  static ChainState at(const Target& target, Vector x) {
    ChainState s;
    target.value_and_gradient(x, s.log_density, s.gradient);
    s.x = std::move(x);
    return s;
  }
};

/// What a single accept/reject step did.
struct StepOutcome {
  double log_alpha = 0.0;  ///< uncapped log acceptance ratio (-inf on failure)
  bool accepted = false;
  bool failed = false;     ///< numerical failure turned into a rejection
  std::string failure;

  /// min(1, e^{log α})
  double acceptance_probability() const {
    return log_alpha >= 0.0 ? 1.0 : (std::isfinite(log_alpha) ? std::exp(log_alpha) : 0.0);
  }
};

}  // namespace hughop
