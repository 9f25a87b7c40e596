#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssd/model.hpp"

namespace ssd::verify {

/**
 * Self-check suites behind the `verify` CLI command: properties of the
 * decoder proved against the enumeration oracle. Quick keeps everything
 * small enough for a few seconds; full raises the randomized-pair counts to
 * the contractual levels and adds a 100k-sample Monte-Carlo chi-square test.
 * Deterministic given (level, seed).
 */
enum class Level { kQuick, kFull };

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;  // measured margins, pair counts, budgets
};

struct Report {
  Level level = Level::kQuick;
  std::vector<PropertyResult> properties;

  bool all_passed() const;
  std::string format() const;  // one line per property plus a summary line
};

Report run(Level level, std::uint64_t seed);

// Shared helpers, also used by tests. random_distribution draws from the
// flat Dirichlet; random_model fills every context (padded ones included) so
// lookups never hit the uniform fallback.
Distribution random_distribution(int vocab_size, RandomStream& rng);
TabularMarkovModel random_model(int vocab_size, int order, RandomStream& rng);

// Exact integral over r in [0,1) of sum_x p(x)[r < min(1, q(x)/p(x)) + beta]:
// the integrand is a step function, so a midpoint rule on the grid refined at
// its jump points integrates it without discretization error.
double numeric_acceptance_integral(const Distribution& q, const Distribution& p,
                                   double beta);

// Upper 0.999 chi-square quantile via the Wilson-Hilferty cube approximation.
double chi_square_critical_999(int degrees_of_freedom);

}  // namespace ssd::verify
