#pragma once

#include <vector>

#include "ssd/types.hpp"

namespace ssd {

// Tolerance on |sum(probs) - 1| accepted at construction.
inline constexpr double kProbSumTolerance = 1e-9;

/**
 * Dense probability vector over a token vocabulary. Immutable once built;
 * construction rejects negative entries and totals further than 1e-9 from
 * one, so any Distribution in flight is valid by construction.
 */
class Distribution {
 public:
  explicit Distribution(std::vector<double> probs);

  static Distribution uniform(int vocab_size);
  static Distribution point_mass(int vocab_size, TokenId token);

  int vocab_size() const { return static_cast<int>(probs_.size()); }
  double at(TokenId token) const;  // bounds-checked
  double operator[](int i) const { return probs_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& probs() const { return probs_; }

  bool operator==(const Distribution&) const = default;

 private:
  std::vector<double> probs_;
};

}  // namespace ssd
