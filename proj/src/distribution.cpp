#include "ssd/distribution.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ssd {

Distribution::Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) {
    throw std::invalid_argument("Distribution: empty probability vector");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    const double p = probs_[i];
    if (!(p >= 0.0)) {  // also catches NaN
      throw std::invalid_argument("Distribution: negative or NaN entry at index " +
                                  std::to_string(i));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbSumTolerance) {
    throw std::invalid_argument("Distribution: entries sum to " + std::to_string(sum) +
                                ", expected 1 within 1e-9");
  }
}

Distribution Distribution::uniform(int vocab_size) {
  if (vocab_size <= 0) {
    throw std::invalid_argument("Distribution::uniform: vocab_size must be positive");
  }
  return Distribution(std::vector<double>(static_cast<std::size_t>(vocab_size),
                                          1.0 / vocab_size));
}

Distribution Distribution::point_mass(int vocab_size, TokenId token) {
  if (vocab_size <= 0 || token < 0 || token >= vocab_size) {
    throw std::invalid_argument("Distribution::point_mass: token out of range");
  }
  std::vector<double> p(static_cast<std::size_t>(vocab_size), 0.0);
  p[static_cast<std::size_t>(token)] = 1.0;
  return Distribution(std::move(p));
}

double Distribution::at(TokenId token) const {
  if (token < 0 || token >= vocab_size()) {
    throw std::out_of_range("Distribution::at: token " + std::to_string(token) +
                            " outside vocabulary of size " + std::to_string(vocab_size()));
  }
  return probs_[static_cast<std::size_t>(token)];
}

}  // namespace ssd
