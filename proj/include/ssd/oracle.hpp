#pragma once

#include <cstdint>
#include <map>
#include <span>

#include "ssd/decode.hpp"
#include "ssd/model.hpp"

namespace ssd {

/**
 * Exact brute-force ground truth for the decoder: output laws by
 * enumeration, single-step emission laws in closed form, and total-variation
 * distance. Everything here is exact up to floating point; the uniform
 * acceptance draws are integrated out analytically rather than discretized.
 * Domain sizes are guarded because the enumeration is exponential by design;
 * the oracle exists only for desk-scale verification.
 */
struct SequenceDistribution {
  int horizon = 0;
  std::map<TokenSeq, double> probs;  // every key has length == horizon

  void validate() const;  // throws std::runtime_error on violation
};

// Upper bound on V^H for the enumeration routines.
inline constexpr std::int64_t kEnumerationGuard = 1'000'000;

// Law of the next `horizon` tokens under plain autoregressive decoding:
// the product of conditionals along each continuation. Enumerates all V^H
// sequences; throws std::length_error when V^H exceeds the guard.
SequenceDistribution exact_ar_distribution(const SequenceModel& model,
                                           std::span<const TokenId> prefix,
                                           int horizon);

// Law of the first `horizon` tokens emitted by ssd_decode under `config`,
// marginalized over everything later (including in-cycle overshoot). Walks
// cycles breadth-first over emitted-sequence states; within a cycle it
// enumerates draft tuples lazily and branches on accept (probability
// min(1, min(1, q/p) + beta)), residual resample, and bonus. Requires
// horizon <= config.target_len so truncation cannot bite first.
SequenceDistribution exact_ssd_distribution(const SequenceModel& target,
                                            const SequenceModel& draft,
                                            std::span<const TokenId> prefix,
                                            const SsdConfig& config,
                                            int horizon);

// Exact one-position emission law of the accept-or-resample step:
//   sum_x p(x) a(x) delta_x + (1 - sum_x p(x) a(x)) residual(q, p)
// with a(x) = min(1, min(1, q(x)/p(x)) + beta). Equals q at beta = 0 and p
// at beta = 1.
Distribution step_emission_distribution(const Distribution& q,
                                        const Distribution& p, double beta);

// Probability that a token drafted from p passes the acceptance test:
// sum_x p(x) min(1, min(1, q(x)/p(x)) + beta). At beta = 0 this is
// 1 - tv_distance(p, q).
double analytic_acceptance_prob(const Distribution& q, const Distribution& p,
                                double beta);

// (1/2) sum |a - b|. The sequence overload requires equal horizons and
// treats sequences absent from one map as probability zero.
double tv_distance(const Distribution& a, const Distribution& b);
double tv_distance(const SequenceDistribution& a, const SequenceDistribution& b);

}  // namespace ssd
