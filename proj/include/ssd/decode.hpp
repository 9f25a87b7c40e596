#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ssd/model.hpp"

namespace ssd {

/**
 * Speculative decoding with a tolerance-relaxed acceptance rule.
 *
 * Each cycle drafts draft_len candidate tokens from the cheap model, has the
 * expensive model score all of them in one verification pass, then walks the
 * candidates in order: token x with draft probability p and target
 * probability q survives when r < min(1, q / p) + beta for a fresh uniform
 * r. The first rejection replaces x by a draw from the residual
 * normalize(max(0, q - p)) and ends the cycle; if every candidate survives,
 * one bonus token is drawn from the target's next conditional. At beta = 0
 * the emitted sequence is distributed exactly as target-only decoding; at
 * beta = 1 every candidate is accepted and the output follows the draft.
 *
 * RNG stream contract, per cycle: draft_len uniforms for drafting, then one
 * uniform per acceptance test in position order (drawn lazily, none after a
 * rejection), then exactly one uniform for the resample or the bonus draw.
 */
struct SsdConfig {
  int draft_len = 3;        // candidates drafted per cycle
  int target_len = 16;      // tokens to emit in total
  double beta = 0.0;        // acceptance tolerance, in [0, 1]
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

struct DraftedToken {
  TokenId token = 0;
  double p_prob = 0.0;  // draft probability of token, always > 0
  double q_prob = 0.0;  // target probability of token

  bool operator==(const DraftedToken&) const = default;
};

/**
 * Record of one cycle. Structural invariants: accept_flags has at most one
 * false entry and it is always the last; resampled is set iff a flag is
 * false; bonus is set iff all draft_len flags are true; uniform_draws holds
 * the acceptance draws actually made (one per flag).
 */
struct CycleTrace {
  std::vector<DraftedToken> drafted;                    // size draft_len
  std::vector<bool> accept_flags;
  std::vector<double> uniform_draws;
  std::optional<std::pair<int, TokenId>> resampled;     // (position, token)
  std::optional<TokenId> bonus;
  bool residual_fallback = false;

  int emitted_count() const;
  TokenSeq emitted_tokens() const;  // accepted prefix, then resample or bonus

  bool operator==(const CycleTrace&) const = default;
};

struct DecodeCounts {
  std::int64_t draft_tokens = 0;    // drafted, accepted or not
  std::int64_t target_calls = 0;    // one verification pass per cycle
  std::int64_t accepted_tokens = 0;
  std::int64_t resampled_tokens = 0;
  std::int64_t bonus_tokens = 0;
  std::int64_t residual_fallbacks = 0;

  std::int64_t emitted_total() const {
    return accepted_tokens + resampled_tokens + bonus_tokens;
  }

  bool operator==(const DecodeCounts&) const = default;
};

struct DecodeResult {
  TokenSeq tokens;  // exactly target_len, first-L_t truncation of the emissions
  std::vector<CycleTrace> cycles;
  DecodeCounts counts;

  bool operator==(const DecodeResult&) const = default;
};

struct DraftProposal {
  TokenSeq tokens;
  std::vector<Distribution> distributions;  // one per drafted position
};

// Drafts draft_len tokens autoregressively from the draft model, returning
// both the tokens and the distributions they were drawn from. Consumes
// exactly draft_len uniforms.
DraftProposal draft_generate(const SequenceModel& draft,
                             std::span<const TokenId> prefix, int draft_len,
                             RandomStream& rng);

// Target conditionals at every drafted position plus one past the end:
// entry i conditions on prefix + draft_tokens[0..i). Semantically a single
// parallel verification event; this simulator computes it sequentially and
// the cost model bills it as one target call.
std::vector<Distribution> target_verify(const SequenceModel& target,
                                        std::span<const TokenId> prefix,
                                        std::span<const TokenId> draft_tokens);

// The acceptance rule: true iff r < min(1, q_at_x / p_at_x) + beta, strict.
// p_at_x must be positive (the token was sampled from p).
bool accept_token(double q_at_x, double p_at_x, double beta, double r);

// normalize(max(0, q - p)). When the positive part carries less than 1e-12
// of mass the rule is vacuous (q and p coincide up to rounding) and q itself
// is returned; used_fallback, if given, reports that.
Distribution residual_distribution(const Distribution& q, const Distribution& p,
                                   bool* used_fallback = nullptr);

inline constexpr double kResidualMassFloor = 1e-12;

// One draft/verify/accept cycle against a fixed prefix. Emits between 1 and
// draft_len + 1 tokens (see CycleTrace invariants).
CycleTrace ssd_cycle(const SequenceModel& target, const SequenceModel& draft,
                     std::span<const TokenId> prefix, const SsdConfig& config,
                     RandomStream& rng);

// Full decode: repeats cycles, each conditioning on everything emitted so
// far, until target_len tokens exist; output is truncated to exactly
// target_len. The overload without an explicit stream seeds one from
// config.seed, so equal inputs give bit-identical results.
DecodeResult ssd_decode(const SequenceModel& target, const SequenceModel& draft,
                        std::span<const TokenId> prefix, const SsdConfig& config,
                        RandomStream& rng);
DecodeResult ssd_decode(const SequenceModel& target, const SequenceModel& draft,
                        std::span<const TokenId> prefix, const SsdConfig& config);

// Recomputes the per-position draft and target conditionals a recorded cycle
// saw, given the prefix the cycle started from.
struct CycleDistributions {
  std::vector<Distribution> draft_dists;   // size draft_len
  std::vector<Distribution> target_dists;  // size draft_len + 1
};
CycleDistributions replay_cycle(const SequenceModel& target,
                                const SequenceModel& draft,
                                std::span<const TokenId> prefix_at_cycle_start,
                                const CycleTrace& trace);

}  // namespace ssd
