#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "ssd/distribution.hpp"
#include "ssd/random.hpp"
#include "ssd/types.hpp"

namespace ssd {

/**
 * Abstract autoregressive predictor: the conditional law of the next token
 * given everything generated so far.
 *
 * Implementations must be pure (identical prefixes yield bit-identical
 * distributions) and immutable after construction, so a model may be
 * shared across concurrent decoders.
 */
class SequenceModel {
 public:
  virtual ~SequenceModel() = default;

  virtual int vocab_size() const = 0;

  // Conditional distribution of the next token. Throws std::invalid_argument
  // if any prefix token is outside [0, vocab_size).
  virtual Distribution next_distribution(std::span<const TokenId> prefix) const = 0;
};

/**
 * Training data: token sequences over a shared vocabulary.
 */
struct Corpus {
  int vocab_size = 0;
  std::vector<TokenSeq> sequences;

  std::size_t token_count() const;
  void validate() const;  // vocab > 0, every token in [0, vocab_size)
};

/**
 * Order-k conditional table with additive smoothing.
 *
 * Conditioning contexts are the last k tokens of the prefix, front-padded
 * with kBeginToken when the prefix is shorter than k. A lookup on a context
 * absent from the table returns the uniform distribution; when smoothing is
 * zero that is a fallback (the table genuinely has no estimate there) and is
 * counted, observable via fallback_count().
 */
class TabularMarkovModel final : public SequenceModel {
 public:
  using Table = std::map<TokenSeq, Distribution>;

  TabularMarkovModel(int vocab_size, int order, double smoothing, Table table);

  TabularMarkovModel(const TabularMarkovModel& other);
  TabularMarkovModel& operator=(const TabularMarkovModel& other);
  TabularMarkovModel(TabularMarkovModel&& other) noexcept;
  TabularMarkovModel& operator=(TabularMarkovModel&& other) noexcept;

  int vocab_size() const override { return vocab_size_; }
  Distribution next_distribution(std::span<const TokenId> prefix) const override;

  int order() const { return order_; }
  double smoothing() const { return smoothing_; }
  const Table& table() const { return table_; }

  // Number of uniform fallbacks served for unseen contexts at smoothing == 0.
  std::uint64_t fallback_count() const { return fallbacks_.load(std::memory_order_relaxed); }

  // The padded length-k table key for a prefix (validates prefix tokens).
  TokenSeq context_for(std::span<const TokenId> prefix) const;

 private:
  int vocab_size_ = 0;
  int order_ = 0;
  double smoothing_ = 0.0;
  Table table_;
  mutable std::atomic<std::uint64_t> fallbacks_{0};
};

// Inverse-CDF draw over token ids in ascending order with half-open cells:
// token t owns [cdf(t-1), cdf(t)). Pure; the sampling entry point below
// feeds it one uniform.
TokenId pick_by_inverse_cdf(const Distribution& dist, double u);

// Draws one token. Consumes exactly one uniform from rng.
TokenId sample_token(const Distribution& dist, RandomStream& rng);

// Plain autoregressive decoding: appends target_len tokens one at a time.
// Consumes exactly target_len uniforms. Returns only the generated tokens.
TokenSeq ar_decode(const SequenceModel& model, std::span<const TokenId> prefix,
                   int target_len, RandomStream& rng);

// Maximum-likelihood fit with additive smoothing: the conditional for every
// context observed in the corpus is (count + smoothing) / (total + smoothing * V).
// Counts cover every position of every sequence, begin-padded contexts included.
// Throws on an empty corpus (no sequences or no tokens).
TabularMarkovModel fit_tabular(const Corpus& corpus, int order, double smoothing);

/**
 * Derives a cheaper low-order draft from a higher-order target.
 *
 * For each length-new_order context, the draft conditional is the
 * count-weighted average of the target's conditionals over all full-order
 * contexts observed in `reference` (sliding windows that fit entirely inside
 * a sequence, so begin padding never contributes), with extra_smoothing
 * added to the resulting expected counts. Requires new_order < target.order().
 */
TabularMarkovModel derive_draft(const TabularMarkovModel& target, int new_order,
                                double extra_smoothing, const Corpus& reference);

// Mean negative log-likelihood in nats per token over every position of the
// corpus. Throws if the model assigns zero probability to an observed token,
// naming the sequence and position.
double cross_entropy(const SequenceModel& model, const Corpus& corpus);

}  // namespace ssd
