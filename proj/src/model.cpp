#include "ssd/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ssd {

namespace {

void check_tokens(std::span<const TokenId> tokens, int vocab_size, const char* who) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] < 0 || tokens[i] >= vocab_size) {
      throw std::invalid_argument(std::string(who) + ": token " +
                                  std::to_string(tokens[i]) + " at position " +
                                  std::to_string(i) + " outside vocabulary of size " +
                                  std::to_string(vocab_size));
    }
  }
}

}  // namespace

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const auto& seq : sequences) n += seq.size();
  return n;
}

void Corpus::validate() const {
  if (vocab_size <= 0) {
    throw std::invalid_argument("Corpus: vocab_size must be positive");
  }
  for (const auto& seq : sequences) {
    check_tokens(seq, vocab_size, "Corpus");
  }
}

TabularMarkovModel::TabularMarkovModel(int vocab_size, int order, double smoothing,
                                       Table table)
    : vocab_size_(vocab_size), order_(order), smoothing_(smoothing),
      table_(std::move(table)) {
  if (vocab_size_ <= 0) {
    throw std::invalid_argument("TabularMarkovModel: vocab_size must be positive");
  }
  if (order_ < 0) {
    throw std::invalid_argument("TabularMarkovModel: order must be non-negative");
  }
  if (!(smoothing_ >= 0.0)) {
    throw std::invalid_argument("TabularMarkovModel: smoothing must be non-negative");
  }
  for (const auto& [ctx, dist] : table_) {
    if (static_cast<int>(ctx.size()) != order_) {
      throw std::invalid_argument("TabularMarkovModel: context length != order");
    }
    for (TokenId t : ctx) {
      if ((t < 0 && t != kBeginToken) || t >= vocab_size_) {
        throw std::invalid_argument("TabularMarkovModel: invalid context token " +
                                    std::to_string(t));
      }
    }
    if (dist.vocab_size() != vocab_size_) {
      throw std::invalid_argument("TabularMarkovModel: distribution size != vocab_size");
    }
  }
}

TabularMarkovModel::TabularMarkovModel(const TabularMarkovModel& other)
    : vocab_size_(other.vocab_size_), order_(other.order_),
      smoothing_(other.smoothing_), table_(other.table_),
      fallbacks_(other.fallback_count()) {}

TabularMarkovModel& TabularMarkovModel::operator=(const TabularMarkovModel& other) {
  if (this != &other) {
    vocab_size_ = other.vocab_size_;
    order_ = other.order_;
    smoothing_ = other.smoothing_;
    table_ = other.table_;
    fallbacks_.store(other.fallback_count(), std::memory_order_relaxed);
  }
  return *this;
}

TabularMarkovModel::TabularMarkovModel(TabularMarkovModel&& other) noexcept
    : vocab_size_(other.vocab_size_), order_(other.order_),
      smoothing_(other.smoothing_), table_(std::move(other.table_)),
      fallbacks_(other.fallback_count()) {}

TabularMarkovModel& TabularMarkovModel::operator=(TabularMarkovModel&& other) noexcept {
  if (this != &other) {
    vocab_size_ = other.vocab_size_;
    order_ = other.order_;
    smoothing_ = other.smoothing_;
    table_ = std::move(other.table_);
    fallbacks_.store(other.fallback_count(), std::memory_order_relaxed);
  }
  return *this;
}

TokenSeq TabularMarkovModel::context_for(std::span<const TokenId> prefix) const {
  check_tokens(prefix, vocab_size_, "TabularMarkovModel");
  TokenSeq ctx;
  ctx.reserve(static_cast<std::size_t>(order_));
  const std::size_t k = static_cast<std::size_t>(order_);
  const std::size_t pad = prefix.size() >= k ? 0 : k - prefix.size();
  for (std::size_t i = 0; i < pad; ++i) ctx.push_back(kBeginToken);
  for (std::size_t i = prefix.size() - (k - pad); i < prefix.size(); ++i) {
    ctx.push_back(prefix[i]);
  }
  return ctx;
}

Distribution TabularMarkovModel::next_distribution(std::span<const TokenId> prefix) const {
  const TokenSeq ctx = context_for(prefix);
  const auto it = table_.find(ctx);
  if (it != table_.end()) {
    return it->second;
  }
  // Unseen context. With smoothing > 0 the additive formula on zero counts
  // is exactly uniform; with smoothing == 0 the model has no estimate and we
  // fall back to uniform rather than failing mid-decode.
  if (smoothing_ == 0.0) {
    fallbacks_.fetch_add(1, std::memory_order_relaxed);
  }
  return Distribution::uniform(vocab_size_);
}

TokenId pick_by_inverse_cdf(const Distribution& dist, double u) {
  const int v = dist.vocab_size();
  double cum = 0.0;
  for (int t = 0; t + 1 < v; ++t) {
    cum += dist[t];
    if (u < cum) return t;
  }
  // Rounding may leave u at or beyond the accumulated total; settle on the
  // highest-index token with positive probability so a zero-probability
  // token can never be emitted.
  for (int t = v - 1; t >= 0; --t) {
    if (dist[t] > 0.0) return t;
  }
  return v - 1;  // unreachable for a valid Distribution
}

TokenId sample_token(const Distribution& dist, RandomStream& rng) {
  return pick_by_inverse_cdf(dist, rng.next_uniform());
}

TokenSeq ar_decode(const SequenceModel& model, std::span<const TokenId> prefix,
                   int target_len, RandomStream& rng) {
  if (target_len < 1) {
    throw std::invalid_argument("ar_decode: target_len must be >= 1");
  }
  TokenSeq working(prefix.begin(), prefix.end());
  TokenSeq out;
  out.reserve(static_cast<std::size_t>(target_len));
  for (int i = 0; i < target_len; ++i) {
    const Distribution dist = model.next_distribution(working);
    const TokenId t = sample_token(dist, rng);
    working.push_back(t);
    out.push_back(t);
  }
  return out;
}

TabularMarkovModel fit_tabular(const Corpus& corpus, int order, double smoothing) {
  corpus.validate();
  if (order < 0) {
    throw std::invalid_argument("fit_tabular: order must be non-negative");
  }
  if (!(smoothing >= 0.0)) {
    throw std::invalid_argument("fit_tabular: smoothing must be non-negative");
  }
  if (corpus.sequences.empty() || corpus.token_count() == 0) {
    throw std::invalid_argument("fit_tabular: empty corpus");
  }
  const int v = corpus.vocab_size;
  const std::size_t k = static_cast<std::size_t>(order);

  std::map<TokenSeq, std::vector<std::int64_t>> counts;
  for (const auto& seq : corpus.sequences) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      TokenSeq ctx;
      ctx.reserve(k);
      const std::size_t pad = t >= k ? 0 : k - t;
      for (std::size_t i = 0; i < pad; ++i) ctx.push_back(kBeginToken);
      for (std::size_t i = t - (k - pad); i < t; ++i) ctx.push_back(seq[i]);
      auto [it, inserted] = counts.try_emplace(std::move(ctx),
                                               std::vector<std::int64_t>(v, 0));
      ++it->second[static_cast<std::size_t>(seq[t])];
    }
  }

  TabularMarkovModel::Table table;
  for (auto& [ctx, c] : counts) {
    std::int64_t total = 0;
    for (std::int64_t n : c) total += n;
    std::vector<double> probs(static_cast<std::size_t>(v));
    const double denom = static_cast<double>(total) + smoothing * v;
    for (int t = 0; t < v; ++t) {
      probs[static_cast<std::size_t>(t)] =
          (static_cast<double>(c[static_cast<std::size_t>(t)]) + smoothing) / denom;
    }
    table.emplace(ctx, Distribution(std::move(probs)));
  }
  return TabularMarkovModel(v, order, smoothing, std::move(table));
}

TabularMarkovModel derive_draft(const TabularMarkovModel& target, int new_order,
                                double extra_smoothing, const Corpus& reference) {
  if (new_order < 0) {
    throw std::invalid_argument("derive_draft: new_order must be non-negative");
  }
  if (new_order >= target.order()) {
    throw std::invalid_argument("derive_draft: new_order must be < target order");
  }
  if (!(extra_smoothing >= 0.0)) {
    throw std::invalid_argument("derive_draft: extra_smoothing must be non-negative");
  }
  reference.validate();
  if (reference.vocab_size != target.vocab_size()) {
    throw std::invalid_argument("derive_draft: reference vocabulary size " +
                                std::to_string(reference.vocab_size) +
                                " != target vocabulary size " +
                                std::to_string(target.vocab_size()));
  }
  const int v = target.vocab_size();
  const std::size_t k = static_cast<std::size_t>(target.order());
  const std::size_t kd = static_cast<std::size_t>(new_order);

  // Expected next-token counts per short context: each full-order window
  // contributes the target's conditional there, weighted by occurrence.
  std::map<TokenSeq, std::vector<double>> pseudo;
  for (const auto& seq : reference.sequences) {
    if (seq.size() < k) continue;
    for (std::size_t t = k; t < seq.size(); ++t) {
      const std::span<const TokenId> full(seq.data() + (t - k), k);
      const Distribution cond = target.next_distribution(full);
      TokenSeq short_ctx(seq.begin() + static_cast<std::ptrdiff_t>(t - kd),
                         seq.begin() + static_cast<std::ptrdiff_t>(t));
      auto [it, inserted] = pseudo.try_emplace(std::move(short_ctx),
                                               std::vector<double>(v, 0.0));
      for (int x = 0; x < v; ++x) {
        it->second[static_cast<std::size_t>(x)] += cond[x];
      }
    }
  }

  TabularMarkovModel::Table table;
  for (auto& [ctx, c] : pseudo) {
    double total = 0.0;
    for (double n : c) total += n;
    std::vector<double> probs(static_cast<std::size_t>(v));
    const double denom = total + extra_smoothing * v;
    for (int x = 0; x < v; ++x) {
      probs[static_cast<std::size_t>(x)] =
          (c[static_cast<std::size_t>(x)] + extra_smoothing) / denom;
    }
    table.emplace(ctx, Distribution(std::move(probs)));
  }
  return TabularMarkovModel(v, new_order, extra_smoothing, std::move(table));
}

double cross_entropy(const SequenceModel& model, const Corpus& corpus) {
  corpus.validate();
  if (corpus.vocab_size != model.vocab_size()) {
    throw std::invalid_argument("cross_entropy: corpus vocabulary size " +
                                std::to_string(corpus.vocab_size) +
                                " != model vocabulary size " +
                                std::to_string(model.vocab_size()));
  }
  const std::size_t positions = corpus.token_count();
  if (positions == 0) {
    throw std::invalid_argument("cross_entropy: empty corpus");
  }
  double total = 0.0;
  for (std::size_t s = 0; s < corpus.sequences.size(); ++s) {
    const auto& seq = corpus.sequences[s];
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const std::span<const TokenId> ctx(seq.data(), t);
      const double p = model.next_distribution(ctx).at(seq[t]);
      if (p <= 0.0) {
        throw std::runtime_error("cross_entropy: model assigns zero probability to token " +
                                 std::to_string(seq[t]) + " at sequence " +
                                 std::to_string(s) + " position " + std::to_string(t));
      }
      total -= std::log(p);
    }
  }
  return total / static_cast<double>(positions);
}

}  // namespace ssd
