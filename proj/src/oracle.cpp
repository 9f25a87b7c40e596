#include "ssd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace ssd {

namespace {

void check_guard(const char* func, int vocab_size, int horizon) {
  if (horizon < 1) {
    throw std::invalid_argument(std::string(func) +
                                ": horizon must be >= 1, got " +
                                std::to_string(horizon));
  }
  std::int64_t states = 1;
  for (int i = 0; i < horizon; ++i) {
    states *= vocab_size;
    if (states > kEnumerationGuard) {
      throw std::length_error(std::string(func) + ": V^H = " +
                              std::to_string(vocab_size) + "^" +
                              std::to_string(horizon) +
                              " exceeds the enumeration guard of " +
                              std::to_string(kEnumerationGuard));
    }
  }
}

double acceptance_prob_at(double q_at_x, double p_at_x, double beta) {
  double c = std::min(1.0, q_at_x / p_at_x) + beta;
  return std::min(1.0, c);
}

// In-cycle expansion for exact_ssd_distribution. `ctx` holds prefix plus all
// tokens emitted so far; tokens past `prefix_len` are the emitted sequence.
// Each event (accept, resample, bonus) appends exactly one token, so once the
// emitted length reaches `horizon` all remaining in-cycle randomness sums to
// one and the branch can stop (horizon marginalization).
struct SsdEnumerator {
  const SequenceModel& target;
  const SequenceModel& draft;
  std::size_t prefix_len;
  int draft_len;
  double beta;
  int horizon;
  std::map<TokenSeq, double>& next_frontier;
  std::map<TokenSeq, double>& done;

  TokenSeq emitted(const TokenSeq& ctx) const {
    return TokenSeq(ctx.begin() + static_cast<std::ptrdiff_t>(prefix_len),
                    ctx.end());
  }

  void settle(TokenSeq& ctx, double weight) {
    if (ctx.size() - prefix_len >= static_cast<std::size_t>(horizon)) {
      done[emitted(ctx)] += weight;
    } else {
      next_frontier[emitted(ctx)] += weight;
    }
  }

  void expand(TokenSeq& ctx, double weight, int depth) {
    if (ctx.size() - prefix_len >= static_cast<std::size_t>(horizon)) {
      done[emitted(ctx)] += weight;
      return;
    }
    if (depth == draft_len) {
      Distribution bonus = target.next_distribution(ctx);
      for (int z = 0; z < bonus.vocab_size(); ++z) {
        if (bonus[z] <= 0.0) continue;
        ctx.push_back(z);
        settle(ctx, weight * bonus[z]);
        ctx.pop_back();
      }
      return;
    }
    Distribution p = draft.next_distribution(ctx);
    Distribution q = target.next_distribution(ctx);
    bool have_residual = false;
    Distribution residual = p;
    for (int x = 0; x < p.vocab_size(); ++x) {
      if (p[x] <= 0.0) continue;
      double a = acceptance_prob_at(q[x], p[x], beta);
      if (a > 0.0) {
        ctx.push_back(x);
        expand(ctx, weight * p[x] * a, depth + 1);
        ctx.pop_back();
      }
      double reject = 1.0 - a;
      if (reject > 0.0) {
        if (!have_residual) {
          residual = residual_distribution(q, p);
          have_residual = true;
        }
        for (int y = 0; y < residual.vocab_size(); ++y) {
          if (residual[y] <= 0.0) continue;
          ctx.push_back(y);
          settle(ctx, weight * p[x] * reject * residual[y]);
          ctx.pop_back();
        }
      }
    }
  }
};

}  // namespace

void SequenceDistribution::validate() const {
  double total = 0.0;
  for (const auto& [seq, prob] : probs) {
    if (seq.size() != static_cast<std::size_t>(horizon)) {
      throw std::runtime_error(
          "SequenceDistribution: sequence length " +
          std::to_string(seq.size()) + " does not match horizon " +
          std::to_string(horizon));
    }
    if (!(prob >= 0.0)) {
      throw std::runtime_error(
          "SequenceDistribution: negative or NaN probability");
    }
    total += prob;
  }
  if (std::abs(total - 1.0) > kProbSumTolerance) {
    throw std::runtime_error("SequenceDistribution: probabilities sum to " +
                             std::to_string(total));
  }
}

SequenceDistribution exact_ar_distribution(const SequenceModel& model,
                                           std::span<const TokenId> prefix,
                                           int horizon) {
  check_guard("exact_ar_distribution", model.vocab_size(), horizon);
  SequenceDistribution out;
  out.horizon = horizon;

  TokenSeq ctx(prefix.begin(), prefix.end());
  auto recurse = [&](auto&& self, double weight, int depth) -> void {
    if (depth == horizon) {
      out.probs[TokenSeq(ctx.begin() + static_cast<std::ptrdiff_t>(prefix.size()),
                         ctx.end())] = weight;
      return;
    }
    Distribution dist = model.next_distribution(ctx);
    for (int t = 0; t < dist.vocab_size(); ++t) {
      if (dist[t] <= 0.0) continue;
      ctx.push_back(t);
      self(self, weight * dist[t], depth + 1);
      ctx.pop_back();
    }
  };
  recurse(recurse, 1.0, 0);
  out.validate();
  return out;
}

SequenceDistribution exact_ssd_distribution(const SequenceModel& target,
                                            const SequenceModel& draft,
                                            std::span<const TokenId> prefix,
                                            const SsdConfig& config,
                                            int horizon) {
  config.validate();
  if (target.vocab_size() != draft.vocab_size()) {
    throw std::invalid_argument(
        "exact_ssd_distribution: target and draft vocab sizes differ");
  }
  check_guard("exact_ssd_distribution", target.vocab_size(), horizon);
  if (horizon > config.target_len) {
    throw std::invalid_argument(
        "exact_ssd_distribution: horizon exceeds config.target_len");
  }

  SequenceDistribution out;
  out.horizon = horizon;
  std::map<TokenSeq, double> frontier;
  frontier[TokenSeq{}] = 1.0;
  while (!frontier.empty()) {
    std::map<TokenSeq, double> next;
    for (const auto& [seq, weight] : frontier) {
      TokenSeq ctx(prefix.begin(), prefix.end());
      ctx.insert(ctx.end(), seq.begin(), seq.end());
      SsdEnumerator en{target,      draft, prefix.size(), config.draft_len,
                       config.beta, horizon, next,        out.probs};
      en.expand(ctx, weight, 0);
    }
    frontier = std::move(next);
  }
  out.validate();
  return out;
}

Distribution step_emission_distribution(const Distribution& q,
                                        const Distribution& p, double beta) {
  if (q.vocab_size() != p.vocab_size()) {
    throw std::invalid_argument(
        "step_emission_distribution: q and p have different vocab sizes");
  }
  std::vector<double> out(static_cast<std::size_t>(q.vocab_size()), 0.0);
  double accept_mass = 0.0;
  for (int x = 0; x < p.vocab_size(); ++x) {
    if (p[x] <= 0.0) continue;
    double term = p[x] * acceptance_prob_at(q[x], p[x], beta);
    out[static_cast<std::size_t>(x)] += term;
    accept_mass += term;
  }
  double reject_mass = std::max(0.0, 1.0 - accept_mass);
  if (reject_mass > 0.0) {
    Distribution residual = residual_distribution(q, p);
    for (int x = 0; x < residual.vocab_size(); ++x) {
      out[static_cast<std::size_t>(x)] += reject_mass * residual[x];
    }
  }
  return Distribution(std::move(out));
}

double analytic_acceptance_prob(const Distribution& q, const Distribution& p,
                                double beta) {
  if (q.vocab_size() != p.vocab_size()) {
    throw std::invalid_argument(
        "analytic_acceptance_prob: q and p have different vocab sizes");
  }
  double total = 0.0;
  for (int x = 0; x < p.vocab_size(); ++x) {
    if (p[x] <= 0.0) continue;
    total += p[x] * acceptance_prob_at(q[x], p[x], beta);
  }
  return total;
}

double tv_distance(const Distribution& a, const Distribution& b) {
  if (a.vocab_size() != b.vocab_size()) {
    throw std::invalid_argument("tv_distance: vocab sizes differ");
  }
  double total = 0.0;
  for (int t = 0; t < a.vocab_size(); ++t) {
    total += std::abs(a[t] - b[t]);
  }
  return 0.5 * total;
}

double tv_distance(const SequenceDistribution& a,
                   const SequenceDistribution& b) {
  if (a.horizon != b.horizon) {
    throw std::invalid_argument("tv_distance: horizons differ");
  }
  double total = 0.0;
  auto ia = a.probs.begin();
  auto ib = b.probs.begin();
  while (ia != a.probs.end() || ib != b.probs.end()) {
    if (ib == b.probs.end() || (ia != a.probs.end() && ia->first < ib->first)) {
      total += std::abs(ia->second);
      ++ia;
    } else if (ia == a.probs.end() || ib->first < ia->first) {
      total += std::abs(ib->second);
      ++ib;
    } else {
      total += std::abs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return 0.5 * total;
}

}  // namespace ssd
