#include "ssd/decode.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ssd {

void SsdConfig::validate() const {
  if (draft_len < 1) {
    throw std::invalid_argument("SsdConfig: draft_len must be >= 1, got " +
                                std::to_string(draft_len));
  }
  if (target_len < 1) {
    throw std::invalid_argument("SsdConfig: target_len must be >= 1, got " +
                                std::to_string(target_len));
  }
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw std::invalid_argument("SsdConfig: beta must lie in [0, 1], got " +
                                std::to_string(beta));
  }
}

int CycleTrace::emitted_count() const {
  int accepted = 0;
  for (bool f : accept_flags) {
    if (f) ++accepted;
  }
  return accepted + (resampled.has_value() ? 1 : 0) +
         (bonus.has_value() ? 1 : 0);
}

TokenSeq CycleTrace::emitted_tokens() const {
  TokenSeq out;
  out.reserve(static_cast<std::size_t>(emitted_count()));
  for (std::size_t i = 0; i < accept_flags.size(); ++i) {
    if (!accept_flags[i]) break;
    out.push_back(drafted[i].token);
  }
  if (resampled) out.push_back(resampled->second);
  if (bonus) out.push_back(*bonus);
  return out;
}

DraftProposal draft_generate(const SequenceModel& draft,
                             std::span<const TokenId> prefix, int draft_len,
                             RandomStream& rng) {
  if (draft_len < 1) {
    throw std::invalid_argument("draft_generate: draft_len must be >= 1");
  }
  DraftProposal out;
  out.tokens.reserve(static_cast<std::size_t>(draft_len));
  out.distributions.reserve(static_cast<std::size_t>(draft_len));
  TokenSeq context(prefix.begin(), prefix.end());
  for (int i = 0; i < draft_len; ++i) {
    Distribution dist = draft.next_distribution(context);
    TokenId token = sample_token(dist, rng);
    out.tokens.push_back(token);
    out.distributions.push_back(std::move(dist));
    context.push_back(token);
  }
  return out;
}

std::vector<Distribution> target_verify(const SequenceModel& target,
                                        std::span<const TokenId> prefix,
                                        std::span<const TokenId> draft_tokens) {
  std::vector<Distribution> out;
  out.reserve(draft_tokens.size() + 1);
  TokenSeq context(prefix.begin(), prefix.end());
  for (std::size_t i = 0; i <= draft_tokens.size(); ++i) {
    out.push_back(target.next_distribution(context));
    if (i < draft_tokens.size()) context.push_back(draft_tokens[i]);
  }
  return out;
}

bool accept_token(double q_at_x, double p_at_x, double beta, double r) {
  if (!(p_at_x > 0.0)) {
    throw std::invalid_argument(
        "accept_token: draft probability of the drafted token must be > 0");
  }
  double ratio = std::min(1.0, q_at_x / p_at_x);
  return r < ratio + beta;
}

Distribution residual_distribution(const Distribution& q, const Distribution& p,
                                   bool* used_fallback) {
  if (q.vocab_size() != p.vocab_size()) {
    throw std::invalid_argument(
        "residual_distribution: q and p have different vocab sizes");
  }
  std::vector<double> res(static_cast<std::size_t>(q.vocab_size()));
  double mass = 0.0;
  for (int t = 0; t < q.vocab_size(); ++t) {
    double d = q[t] - p[t];
    res[static_cast<std::size_t>(t)] = d > 0.0 ? d : 0.0;
    if (d > 0.0) mass += d;
  }
  if (mass < kResidualMassFloor) {
    if (used_fallback) *used_fallback = true;
    return q;
  }
  if (used_fallback) *used_fallback = false;
  for (double& v : res) v /= mass;
  return Distribution(std::move(res));
}

CycleTrace ssd_cycle(const SequenceModel& target, const SequenceModel& draft,
                     std::span<const TokenId> prefix, const SsdConfig& config,
                     RandomStream& rng) {
  config.validate();
  if (target.vocab_size() != draft.vocab_size()) {
    throw std::invalid_argument(
        "ssd_cycle: target and draft vocab sizes differ");
  }

  DraftProposal proposal =
      draft_generate(draft, prefix, config.draft_len, rng);
  std::vector<Distribution> target_dists =
      target_verify(target, prefix, proposal.tokens);

  CycleTrace trace;
  trace.drafted.reserve(proposal.tokens.size());
  for (std::size_t i = 0; i < proposal.tokens.size(); ++i) {
    TokenId x = proposal.tokens[i];
    trace.drafted.push_back(DraftedToken{
        x, proposal.distributions[i].at(x), target_dists[i].at(x)});
  }

  int reject_pos = -1;
  for (int i = 0; i < config.draft_len; ++i) {
    const DraftedToken& d = trace.drafted[static_cast<std::size_t>(i)];
    double r = rng.next_uniform();
    trace.uniform_draws.push_back(r);
    bool ok = accept_token(d.q_prob, d.p_prob, config.beta, r);
    trace.accept_flags.push_back(ok);
    if (!ok) {
      reject_pos = i;
      break;
    }
  }

  if (reject_pos >= 0) {
    std::size_t i = static_cast<std::size_t>(reject_pos);
    bool fallback = false;
    Distribution residual = residual_distribution(
        target_dists[i], proposal.distributions[i], &fallback);
    trace.residual_fallback = fallback;
    trace.resampled = {reject_pos, sample_token(residual, rng)};
  } else {
    trace.bonus = sample_token(target_dists.back(), rng);
  }
  return trace;
}

DecodeResult ssd_decode(const SequenceModel& target, const SequenceModel& draft,
                        std::span<const TokenId> prefix, const SsdConfig& config,
                        RandomStream& rng) {
  config.validate();
  DecodeResult result;
  TokenSeq context(prefix.begin(), prefix.end());
  std::int64_t emitted = 0;
  while (emitted < config.target_len) {
    CycleTrace trace = ssd_cycle(target, draft, context, config, rng);

    result.counts.draft_tokens += config.draft_len;
    result.counts.target_calls += 1;
    for (bool f : trace.accept_flags) {
      if (f) ++result.counts.accepted_tokens;
    }
    if (trace.resampled) ++result.counts.resampled_tokens;
    if (trace.bonus) ++result.counts.bonus_tokens;
    if (trace.residual_fallback) ++result.counts.residual_fallbacks;

    TokenSeq cycle_tokens = trace.emitted_tokens();
    emitted += static_cast<std::int64_t>(cycle_tokens.size());
    context.insert(context.end(), cycle_tokens.begin(), cycle_tokens.end());
    result.cycles.push_back(std::move(trace));
  }
  result.tokens.assign(context.begin() + static_cast<std::ptrdiff_t>(prefix.size()),
                       context.begin() + static_cast<std::ptrdiff_t>(prefix.size()) +
                           config.target_len);
  return result;
}

DecodeResult ssd_decode(const SequenceModel& target, const SequenceModel& draft,
                        std::span<const TokenId> prefix,
                        const SsdConfig& config) {
  RandomStream rng(config.seed);
  return ssd_decode(target, draft, prefix, config, rng);
}

CycleDistributions replay_cycle(const SequenceModel& target,
                                const SequenceModel& draft,
                                std::span<const TokenId> prefix_at_cycle_start,
                                const CycleTrace& trace) {
  CycleDistributions out;
  TokenSeq context(prefix_at_cycle_start.begin(), prefix_at_cycle_start.end());
  for (const DraftedToken& d : trace.drafted) {
    out.draft_dists.push_back(draft.next_distribution(context));
    out.target_dists.push_back(target.next_distribution(context));
    context.push_back(d.token);
  }
  out.target_dists.push_back(target.next_distribution(context));
  return out;
}

}  // namespace ssd
