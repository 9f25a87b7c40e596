#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ssd/decode.hpp"
#include "ssd/model.hpp"

namespace ssd {

/**
 * Unit-cost latency model. Drafting a token costs c_draft; one verification
 * pass over a whole cycle costs c_target (parallel verification is the point
 * of speculative decoding, so its cost does not scale with draft_len); the
 * serial baseline pays c_target_serial per emitted token. token_duration is
 * the seconds of synthesized speech one token represents, which turns cost
 * into a real-time-factor analog.
 */
struct CostModel {
  double c_draft = 1.0;
  double c_target = 3.0;
  double c_target_serial = 3.0;
  double token_duration = 0.04;

  void validate() const;  // throws std::invalid_argument unless all > 0
};

struct Metrics {
  double acceptance_rate = 0.0;        // accepted / drafted
  double mean_emitted_per_cycle = 0.0; // in [1, draft_len + 1]
  double target_calls = 0.0;
  double draft_tokens = 0.0;
  double sim_cost = 0.0;               // draft_tokens*c_draft + target_calls*c_target
  double rtf_analog = 0.0;             // sim_cost / (target_len * token_duration)
  double speedup_vs_ar = 0.0;          // target_len * c_target_serial / sim_cost

  bool operator==(const Metrics&) const = default;
};

struct SweepRow {
  double beta = 0.0;
  int draft_len = 0;
  int trials = 0;
  Metrics mean;             // fieldwise mean over the trials
  double step_tv_mean = 0.0;  // mean TV(step emission, q) over drafted positions
  double rtf_sem = 0.0;       // standard errors over trials; not in the CSV
  double speedup_sem = 0.0;
};

// Metrics for one decode under the cost model. Pure arithmetic over the
// trace counts; recomputing from a stored DecodeResult is bit-stable.
Metrics simulate_cost(const DecodeResult& result, const CostModel& cost);

// One row per beta (draft_len per row for the second form), averaging
// `trials` independent decodes. Trial t of sweep point k runs on a stream
// seeded with derive_seed(base_config.seed, k, t), so rows are deterministic
// given the config seed and independent of evaluation order.
std::vector<SweepRow> sweep_beta(const SequenceModel& target,
                                 const SequenceModel& draft,
                                 std::span<const TokenId> prefix,
                                 const SsdConfig& base_config,
                                 std::span<const double> betas,
                                 const CostModel& cost, int trials);
std::vector<SweepRow> sweep_draft_len(const SequenceModel& target,
                                      const SequenceModel& draft,
                                      std::span<const TokenId> prefix,
                                      const SsdConfig& base_config,
                                      std::span<const int> lens,
                                      const CostModel& cost, int trials);

// CSV with the pinned header
// beta,draft_len,trials,acceptance_rate,mean_emitted_per_cycle,target_calls,
// draft_tokens,sim_cost,rtf_analog,speedup_vs_ar,step_tv_mean
// and numbers at 6 significant digits.
std::string to_csv(std::span<const SweepRow> rows);
void write_csv(std::span<const SweepRow> rows, const std::string& path);

}  // namespace ssd
