#include "ssd/bench.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "ssd/oracle.hpp"

namespace ssd {

namespace {

std::string format_sig6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

struct TrialStats {
  Metrics sum;
  double rtf_sq = 0.0;
  double speedup_sq = 0.0;
  double step_tv_sum = 0.0;
  std::int64_t step_tv_positions = 0;
};

void accumulate_trial(TrialStats& stats, const Metrics& m) {
  stats.sum.acceptance_rate += m.acceptance_rate;
  stats.sum.mean_emitted_per_cycle += m.mean_emitted_per_cycle;
  stats.sum.target_calls += m.target_calls;
  stats.sum.draft_tokens += m.draft_tokens;
  stats.sum.sim_cost += m.sim_cost;
  stats.sum.rtf_analog += m.rtf_analog;
  stats.sum.speedup_vs_ar += m.speedup_vs_ar;
  stats.rtf_sq += m.rtf_analog * m.rtf_analog;
  stats.speedup_sq += m.speedup_vs_ar * m.speedup_vs_ar;
}

// TV(step emission, q) at every drafted position of the run, recovered by
// replaying each cycle's conditionals against the models.
void accumulate_step_tv(TrialStats& stats, const SequenceModel& target,
                        const SequenceModel& draft,
                        std::span<const TokenId> prefix,
                        const DecodeResult& result, double beta) {
  TokenSeq context(prefix.begin(), prefix.end());
  for (const CycleTrace& cycle : result.cycles) {
    CycleDistributions dists = replay_cycle(target, draft, context, cycle);
    for (std::size_t i = 0; i < dists.draft_dists.size(); ++i) {
      Distribution emission = step_emission_distribution(
          dists.target_dists[i], dists.draft_dists[i], beta);
      stats.step_tv_sum += tv_distance(emission, dists.target_dists[i]);
      ++stats.step_tv_positions;
    }
    TokenSeq emitted = cycle.emitted_tokens();
    context.insert(context.end(), emitted.begin(), emitted.end());
  }
}

SweepRow run_point(const SequenceModel& target, const SequenceModel& draft,
                   std::span<const TokenId> prefix, const SsdConfig& config,
                   const CostModel& cost, int trials, std::size_t point_index) {
  TrialStats stats;
  for (int t = 0; t < trials; ++t) {
    RandomStream rng(derive_seed(config.seed, static_cast<std::uint64_t>(point_index),
                                 static_cast<std::uint64_t>(t)));
    DecodeResult result = ssd_decode(target, draft, prefix, config, rng);
    accumulate_trial(stats, simulate_cost(result, cost));
    accumulate_step_tv(stats, target, draft, prefix, result, config.beta);
  }

  SweepRow row;
  row.beta = config.beta;
  row.draft_len = config.draft_len;
  row.trials = trials;
  double n = static_cast<double>(trials);
  row.mean.acceptance_rate = stats.sum.acceptance_rate / n;
  row.mean.mean_emitted_per_cycle = stats.sum.mean_emitted_per_cycle / n;
  row.mean.target_calls = stats.sum.target_calls / n;
  row.mean.draft_tokens = stats.sum.draft_tokens / n;
  row.mean.sim_cost = stats.sum.sim_cost / n;
  row.mean.rtf_analog = stats.sum.rtf_analog / n;
  row.mean.speedup_vs_ar = stats.sum.speedup_vs_ar / n;
  row.step_tv_mean =
      stats.step_tv_positions > 0
          ? stats.step_tv_sum / static_cast<double>(stats.step_tv_positions)
          : 0.0;
  if (trials > 1) {
    double rtf_var = (stats.rtf_sq - n * row.mean.rtf_analog * row.mean.rtf_analog) /
                     (n - 1.0);
    double spd_var =
        (stats.speedup_sq - n * row.mean.speedup_vs_ar * row.mean.speedup_vs_ar) /
        (n - 1.0);
    row.rtf_sem = std::sqrt(std::max(0.0, rtf_var) / n);
    row.speedup_sem = std::sqrt(std::max(0.0, spd_var) / n);
  }
  return row;
}

}  // namespace

void CostModel::validate() const {
  if (!(c_draft > 0.0) || !(c_target > 0.0) || !(c_target_serial > 0.0) ||
      !(token_duration > 0.0)) {
    throw std::invalid_argument("CostModel: all costs must be > 0");
  }
}

Metrics simulate_cost(const DecodeResult& result, const CostModel& cost) {
  cost.validate();
  if (result.counts.target_calls < 1 || result.tokens.empty()) {
    throw std::invalid_argument("simulate_cost: empty decode result");
  }
  Metrics m;
  double drafted = static_cast<double>(result.counts.draft_tokens);
  double calls = static_cast<double>(result.counts.target_calls);
  double target_len = static_cast<double>(result.tokens.size());
  m.acceptance_rate = static_cast<double>(result.counts.accepted_tokens) / drafted;
  m.mean_emitted_per_cycle =
      static_cast<double>(result.counts.emitted_total()) / calls;
  m.target_calls = calls;
  m.draft_tokens = drafted;
  m.sim_cost = drafted * cost.c_draft + calls * cost.c_target;
  m.rtf_analog = m.sim_cost / (target_len * cost.token_duration);
  m.speedup_vs_ar = target_len * cost.c_target_serial / m.sim_cost;
  return m;
}

std::vector<SweepRow> sweep_beta(const SequenceModel& target,
                                 const SequenceModel& draft,
                                 std::span<const TokenId> prefix,
                                 const SsdConfig& base_config,
                                 std::span<const double> betas,
                                 const CostModel& cost, int trials) {
  base_config.validate();
  cost.validate();
  if (betas.empty()) {
    throw std::invalid_argument("sweep_beta: empty beta list");
  }
  if (trials < 1) {
    throw std::invalid_argument("sweep_beta: trials must be >= 1");
  }
  std::vector<SweepRow> rows;
  rows.reserve(betas.size());
  for (std::size_t k = 0; k < betas.size(); ++k) {
    SsdConfig config = base_config;
    config.beta = betas[k];
    config.validate();
    rows.push_back(run_point(target, draft, prefix, config, cost, trials, k));
  }
  return rows;
}

std::vector<SweepRow> sweep_draft_len(const SequenceModel& target,
                                      const SequenceModel& draft,
                                      std::span<const TokenId> prefix,
                                      const SsdConfig& base_config,
                                      std::span<const int> lens,
                                      const CostModel& cost, int trials) {
  base_config.validate();
  cost.validate();
  if (lens.empty()) {
    throw std::invalid_argument("sweep_draft_len: empty draft_len list");
  }
  if (trials < 1) {
    throw std::invalid_argument("sweep_draft_len: trials must be >= 1");
  }
  for (int len : lens) {
    if (len < 1 || len > 16) {
      throw std::invalid_argument(
          "sweep_draft_len: draft_len values must lie in [1, 16]");
    }
  }
  std::vector<SweepRow> rows;
  rows.reserve(lens.size());
  for (std::size_t k = 0; k < lens.size(); ++k) {
    SsdConfig config = base_config;
    config.draft_len = lens[k];
    config.validate();
    rows.push_back(run_point(target, draft, prefix, config, cost, trials, k));
  }
  return rows;
}

std::string to_csv(std::span<const SweepRow> rows) {
  std::string out =
      "beta,draft_len,trials,acceptance_rate,mean_emitted_per_cycle,"
      "target_calls,draft_tokens,sim_cost,rtf_analog,speedup_vs_ar,"
      "step_tv_mean\n";
  for (const SweepRow& row : rows) {
    out += format_sig6(row.beta);
    out += ',';
    out += std::to_string(row.draft_len);
    out += ',';
    out += std::to_string(row.trials);
    out += ',';
    out += format_sig6(row.mean.acceptance_rate);
    out += ',';
    out += format_sig6(row.mean.mean_emitted_per_cycle);
    out += ',';
    out += format_sig6(row.mean.target_calls);
    out += ',';
    out += format_sig6(row.mean.draft_tokens);
    out += ',';
    out += format_sig6(row.mean.sim_cost);
    out += ',';
    out += format_sig6(row.mean.rtf_analog);
    out += ',';
    out += format_sig6(row.mean.speedup_vs_ar);
    out += ',';
    out += format_sig6(row.step_tv_mean);
    out += '\n';
  }
  return out;
}

void write_csv(std::span<const SweepRow> rows, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw std::runtime_error("write_csv: cannot open " + path + " for writing");
  }
  file << to_csv(rows);
  if (!file.flush()) {
    throw std::runtime_error("write_csv: write to " + path + " failed");
  }
}

}  // namespace ssd
