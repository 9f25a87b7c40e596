#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssd/bench.hpp"
#include "ssd/decode.hpp"
#include "ssd/model.hpp"

namespace ssd {

// Configuration or usage mistake; the CLI maps this to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/**
 * Run configuration for decode and sweep commands, loaded from a flat
 * `key = value` text file ('#' starts a comment). Models come either from
 * model files or from corpora fitted at load; when no draft source is given
 * the draft is the target itself. Relative paths are resolved against the
 * config file's directory. Recognized keys:
 *
 *   target_model | target_corpus, target_order, target_smoothing
 *   draft_model  | draft_corpus,  draft_order,  draft_smoothing
 *   draft_from_target (bool; order-reduced draft derived from the target,
 *                      weighted by the target_corpus contexts)
 *   prefix (space-separated token ids)
 *   draft_len, target_len, beta, seed
 *   cost_draft, cost_target, cost_target_serial, token_duration
 *   betas, draft_lens (space- or comma-separated sweep lists)
 *   trials, out
 */
struct RunConfig {
  std::optional<std::string> target_model;
  std::optional<std::string> target_corpus;
  int target_order = 1;
  double target_smoothing = 0.0;

  std::optional<std::string> draft_model;
  std::optional<std::string> draft_corpus;
  bool draft_from_target = false;
  int draft_order = 0;
  double draft_smoothing = 0.0;

  TokenSeq prefix;
  SsdConfig ssd;
  CostModel cost;
  std::vector<double> betas;
  std::vector<int> draft_lens;
  int trials = 100;
  std::optional<std::string> out;

  // Parses the file, resolves paths, and checks that every referenced file
  // exists and numeric fields satisfy the owning types' invariants.
  static RunConfig load(const std::string& path);

  void validate() const;  // throws UsageError
};

struct MaterializedModels {
  TabularMarkovModel target;
  TabularMarkovModel draft;
};

// Loads or fits both models as the config directs. Requires a target source;
// draft_from_target additionally requires target_corpus for the derivation
// weighting.
MaterializedModels materialize_models(const RunConfig& config);

}  // namespace ssd
