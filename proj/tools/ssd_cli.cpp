// ssd: command-line front end over the ssd library.
//
// Subcommands: fit, derive-draft, decode, verify, sweep. decode and sweep
// read a RunConfig file (--config); flags override file values. Exit codes:
// 0 success, 1 verification or runtime failure, 2 usage or config error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ssd/bench.hpp"
#include "ssd/decode.hpp"
#include "ssd/model_io.hpp"
#include "ssd/oracle.hpp"
#include "ssd/run_config.hpp"
#include "ssd/verify.hpp"

namespace {

std::string format_num(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

// %.6g, then force a decimal point so rates read as "1.0" rather than "1".
std::string format_decimal(double value) {
  std::string s = format_num(value);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

std::string format_tokens(const ssd::TokenSeq& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += std::to_string(tokens[i]);
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  file << text;
  if (!file.flush()) {
    throw std::runtime_error("write to " + path + " failed");
  }
}

void require_input(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw ssd::UsageError("input file not found: " + path);
  }
}

int run_fit(const std::string& corpus_path, int order, double smoothing,
            const std::string& out_path) {
  require_input(corpus_path);
  ssd::Corpus corpus = ssd::load_corpus(corpus_path);
  ssd::TabularMarkovModel model = ssd::fit_tabular(corpus, order, smoothing);
  ssd::save_model(model, out_path);
  std::cout << "fitted vocab=" << model.vocab_size() << " order=" << model.order()
            << " smoothing=" << format_num(smoothing)
            << " contexts=" << model.table().size() << "\n"
            << "cross_entropy=" << format_decimal(ssd::cross_entropy(model, corpus))
            << "\n"
            << "wrote " << out_path << "\n";
  return 0;
}

int run_derive_draft(const std::string& model_path,
                     const std::string& reference_path, int order,
                     double smoothing, const std::string& out_path) {
  require_input(model_path);
  require_input(reference_path);
  ssd::TabularMarkovModel target = ssd::load_model(model_path);
  ssd::Corpus reference = ssd::load_corpus(reference_path);
  ssd::TabularMarkovModel draft =
      ssd::derive_draft(target, order, smoothing, reference);
  ssd::save_model(draft, out_path);
  std::cout << "derived vocab=" << draft.vocab_size() << " order=" << draft.order()
            << " smoothing=" << format_num(smoothing)
            << " contexts=" << draft.table().size() << "\n"
            << "cross_entropy="
            << format_decimal(ssd::cross_entropy(draft, reference)) << "\n"
            << "wrote " << out_path << "\n";
  return 0;
}

int run_decode(const ssd::RunConfig& config) {
  ssd::MaterializedModels models = ssd::materialize_models(config);
  ssd::DecodeResult result =
      ssd::ssd_decode(models.target, models.draft, config.prefix, config.ssd);
  ssd::Metrics metrics = ssd::simulate_cost(result, config.cost);

  std::string out;
  out += "tokens: " + format_tokens(result.tokens) + "\n";
  for (std::size_t c = 0; c < result.cycles.size(); ++c) {
    const ssd::CycleTrace& cycle = result.cycles[c];
    int accepted = 0;
    for (bool f : cycle.accept_flags) {
      if (f) ++accepted;
    }
    out += "cycle " + std::to_string(c + 1) +
           ": accepted=" + std::to_string(accepted);
    if (cycle.resampled) {
      out += " resampled@" + std::to_string(cycle.resampled->first) + "=" +
             std::to_string(cycle.resampled->second);
    }
    if (cycle.bonus) {
      out += " bonus=" + std::to_string(*cycle.bonus);
    }
    out += " emitted: " + format_tokens(cycle.emitted_tokens()) + "\n";
  }
  out += "beta=" + format_decimal(config.ssd.beta) + "\n";
  out += "draft_len=" + std::to_string(config.ssd.draft_len) + "\n";
  out += "target_len=" + std::to_string(config.ssd.target_len) + "\n";
  out += "cycles=" + std::to_string(result.cycles.size()) + "\n";
  out += "acceptance_rate=" + format_decimal(metrics.acceptance_rate) + "\n";
  out += "mean_emitted_per_cycle=" +
         format_decimal(metrics.mean_emitted_per_cycle) + "\n";
  out += "target_calls=" + std::to_string(result.counts.target_calls) + "\n";
  out += "draft_tokens=" + std::to_string(result.counts.draft_tokens) + "\n";
  out += "sim_cost=" + format_num(metrics.sim_cost) + "\n";
  out += "rtf_analog=" + format_decimal(metrics.rtf_analog) + "\n";
  out += "speedup_vs_ar=" + format_decimal(metrics.speedup_vs_ar) + "\n";

  std::cout << out;
  if (config.out) write_text(*config.out, out);
  return 0;
}

int run_verify(const std::string& level_name, std::uint64_t seed) {
  ssd::verify::Level level = level_name == "full" ? ssd::verify::Level::kFull
                                                  : ssd::verify::Level::kQuick;
  ssd::verify::Report report = ssd::verify::run(level, seed);
  std::cout << report.format();
  return report.all_passed() ? 0 : 1;
}

int run_sweep(const ssd::RunConfig& config, const std::string& kind) {
  ssd::MaterializedModels models = ssd::materialize_models(config);
  std::vector<ssd::SweepRow> rows;
  if (kind == "beta") {
    if (config.betas.empty()) {
      throw ssd::UsageError("sweep kind=beta needs a non-empty betas list");
    }
    rows = ssd::sweep_beta(models.target, models.draft, config.prefix,
                           config.ssd, config.betas, config.cost, config.trials);
  } else {
    if (config.draft_lens.empty()) {
      throw ssd::UsageError(
          "sweep kind=draft_len needs a non-empty draft_lens list");
    }
    rows = ssd::sweep_draft_len(models.target, models.draft, config.prefix,
                                config.ssd, config.draft_lens, config.cost,
                                config.trials);
  }
  if (!config.out) {
    throw ssd::UsageError("sweep needs an output path (config `out` or --out)");
  }
  ssd::write_csv(rows, *config.out);
  std::cout << ssd::to_csv(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speculative decoding over tabular token models"};
  app.require_subcommand(1);

  auto* fit = app.add_subcommand("fit", "fit a tabular Markov model to a corpus");
  std::string fit_corpus, fit_out;
  int fit_order = 1;
  double fit_smoothing = 0.0;
  fit->add_option("--corpus", fit_corpus, "corpus file")->required();
  fit->add_option("--order", fit_order, "context length (default 1)");
  fit->add_option("--smoothing", fit_smoothing, "additive smoothing (default 0)");
  fit->add_option("--out", fit_out, "output model file")->required();

  auto* derive = app.add_subcommand(
      "derive-draft", "derive a lower-order draft from a target model");
  std::string derive_model, derive_reference, derive_out;
  int derive_order = 0;
  double derive_smoothing = 0.0;
  derive->add_option("--model", derive_model, "target model file")->required();
  derive->add_option("--reference", derive_reference,
                     "corpus weighting the context average")->required();
  derive->add_option("--order", derive_order, "draft order (default 0)");
  derive->add_option("--smoothing", derive_smoothing,
                     "additive smoothing (default 0)");
  derive->add_option("--out", derive_out, "output model file")->required();

  auto* decode = app.add_subcommand("decode", "run one speculative decode");
  std::string decode_config, decode_out;
  std::uint64_t decode_seed = 0;
  double decode_beta = 0.0;
  int decode_draft_len = 0, decode_target_len = 0;
  decode->add_option("--config", decode_config, "run configuration file")
      ->required();
  auto* decode_seed_opt = decode->add_option("--seed", decode_seed, "RNG seed");
  auto* decode_beta_opt =
      decode->add_option("--beta", decode_beta, "tolerance factor");
  auto* decode_dl_opt =
      decode->add_option("--draft-len", decode_draft_len, "draft length");
  auto* decode_tl_opt =
      decode->add_option("--target-len", decode_target_len, "target length");
  auto* decode_out_opt =
      decode->add_option("--out", decode_out, "also write the report here");

  auto* verify = app.add_subcommand("verify", "run the oracle property suites");
  std::string verify_level = "quick";
  std::uint64_t verify_seed = 0;
  verify->add_option("--level", verify_level, "quick or full")
      ->check(CLI::IsMember({"quick", "full"}));
  verify->add_option("--seed", verify_seed, "RNG seed");

  auto* sweep = app.add_subcommand("sweep", "sweep beta or draft_len to CSV");
  std::string sweep_config, sweep_kind, sweep_out;
  std::uint64_t sweep_seed = 0;
  int sweep_trials = 0;
  sweep->add_option("--config", sweep_config, "run configuration file")
      ->required();
  sweep->add_option("--kind", sweep_kind, "beta or draft_len")
      ->required()
      ->check(CLI::IsMember({"beta", "draft_len"}));
  auto* sweep_seed_opt = sweep->add_option("--seed", sweep_seed, "RNG seed");
  auto* sweep_trials_opt =
      sweep->add_option("--trials", sweep_trials, "decodes per sweep point");
  auto* sweep_out_opt = sweep->add_option("--out", sweep_out, "CSV output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(fit)) {
      return run_fit(fit_corpus, fit_order, fit_smoothing, fit_out);
    }
    if (app.got_subcommand(derive)) {
      return run_derive_draft(derive_model, derive_reference, derive_order,
                              derive_smoothing, derive_out);
    }
    if (app.got_subcommand(decode)) {
      ssd::RunConfig config = ssd::RunConfig::load(decode_config);
      if (*decode_seed_opt) config.ssd.seed = decode_seed;
      if (*decode_beta_opt) config.ssd.beta = decode_beta;
      if (*decode_dl_opt) config.ssd.draft_len = decode_draft_len;
      if (*decode_tl_opt) config.ssd.target_len = decode_target_len;
      if (*decode_out_opt) config.out = decode_out;
      config.validate();
      return run_decode(config);
    }
    if (app.got_subcommand(verify)) {
      return run_verify(verify_level, verify_seed);
    }
    if (app.got_subcommand(sweep)) {
      ssd::RunConfig config = ssd::RunConfig::load(sweep_config);
      if (*sweep_seed_opt) config.ssd.seed = sweep_seed;
      if (*sweep_trials_opt) config.trials = sweep_trials;
      if (*sweep_out_opt) config.out = sweep_out;
      config.validate();
      return run_sweep(config, sweep_kind);
    }
  } catch (const ssd::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
