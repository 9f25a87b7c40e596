#include "ssd/run_config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>

#include "ssd/model_io.hpp"

namespace ssd {

namespace {

std::string trim(std::string_view s) {
  std::size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : value) {
    if (c == ' ' || c == '\t' || c == ',') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

long long to_int(const std::string& value, const std::string& context) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw UsageError(context + ": expected an integer, got '" + value + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& value, const std::string& context) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw UsageError(context + ": expected an unsigned integer, got '" + value +
                     "'");
  }
  return out;
}

double to_double(const std::string& value, const std::string& context) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw UsageError(context + ": expected a number, got '" + value + "'");
  }
  return out;
}

bool to_bool(const std::string& value, const std::string& context) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError(context + ": expected true or false, got '" + value + "'");
}

std::string resolve_path(const std::string& value,
                         const std::filesystem::path& config_dir) {
  std::filesystem::path p(value);
  if (p.is_absolute()) return p.string();
  return (config_dir / p).string();
}

void apply_key(RunConfig& config, const std::string& key,
               const std::string& value, const std::filesystem::path& dir,
               const std::string& context) {
  if (key == "target_model") {
    config.target_model = resolve_path(value, dir);
  } else if (key == "target_corpus") {
    config.target_corpus = resolve_path(value, dir);
  } else if (key == "target_order") {
    config.target_order = static_cast<int>(to_int(value, context));
  } else if (key == "target_smoothing") {
    config.target_smoothing = to_double(value, context);
  } else if (key == "draft_model") {
    config.draft_model = resolve_path(value, dir);
  } else if (key == "draft_corpus") {
    config.draft_corpus = resolve_path(value, dir);
  } else if (key == "draft_from_target") {
    config.draft_from_target = to_bool(value, context);
  } else if (key == "draft_order") {
    config.draft_order = static_cast<int>(to_int(value, context));
  } else if (key == "draft_smoothing") {
    config.draft_smoothing = to_double(value, context);
  } else if (key == "prefix") {
    config.prefix.clear();
    for (const std::string& item : split_list(value)) {
      config.prefix.push_back(static_cast<TokenId>(to_int(item, context)));
    }
  } else if (key == "draft_len") {
    config.ssd.draft_len = static_cast<int>(to_int(value, context));
  } else if (key == "target_len") {
    config.ssd.target_len = static_cast<int>(to_int(value, context));
  } else if (key == "beta") {
    config.ssd.beta = to_double(value, context);
  } else if (key == "seed") {
    config.ssd.seed = to_u64(value, context);
  } else if (key == "cost_draft") {
    config.cost.c_draft = to_double(value, context);
  } else if (key == "cost_target") {
    config.cost.c_target = to_double(value, context);
  } else if (key == "cost_target_serial") {
    config.cost.c_target_serial = to_double(value, context);
  } else if (key == "token_duration") {
    config.cost.token_duration = to_double(value, context);
  } else if (key == "betas") {
    config.betas.clear();
    for (const std::string& item : split_list(value)) {
      config.betas.push_back(to_double(item, context));
    }
  } else if (key == "draft_lens") {
    config.draft_lens.clear();
    for (const std::string& item : split_list(value)) {
      config.draft_lens.push_back(static_cast<int>(to_int(item, context)));
    }
  } else if (key == "trials") {
    config.trials = static_cast<int>(to_int(value, context));
  } else if (key == "out") {
    config.out = resolve_path(value, dir);
  } else {
    throw UsageError(context + ": unknown key '" + key + "'");
  }
}

void check_exists(const std::optional<std::string>& path, const char* key) {
  if (path && !std::filesystem::exists(*path)) {
    throw UsageError(std::string(key) + " file does not exist: " + *path);
  }
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream file(path);
  if (!file) {
    throw UsageError("cannot open config file " + path);
  }
  std::filesystem::path dir = std::filesystem::path(path).parent_path();
  RunConfig config;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(file, line)) {
    ++lineno;
    std::string context = path + ":" + std::to_string(lineno);
    if (std::size_t hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw UsageError(context + ": expected 'key = value'");
    }
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw UsageError(context + ": empty key");
    }
    if (!seen.insert(key).second) {
      throw UsageError(context + ": duplicate key '" + key + "'");
    }
    apply_key(config, key, value, dir, context);
  }
  config.validate();
  return config;
}

void RunConfig::validate() const {
  try {
    ssd.validate();
    cost.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (target_order < 0 || draft_order < 0) {
    throw UsageError("model orders must be >= 0");
  }
  if (target_smoothing < 0.0 || draft_smoothing < 0.0) {
    throw UsageError("smoothing must be >= 0");
  }
  if (trials < 1) {
    throw UsageError("trials must be >= 1");
  }
  int draft_sources = (draft_model ? 1 : 0) + (draft_corpus ? 1 : 0) +
                      (draft_from_target ? 1 : 0);
  if (draft_sources > 1) {
    throw UsageError(
        "at most one of draft_model, draft_corpus, draft_from_target may be "
        "set");
  }
  for (double b : betas) {
    if (!(b >= 0.0 && b <= 1.0)) {
      throw UsageError("betas entries must lie in [0, 1]");
    }
  }
  for (int len : draft_lens) {
    if (len < 1 || len > 16) {
      throw UsageError("draft_lens entries must lie in [1, 16]");
    }
  }
  check_exists(target_model, "target_model");
  check_exists(target_corpus, "target_corpus");
  check_exists(draft_model, "draft_model");
  check_exists(draft_corpus, "draft_corpus");
}

MaterializedModels materialize_models(const RunConfig& config) {
  config.validate();

  std::optional<Corpus> corpus;
  if (config.target_corpus) {
    corpus = load_corpus(*config.target_corpus);
  }
  std::optional<TabularMarkovModel> target;
  if (config.target_model) {
    target = load_model(*config.target_model);
  } else if (corpus) {
    target = fit_tabular(*corpus, config.target_order, config.target_smoothing);
  } else {
    throw UsageError("config needs target_model or target_corpus");
  }

  std::optional<TabularMarkovModel> draft;
  if (config.draft_model) {
    draft = load_model(*config.draft_model);
  } else if (config.draft_corpus) {
    draft = fit_tabular(load_corpus(*config.draft_corpus), config.draft_order,
                        config.draft_smoothing);
  } else if (config.draft_from_target) {
    if (!corpus) {
      throw UsageError(
          "draft_from_target requires target_corpus for the derivation "
          "weighting");
    }
    draft = derive_draft(*target, config.draft_order, config.draft_smoothing,
                         *corpus);
  } else {
    draft = *target;
  }

  if (target->vocab_size() != draft->vocab_size()) {
    throw UsageError("target and draft vocab sizes differ");
  }
  for (TokenId t : config.prefix) {
    if (t < 0 || t >= target->vocab_size()) {
      throw UsageError("prefix token " + std::to_string(t) +
                       " is outside the vocabulary");
    }
  }
  return MaterializedModels{std::move(*target), std::move(*draft)};
}

}  // namespace ssd
