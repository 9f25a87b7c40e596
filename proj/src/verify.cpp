#include "ssd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "ssd/decode.hpp"
#include "ssd/oracle.hpp"

namespace ssd::verify {

namespace {

std::string format_g(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", value);
  return buf;
}

int next_below(RandomStream& rng, int n) {
  int v = static_cast<int>(rng.next_uniform() * n);
  return v < n ? v : n - 1;
}

TokenSeq random_prefix(int vocab_size, int max_len, RandomStream& rng) {
  TokenSeq prefix(static_cast<std::size_t>(next_below(rng, max_len + 1)));
  for (TokenId& t : prefix) t = next_below(rng, vocab_size);
  return prefix;
}

PropertyResult prop_losslessness(int pairs, std::uint64_t seed) {
  RandomStream rng(seed);
  double max_tv = 0.0;
  for (int i = 0; i < pairs; ++i) {
    int vocab = 2 + next_below(rng, 2);
    TokenSeq prefix = random_prefix(vocab, 2, rng);
    TabularMarkovModel target = random_model(vocab, next_below(rng, 3), rng);
    TabularMarkovModel draft = random_model(vocab, next_below(rng, 2), rng);
    int horizon = 1 + next_below(rng, 3);
    SsdConfig config{.draft_len = 1 + next_below(rng, 3),
                     .target_len = horizon,
                     .beta = 0.0,
                     .seed = 0};
    SequenceDistribution ssd_law =
        exact_ssd_distribution(target, draft, prefix, config, horizon);
    SequenceDistribution ar_law =
        exact_ar_distribution(target, prefix, horizon);
    max_tv = std::max(max_tv, tv_distance(ssd_law, ar_law));
  }
  PropertyResult result;
  result.name = "beta0-losslessness";
  result.passed = max_tv < 1e-10;
  result.detail = "pairs=" + std::to_string(pairs) +
                  " max_tv=" + format_g(max_tv) + " budget=1e-10";
  return result;
}

PropertyResult prop_step_endpoints(int pairs, std::uint64_t seed) {
  RandomStream rng(seed);
  double max_err = 0.0;
  for (int i = 0; i < pairs; ++i) {
    int vocab = 2 + next_below(rng, 4);
    Distribution q = random_distribution(vocab, rng);
    Distribution p = random_distribution(vocab, rng);
    Distribution at0 = step_emission_distribution(q, p, 0.0);
    Distribution at1 = step_emission_distribution(q, p, 1.0);
    for (int t = 0; t < vocab; ++t) {
      max_err = std::max(max_err, std::abs(at0[t] - q[t]));
      max_err = std::max(max_err, std::abs(at1[t] - p[t]));
    }
  }
  PropertyResult result;
  result.name = "step-endpoints";
  result.passed = max_err < 1e-12;
  result.detail = "pairs=" + std::to_string(pairs) +
                  " max_err=" + format_g(max_err) + " budget=1e-12";
  return result;
}

PropertyResult prop_acceptance_formula(int pairs, std::uint64_t seed) {
  RandomStream rng(seed);
  double max_err = 0.0;
  for (int i = 0; i < pairs; ++i) {
    int vocab = 2 + next_below(rng, 4);
    Distribution q = random_distribution(vocab, rng);
    Distribution p = random_distribution(vocab, rng);
    for (int b = 0; b <= 10; ++b) {
      double beta = b / 10.0;
      double analytic = analytic_acceptance_prob(q, p, beta);
      double numeric = numeric_acceptance_integral(q, p, beta);
      max_err = std::max(max_err, std::abs(analytic - numeric));
    }
  }
  PropertyResult result;
  result.name = "acceptance-formula";
  result.passed = max_err < 1e-9;
  result.detail = "pairs=" + std::to_string(pairs) +
                  " max_err=" + format_g(max_err) + " budget=1e-9";
  return result;
}

PropertyResult prop_acceptance_monotone(int pairs, std::uint64_t seed) {
  RandomStream rng(seed);
  double min_delta = 1.0;
  for (int i = 0; i < pairs; ++i) {
    int vocab = 2 + next_below(rng, 4);
    Distribution q = random_distribution(vocab, rng);
    Distribution p = random_distribution(vocab, rng);
    double prev = analytic_acceptance_prob(q, p, 0.0);
    for (int b = 1; b <= 10; ++b) {
      double cur = analytic_acceptance_prob(q, p, b / 10.0);
      min_delta = std::min(min_delta, cur - prev);
      prev = cur;
    }
  }
  PropertyResult result;
  result.name = "acceptance-monotone-in-beta";
  result.passed = min_delta > -1e-12;
  result.detail = "pairs=" + std::to_string(pairs) +
                  " min_delta=" + format_g(min_delta) + " slack=1e-12";
  return result;
}

PropertyResult prop_step_tv_monotone(int pairs, std::uint64_t seed) {
  RandomStream rng(seed);
  double min_delta = 1.0;
  for (int i = 0; i < pairs; ++i) {
    int vocab = 2 + next_below(rng, 4);
    Distribution q = random_distribution(vocab, rng);
    Distribution p = random_distribution(vocab, rng);
    double prev = tv_distance(step_emission_distribution(q, p, 0.0), q);
    for (int b = 1; b <= 10; ++b) {
      double cur = tv_distance(step_emission_distribution(q, p, b / 10.0), q);
      min_delta = std::min(min_delta, cur - prev);
      prev = cur;
    }
  }
  PropertyResult result;
  result.name = "step-tv-monotone-in-beta";
  result.passed = min_delta > -1e-12;
  result.detail = "pairs=" + std::to_string(pairs) +
                  " min_delta=" + format_g(min_delta) + " slack=1e-12";
  return result;
}

PropertyResult prop_mc_chi_square(std::uint64_t seed, int samples) {
  RandomStream setup(seed);
  int vocab = 3;
  TabularMarkovModel target = random_model(vocab, 1, setup);
  TabularMarkovModel draft = random_model(vocab, 0, setup);
  SsdConfig config{.draft_len = 2, .target_len = 3, .beta = 0.2, .seed = 0};
  int horizon = 3;
  SequenceDistribution exact =
      exact_ssd_distribution(target, draft, {}, config, horizon);

  std::map<TokenSeq, std::int64_t> observed;
  RandomStream rng(derive_seed(seed, 1));
  for (int s = 0; s < samples; ++s) {
    DecodeResult result = ssd_decode(target, draft, {}, config, rng);
    ++observed[result.tokens];
  }

  PropertyResult result;
  result.name = "mc-chi-square";
  for (const auto& entry : observed) {
    if (!exact.probs.count(entry.first)) {
      result.passed = false;
      result.detail = "observed sequence outside oracle support";
      return result;
    }
  }

  double stat = 0.0;
  int cells = 0;
  double pooled_expected = 0.0;
  double pooled_observed = 0.0;
  for (const auto& [seq, prob] : exact.probs) {
    double expected = prob * samples;
    auto it = observed.find(seq);
    double obs = it == observed.end() ? 0.0 : static_cast<double>(it->second);
    if (expected < 5.0) {
      pooled_expected += expected;
      pooled_observed += obs;
      continue;
    }
    double d = obs - expected;
    stat += d * d / expected;
    ++cells;
  }
  if (pooled_expected > 0.0) {
    double d = pooled_observed - pooled_expected;
    stat += d * d / pooled_expected;
    ++cells;
  }
  int df = cells - 1;
  double crit = chi_square_critical_999(df);
  result.passed = stat < crit;
  result.detail = "samples=" + std::to_string(samples) +
                  " cells=" + std::to_string(cells) + " stat=" + format_g(stat) +
                  " crit999=" + format_g(crit);
  return result;
}

}  // namespace

bool Report::all_passed() const {
  for (const PropertyResult& p : properties) {
    if (!p.passed) return false;
  }
  return true;
}

std::string Report::format() const {
  std::string out;
  int passed = 0;
  for (const PropertyResult& p : properties) {
    out += p.passed ? "[PASS] " : "[FAIL] ";
    out += p.name;
    out += ": ";
    out += p.detail;
    out += '\n';
    if (p.passed) ++passed;
  }
  out += "verify ";
  out += level == Level::kQuick ? "quick" : "full";
  out += ": ";
  out += std::to_string(passed);
  out += '/';
  out += std::to_string(properties.size());
  out += " properties passed\n";
  return out;
}

Report run(Level level, std::uint64_t seed) {
  bool full = level == Level::kFull;
  Report report;
  report.level = level;
  report.properties.push_back(
      prop_losslessness(full ? 60 : 12, derive_seed(seed, 1)));
  report.properties.push_back(
      prop_step_endpoints(full ? 500 : 200, derive_seed(seed, 2)));
  report.properties.push_back(
      prop_acceptance_formula(full ? 250 : 100, derive_seed(seed, 3)));
  report.properties.push_back(
      prop_acceptance_monotone(full ? 150 : 60, derive_seed(seed, 4)));
  report.properties.push_back(
      prop_step_tv_monotone(full ? 150 : 60, derive_seed(seed, 5)));
  if (full) {
    report.properties.push_back(prop_mc_chi_square(derive_seed(seed, 6), 100000));
  }
  return report;
}

Distribution random_distribution(int vocab_size, RandomStream& rng) {
  if (vocab_size < 1) {
    throw std::invalid_argument("random_distribution: vocab_size must be >= 1");
  }
  std::vector<double> weights(static_cast<std::size_t>(vocab_size));
  double total = 0.0;
  for (double& w : weights) {
    w = -std::log(1.0 - rng.next_uniform());
    total += w;
  }
  for (double& w : weights) w /= total;
  return Distribution(std::move(weights));
}

TabularMarkovModel random_model(int vocab_size, int order, RandomStream& rng) {
  TabularMarkovModel::Table table;
  for (int pads = order; pads >= 0; --pads) {
    int real = order - pads;
    std::int64_t combos = 1;
    for (int i = 0; i < real; ++i) combos *= vocab_size;
    for (std::int64_t c = 0; c < combos; ++c) {
      TokenSeq ctx(static_cast<std::size_t>(order), kBeginToken);
      std::int64_t rem = c;
      for (int i = real - 1; i >= 0; --i) {
        ctx[static_cast<std::size_t>(pads + i)] =
            static_cast<TokenId>(rem % vocab_size);
        rem /= vocab_size;
      }
      table.emplace(std::move(ctx), random_distribution(vocab_size, rng));
    }
  }
  return TabularMarkovModel(vocab_size, order, 0.0, std::move(table));
}

double numeric_acceptance_integral(const Distribution& q, const Distribution& p,
                                   double beta) {
  if (q.vocab_size() != p.vocab_size()) {
    throw std::invalid_argument(
        "numeric_acceptance_integral: q and p have different vocab sizes");
  }
  std::vector<double> thresholds(static_cast<std::size_t>(p.vocab_size()), 0.0);
  std::vector<double> cuts{0.0, 1.0};
  for (int x = 0; x < p.vocab_size(); ++x) {
    if (p[x] <= 0.0) continue;
    double c = std::min(1.0, std::min(1.0, q[x] / p[x]) + beta);
    thresholds[static_cast<std::size_t>(x)] = c;
    cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    double lo = cuts[i - 1];
    double hi = cuts[i];
    if (hi <= lo) continue;
    double mid = 0.5 * (lo + hi);
    double g = 0.0;
    for (int x = 0; x < p.vocab_size(); ++x) {
      if (p[x] > 0.0 && mid < thresholds[static_cast<std::size_t>(x)]) {
        g += p[x];
      }
    }
    total += g * (hi - lo);
  }
  return total;
}

double chi_square_critical_999(int degrees_of_freedom) {
  if (degrees_of_freedom < 1) {
    throw std::invalid_argument(
        "chi_square_critical_999: degrees of freedom must be >= 1");
  }
  constexpr double z999 = 3.0902323061678132;
  double a = 2.0 / (9.0 * degrees_of_freedom);
  double c = 1.0 - a + z999 * std::sqrt(a);
  return degrees_of_freedom * c * c * c;
}

}  // namespace ssd::verify
