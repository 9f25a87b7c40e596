#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "ssd/decode.hpp"
#include "ssd/model.hpp"
#include "ssd/oracle.hpp"
#include "ssd/verify.hpp"

using namespace ssd;

namespace {

bool within_3sigma(double observed_count, double prob, double n) {
  double sigma = std::sqrt(prob * (1.0 - prob) * n);
  return std::abs(observed_count - prob * n) <= 3.0 * sigma + 1e-9;
}

TabularMarkovModel order1_0101_model() {
  Corpus corpus;
  corpus.vocab_size = 2;
  corpus.sequences = {{0, 1, 0, 1}};
  return fit_tabular(corpus, 1, 0.0);
}

TabularMarkovModel constant_model(const Distribution& row) {
  TabularMarkovModel::Table table;
  table.emplace(TokenSeq{}, row);
  return TabularMarkovModel(row.vocab_size(), 0, 0.0, std::move(table));
}

void check_trace_invariants(const CycleTrace& trace, int draft_len) {
  CHECK(trace.drafted.size() == static_cast<std::size_t>(draft_len));
  CHECK(trace.accept_flags.size() >= 1);
  CHECK(trace.accept_flags.size() <= static_cast<std::size_t>(draft_len));
  CHECK(trace.uniform_draws.size() == trace.accept_flags.size());
  int falses = 0;
  for (std::size_t i = 0; i < trace.accept_flags.size(); ++i) {
    if (!trace.accept_flags[i]) {
      ++falses;
      CHECK(i == trace.accept_flags.size() - 1);
    }
  }
  CHECK(falses <= 1);
  CHECK(trace.resampled.has_value() == (falses == 1));
  bool all_accepted = falses == 0 &&
                      trace.accept_flags.size() ==
                          static_cast<std::size_t>(draft_len);
  CHECK(trace.bonus.has_value() == all_accepted);
  for (const DraftedToken& d : trace.drafted) CHECK(d.p_prob > 0.0);
  int emitted = trace.emitted_count();
  CHECK(emitted >= 1);
  CHECK(emitted <= draft_len + 1);
}

}  // namespace

TEST_CASE("RandomStream is deterministic and in [0,1)") {
  RandomStream a(99), b(99), c(100);
  bool all_equal = true;
  bool any_differs = false;
  for (int i = 0; i < 1000; ++i) {
    double ua = a.next_uniform();
    double ub = b.next_uniform();
    double uc = c.next_uniform();
    CHECK(ua >= 0.0);
    CHECK(ua < 1.0);
    all_equal = all_equal && ua == ub;
    any_differs = any_differs || ua != uc;
  }
  CHECK(all_equal);
  CHECK(any_differs);
  CHECK(a.draws() == 1000);

  CHECK(derive_seed(1, 0, 0) != derive_seed(0, 1, 0));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  CHECK(derive_seed(7, 4, 1) == derive_seed(7, 4, 1));
}

TEST_CASE("SsdConfig validation") {
  SsdConfig good{.draft_len = 1, .target_len = 1, .beta = 1.0, .seed = 0};
  CHECK_NOTHROW(good.validate());
  SsdConfig bad = good;
  bad.draft_len = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = good;
  bad.target_len = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = good;
  bad.beta = -0.01;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.beta = 1.01;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("draft_generate") {
  SUBCASE("point-mass draft is the deterministic continuation") {
    TabularMarkovModel model = order1_0101_model();
    RandomStream rng(4);
    TokenSeq prefix{0};
    DraftProposal proposal = draft_generate(model, prefix, 3, rng);
    CHECK(proposal.tokens == TokenSeq{1, 0, 1});
    CHECK(rng.draws() == 3);
    CHECK(proposal.distributions[0].probs() == std::vector<double>{0.0, 1.0});
    CHECK(proposal.distributions[1].probs() == std::vector<double>{1.0, 0.0});
  }
  SUBCASE("first-token frequencies follow the draft distribution") {
    Distribution row({0.15, 0.6, 0.25});
    TabularMarkovModel model = constant_model(row);
    const int n = 100000;
    std::vector<int> counts(3, 0);
    RandomStream rng(8);
    for (int i = 0; i < n; ++i) {
      DraftProposal proposal = draft_generate(model, {}, 1, rng);
      ++counts[static_cast<std::size_t>(proposal.tokens[0])];
    }
    for (int t = 0; t < 3; ++t) {
      CHECK(within_3sigma(counts[static_cast<std::size_t>(t)], row[t], n));
    }
  }
}

TEST_CASE("target_verify returns each extended-prefix conditional") {
  RandomStream model_rng(21);
  TabularMarkovModel target = verify::random_model(3, 2, model_rng);
  TokenSeq prefix{2, 0};
  TokenSeq drafted{1, 1, 0};

  std::vector<Distribution> dists = target_verify(target, prefix, drafted);
  REQUIRE(dists.size() == 4);
  TokenSeq ctx = prefix;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    CHECK(dists[i].probs() == target.next_distribution(ctx).probs());
    if (i < drafted.size()) ctx.push_back(drafted[i]);
  }

  SUBCASE("smallest size") {
    TokenSeq one{1};
    std::vector<Distribution> two = target_verify(target, prefix, one);
    REQUIRE(two.size() == 2);
    CHECK(two[0].probs() == target.next_distribution(prefix).probs());
    TokenSeq extended = prefix;
    extended.push_back(1);
    CHECK(two[1].probs() == target.next_distribution(extended).probs());
  }
}

TEST_CASE("accept_token implements the strict relaxed threshold") {
  CHECK(accept_token(0.5, 0.5, 0.0, 0.999999));
  CHECK_FALSE(accept_token(0.1, 0.5, 0.0, 0.3));
  CHECK(accept_token(0.1, 0.5, 0.4, 0.3));
  CHECK_FALSE(accept_token(0.1, 0.5, 0.0, 0.2));  // strict <
  CHECK(accept_token(0.1, 0.5, 0.0, 0.19999999));
  CHECK(accept_token(0.0, 0.5, 1.0, 0.999999));
  CHECK_THROWS_AS(accept_token(0.5, 0.0, 0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(accept_token(0.5, -0.1, 0.0, 0.5), std::invalid_argument);
}

TEST_CASE("residual_distribution") {
  Distribution q({0.9, 0.1});
  Distribution p({0.5, 0.5});
  CHECK(residual_distribution(q, p).probs() == std::vector<double>{1.0, 0.0});

  Distribution q3({0.5, 0.3, 0.2});
  Distribution p3({0.2, 0.3, 0.5});
  CHECK(residual_distribution(q3, p3).probs() ==
        std::vector<double>{1.0, 0.0, 0.0});

  SUBCASE("zero residual falls back to q") {
    bool fallback = false;
    Distribution r = residual_distribution(q, q, &fallback);
    CHECK(fallback);
    CHECK(r.probs() == q.probs());
    fallback = true;
    residual_distribution(q, p, &fallback);
    CHECK_FALSE(fallback);
  }
  SUBCASE("vocab mismatch") {
    CHECK_THROWS_AS(residual_distribution(q, p3), std::invalid_argument);
  }
}

TEST_CASE("ssd_cycle") {
  SUBCASE("identical models at beta 0 accept everything plus bonus") {
    RandomStream model_rng(33);
    TabularMarkovModel model = verify::random_model(3, 1, model_rng);
    SsdConfig config{.draft_len = 3, .target_len = 10, .beta = 0.0, .seed = 0};
    RandomStream rng(5);
    for (int i = 0; i < 50; ++i) {
      CycleTrace trace = ssd_cycle(model, model, {}, config, rng);
      CHECK(trace.emitted_count() == 4);
      CHECK(trace.bonus.has_value());
      CHECK_FALSE(trace.resampled.has_value());
    }
  }
  SUBCASE("beta 1 accepts everything regardless of models") {
    RandomStream model_rng(34);
    TabularMarkovModel target = verify::random_model(3, 2, model_rng);
    TabularMarkovModel draft = verify::random_model(3, 0, model_rng);
    SsdConfig config{.draft_len = 4, .target_len = 10, .beta = 1.0, .seed = 0};
    RandomStream rng(6);
    for (int i = 0; i < 50; ++i) {
      CycleTrace trace = ssd_cycle(target, draft, {}, config, rng);
      CHECK(trace.emitted_count() == 5);
      CHECK(trace.bonus.has_value());
    }
  }
  SUBCASE("trace invariants and RNG draw accounting over random models") {
    RandomStream model_rng(35);
    for (int round = 0; round < 30; ++round) {
      TabularMarkovModel target = verify::random_model(3, 1, model_rng);
      TabularMarkovModel draft = verify::random_model(3, 0, model_rng);
      int draft_len = 1 + round % 4;
      double beta = (round % 5) / 10.0;
      SsdConfig config{.draft_len = draft_len,
                       .target_len = 10,
                       .beta = beta,
                       .seed = 0};
      RandomStream rng(derive_seed(50, static_cast<std::uint64_t>(round)));
      CycleTrace trace = ssd_cycle(target, draft, {}, config, rng);
      check_trace_invariants(trace, draft_len);
      CHECK(rng.draws() == static_cast<std::uint64_t>(draft_len) +
                               trace.accept_flags.size() + 1);
    }
  }
  SUBCASE("acceptance-count distribution matches the analytic prediction") {
    Distribution q({0.55, 0.25, 0.2});
    Distribution p({0.2, 0.45, 0.35});
    TabularMarkovModel target = constant_model(q);
    TabularMarkovModel draft = constant_model(p);
    double beta = 0.2;
    double a = analytic_acceptance_prob(q, p, beta);
    SsdConfig config{.draft_len = 3, .target_len = 10, .beta = beta, .seed = 0};

    const int n = 100000;
    std::vector<int> buckets(4, 0);
    RandomStream rng(60);
    for (int i = 0; i < n; ++i) {
      CycleTrace trace = ssd_cycle(target, draft, {}, config, rng);
      int accepted = 0;
      for (bool f : trace.accept_flags) {
        if (f) ++accepted;
      }
      ++buckets[static_cast<std::size_t>(accepted)];
    }
    // With order-0 models the per-position acceptance probability is the
    // same constant a, so the count is truncated-geometric.
    for (int j = 0; j <= 3; ++j) {
      double prob = j < 3 ? std::pow(a, j) * (1.0 - a) : std::pow(a, 3);
      CHECK(within_3sigma(buckets[static_cast<std::size_t>(j)], prob, n));
    }
  }
}

TEST_CASE("ssd_decode") {
  SUBCASE("smallest instance runs exactly one cycle") {
    RandomStream model_rng(41);
    TabularMarkovModel target = verify::random_model(2, 1, model_rng);
    TabularMarkovModel draft = verify::random_model(2, 0, model_rng);
    SsdConfig config{.draft_len = 1, .target_len = 1, .beta = 0.0, .seed = 9};
    DecodeResult result = ssd_decode(target, draft, {}, config);
    CHECK(result.cycles.size() == 1);
    CHECK(result.tokens.size() == 1);
    const CycleTrace& trace = result.cycles[0];
    if (trace.resampled) {
      CHECK(result.tokens[0] == trace.resampled->second);
    } else {
      CHECK(result.tokens[0] == trace.drafted[0].token);
    }
  }
  SUBCASE("identical models need ceil(L_t / (L_d + 1)) cycles") {
    RandomStream model_rng(42);
    TabularMarkovModel model = verify::random_model(3, 1, model_rng);
    for (int target_len = 1; target_len <= 12; ++target_len) {
      SsdConfig config{.draft_len = 3,
                       .target_len = target_len,
                       .beta = 0.0,
                       .seed = 11};
      DecodeResult result = ssd_decode(model, model, {}, config);
      CHECK(result.counts.target_calls == (target_len + 3) / 4);
      CHECK(result.tokens.size() == static_cast<std::size_t>(target_len));
    }
  }
  SUBCASE("counts line up with traces and the output is the emitted prefix") {
    RandomStream model_rng(43);
    TabularMarkovModel target = verify::random_model(3, 2, model_rng);
    TabularMarkovModel draft = verify::random_model(3, 0, model_rng);
    SsdConfig config{.draft_len = 3, .target_len = 17, .beta = 0.2, .seed = 12};
    TokenSeq prefix{1, 2};
    DecodeResult result = ssd_decode(target, draft, prefix, config);

    CHECK(result.tokens.size() == 17);
    CHECK(result.counts.target_calls ==
          static_cast<std::int64_t>(result.cycles.size()));
    CHECK(result.counts.draft_tokens ==
          static_cast<std::int64_t>(result.cycles.size()) * 3);

    std::int64_t accepted = 0, resampled = 0, bonus = 0;
    TokenSeq emitted;
    for (const CycleTrace& trace : result.cycles) {
      check_trace_invariants(trace, 3);
      for (bool f : trace.accept_flags) {
        if (f) ++accepted;
      }
      if (trace.resampled) ++resampled;
      if (trace.bonus) ++bonus;
      TokenSeq cycle_tokens = trace.emitted_tokens();
      emitted.insert(emitted.end(), cycle_tokens.begin(), cycle_tokens.end());
    }
    CHECK(result.counts.accepted_tokens == accepted);
    CHECK(result.counts.resampled_tokens == resampled);
    CHECK(result.counts.bonus_tokens == bonus);
    CHECK(result.counts.emitted_total() >= 17);
    CHECK(TokenSeq(emitted.begin(), emitted.begin() + 17) == result.tokens);
  }
  SUBCASE("deterministic under a fixed seed") {
    RandomStream model_rng(44);
    TabularMarkovModel target = verify::random_model(3, 1, model_rng);
    TabularMarkovModel draft = verify::random_model(3, 0, model_rng);
    SsdConfig config{.draft_len = 2, .target_len = 20, .beta = 0.1, .seed = 77};
    DecodeResult a = ssd_decode(target, draft, {}, config);
    DecodeResult b = ssd_decode(target, draft, {}, config);
    CHECK(a == b);
    RandomStream rng(config.seed);
    DecodeResult c = ssd_decode(target, draft, {}, config, rng);
    CHECK(a == c);
  }
}

TEST_CASE("replay_cycle reproduces every recorded probability") {
  RandomStream model_rng(45);
  TabularMarkovModel target = verify::random_model(3, 2, model_rng);
  TabularMarkovModel draft = verify::random_model(3, 1, model_rng);
  SsdConfig config{.draft_len = 3, .target_len = 25, .beta = 0.3, .seed = 13};
  TokenSeq prefix{0, 2};
  DecodeResult result = ssd_decode(target, draft, prefix, config);

  TokenSeq context = prefix;
  for (const CycleTrace& trace : result.cycles) {
    CycleDistributions dists = replay_cycle(target, draft, context, trace);
    REQUIRE(dists.draft_dists.size() == 3);
    REQUIRE(dists.target_dists.size() == 4);
    for (std::size_t i = 0; i < trace.drafted.size(); ++i) {
      const DraftedToken& d = trace.drafted[i];
      CHECK(dists.draft_dists[i].at(d.token) == d.p_prob);
      CHECK(dists.target_dists[i].at(d.token) == d.q_prob);
    }
    TokenSeq emitted = trace.emitted_tokens();
    context.insert(context.end(), emitted.begin(), emitted.end());
  }
}
