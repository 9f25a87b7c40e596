// make_scenarios: regenerates the bundled corpora under data/. Output is
// deterministic, so rerunning reproduces the committed files byte for byte.
//
// identical.corpus     one order-1 chain; decoding with draft == target is
//                      the best case for speculation.
// degraded.corpus      an order-2 chain whose conditionals mix a moving
//                      point mass with a uniform floor; an order-0 draft
//                      derived from the fitted target accepts around 80%.
// adversarial_target.corpus / adversarial_draft.corpus
//                      near-deterministic cycles pointing opposite ways, so
//                      a draft fitted on the second proposes tokens the
//                      target almost never accepts.

#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ssd/model.hpp"
#include "ssd/model_io.hpp"

namespace {

using ssd::Corpus;
using ssd::Distribution;
using ssd::kBeginToken;
using ssd::RandomStream;
using ssd::TabularMarkovModel;
using ssd::TokenId;
using ssd::TokenSeq;

Distribution spiked(int vocab, std::initializer_list<std::pair<TokenId, double>>
                                   spikes) {
  double spike_mass = 0.0;
  for (const auto& s : spikes) spike_mass += s.second;
  std::vector<double> probs(static_cast<std::size_t>(vocab),
                            (1.0 - spike_mass) / vocab);
  for (const auto& s : spikes) {
    probs[static_cast<std::size_t>(s.first)] += s.second;
  }
  return Distribution(std::move(probs));
}

Corpus sample_corpus(const TabularMarkovModel& generator, int sequences,
                     int length, std::uint64_t seed_base) {
  Corpus corpus;
  corpus.vocab_size = generator.vocab_size();
  for (int i = 0; i < sequences; ++i) {
    RandomStream rng(ssd::derive_seed(seed_base, static_cast<std::uint64_t>(i)));
    corpus.sequences.push_back(ssd::ar_decode(generator, {}, length, rng));
  }
  return corpus;
}

TabularMarkovModel identical_generator() {
  int vocab = 6;
  TabularMarkovModel::Table table;
  table.emplace(TokenSeq{kBeginToken}, Distribution::uniform(vocab));
  for (TokenId a = 0; a < vocab; ++a) {
    table.emplace(TokenSeq{a}, spiked(vocab, {{(a + 1) % 6, 0.5},
                                              {(a + 3) % 6, 0.2}}));
  }
  return TabularMarkovModel(vocab, 1, 0.0, std::move(table));
}

TabularMarkovModel degraded_generator() {
  int vocab = 8;
  double w = 0.22;
  TabularMarkovModel::Table table;
  table.emplace(TokenSeq{kBeginToken, kBeginToken}, Distribution::uniform(vocab));
  for (TokenId a = 0; a < vocab; ++a) {
    table.emplace(TokenSeq{kBeginToken, a},
                  spiked(vocab, {{(5 * a + 1) % 8, w}}));
    for (TokenId b = 0; b < vocab; ++b) {
      table.emplace(TokenSeq{a, b},
                    spiked(vocab, {{(3 * a + 5 * b + 1) % 8, w}}));
    }
  }
  return TabularMarkovModel(vocab, 2, 0.0, std::move(table));
}

TabularMarkovModel cycle_generator(int step) {
  int vocab = 4;
  TabularMarkovModel::Table table;
  table.emplace(TokenSeq{kBeginToken}, Distribution::uniform(vocab));
  for (TokenId a = 0; a < vocab; ++a) {
    table.emplace(TokenSeq{a}, spiked(vocab, {{(a + step) % 4, 0.85}}));
  }
  return TabularMarkovModel(vocab, 1, 0.0, std::move(table));
}

void write(const Corpus& corpus, const std::filesystem::path& path) {
  ssd::save_corpus(corpus, path);
  std::cout << "wrote " << path.string() << " (" << corpus.sequences.size()
            << " sequences, " << corpus.token_count() << " tokens)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regenerate the bundled scenario corpora"};
  std::string out_dir = "data";
  app.add_option("--out-dir", out_dir, "output directory (default data)");
  CLI11_PARSE(app, argc, argv);

  std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  write(sample_corpus(identical_generator(), 40, 60, 11), dir / "identical.corpus");
  write(sample_corpus(degraded_generator(), 60, 80, 13), dir / "degraded.corpus");
  write(sample_corpus(cycle_generator(1), 40, 50, 17),
        dir / "adversarial_target.corpus");
  write(sample_corpus(cycle_generator(3), 40, 50, 19),
        dir / "adversarial_draft.corpus");
  return 0;
}
