#pragma once

#include <filesystem>
#include <string>

#include "ssd/model.hpp"

namespace ssd {

// Corpus files: header line `vocab=<V>`, then one sequence per line as
// whitespace-separated decimal token ids. Blank lines are empty sequences.
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

// Model files: plain-text key-value dump (vocab, order, smoothing, one
// `context | probabilities` row per table entry). Probabilities are written
// in shortest round-trip form, so a reload reproduces the table bit for bit.
TabularMarkovModel load_model(const std::filesystem::path& path);
void save_model(const TabularMarkovModel& model, const std::filesystem::path& path);

// Shortest decimal form that parses back to the exact same double.
std::string format_double_exact(double value);

}  // namespace ssd
