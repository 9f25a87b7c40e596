#include "ssd/model_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace ssd {

namespace {

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line_no,
                             const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                           ": " + what);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string() + " for reading");
  }
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  return out;
}

long long parse_int(const std::string& text, const std::filesystem::path& path,
                    std::size_t line_no) {
  long long value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    parse_fail(path, line_no, "expected an integer, got '" + text + "'");
  }
  return value;
}

double parse_double(const std::string& text, const std::filesystem::path& path,
                    std::size_t line_no) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    parse_fail(path, line_no, "expected a number, got '" + text + "'");
  }
  return value;
}

std::string expect_kv(const std::string& line, const std::string& key,
                      const std::filesystem::path& path, std::size_t line_no) {
  const auto eq = line.find('=');
  if (eq == std::string::npos || line.substr(0, eq) != key) {
    parse_fail(path, line_no, "expected '" + key + "=<value>', got '" + line + "'");
  }
  return line.substr(eq + 1);
}

}  // namespace

std::string format_double_exact(double value) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, r.ptr);
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) {
    parse_fail(path, 1, "missing 'vocab=<V>' header");
  }
  ++line_no;
  const long long vocab = parse_int(expect_kv(line, "vocab", path, line_no), path, line_no);
  if (vocab <= 0) {
    parse_fail(path, line_no, "vocab must be positive");
  }

  Corpus corpus;
  corpus.vocab_size = static_cast<int>(vocab);
  while (std::getline(in, line)) {
    ++line_no;
    TokenSeq seq;
    std::istringstream fields(line);
    std::string field;
    while (fields >> field) {
      const long long t = parse_int(field, path, line_no);
      if (t < 0 || t >= vocab) {
        parse_fail(path, line_no, "token " + std::to_string(t) +
                                      " outside vocabulary of size " +
                                      std::to_string(vocab));
      }
      seq.push_back(static_cast<TokenId>(t));
    }
    corpus.sequences.push_back(std::move(seq));
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  corpus.validate();
  std::ofstream out = open_out(path);
  out << "vocab=" << corpus.vocab_size << "\n";
  for (const auto& seq : corpus.sequences) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (i) out << ' ';
      out << seq[i];
    }
    out << "\n";
  }
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

TabularMarkovModel load_model(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t line_no = 0;

  auto next_line = [&]() {
    if (!std::getline(in, line)) {
      parse_fail(path, line_no + 1, "unexpected end of file");
    }
    ++line_no;
  };

  next_line();
  if (line != "ssd-model v1") {
    parse_fail(path, line_no, "expected 'ssd-model v1' header");
  }
  next_line();
  const int vocab = static_cast<int>(
      parse_int(expect_kv(line, "vocab", path, line_no), path, line_no));
  next_line();
  const int order = static_cast<int>(
      parse_int(expect_kv(line, "order", path, line_no), path, line_no));
  next_line();
  const double smoothing =
      parse_double(expect_kv(line, "smoothing", path, line_no), path, line_no);
  next_line();
  const long long contexts =
      parse_int(expect_kv(line, "contexts", path, line_no), path, line_no);

  TabularMarkovModel::Table table;
  for (long long row = 0; row < contexts; ++row) {
    next_line();
    const auto bar = line.find('|');
    if (bar == std::string::npos) {
      parse_fail(path, line_no, "expected 'context | probabilities' row");
    }
    TokenSeq ctx;
    {
      std::istringstream fields(line.substr(0, bar));
      std::string field;
      while (fields >> field) {
        ctx.push_back(static_cast<TokenId>(parse_int(field, path, line_no)));
      }
    }
    std::vector<double> probs;
    probs.reserve(static_cast<std::size_t>(vocab));
    {
      std::istringstream fields(line.substr(bar + 1));
      std::string field;
      while (fields >> field) {
        probs.push_back(parse_double(field, path, line_no));
      }
    }
    if (static_cast<int>(probs.size()) != vocab) {
      parse_fail(path, line_no, "expected " + std::to_string(vocab) +
                                    " probabilities, got " +
                                    std::to_string(probs.size()));
    }
    if (!table.emplace(std::move(ctx), Distribution(std::move(probs))).second) {
      parse_fail(path, line_no, "duplicate context row");
    }
  }
  try {
    return TabularMarkovModel(vocab, order, smoothing, std::move(table));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void save_model(const TabularMarkovModel& model, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "ssd-model v1\n";
  out << "vocab=" << model.vocab_size() << "\n";
  out << "order=" << model.order() << "\n";
  out << "smoothing=" << format_double_exact(model.smoothing()) << "\n";
  out << "contexts=" << model.table().size() << "\n";
  for (const auto& [ctx, dist] : model.table()) {
    for (std::size_t i = 0; i < ctx.size(); ++i) {
      if (i) out << ' ';
      out << ctx[i];
    }
    out << (ctx.empty() ? "|" : " |");
    for (int t = 0; t < dist.vocab_size(); ++t) {
      out << ' ' << format_double_exact(dist[t]);
    }
    out << "\n";
  }
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

}  // namespace ssd
