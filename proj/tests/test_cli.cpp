#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ssd/model.hpp"
#include "ssd/model_io.hpp"

using namespace ssd;

namespace {

struct RunResult {
  int status = -1;
  std::string out;
  std::string err;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string temp_path(const std::string& tag) {
  static int counter = 0;
  return "/tmp/ssd_cli_" + std::to_string(getpid()) + "_" + tag + "_" +
         std::to_string(counter++);
}

RunResult run_cli(const std::string& args) {
  std::string out_path = temp_path("stdout");
  std::string err_path = temp_path("stderr");
  std::string cmd = std::string(SSD_CLI_PATH) + " " + args + " >" + out_path +
                    " 2>" + err_path;
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  std::remove(out_path.c_str());
  std::remove(err_path.c_str());
  return r;
}

std::string config_path(const std::string& name) {
  return std::string(SSD_CONFIG_DIR) + "/" + name;
}

// Value of a "key=number" report line printed by `decode`.
double report_value(const std::string& text, const std::string& key) {
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind(key + "=", 0) == 0) {
      return std::stod(line.substr(key.size() + 1));
    }
  }
  FAIL("report line not found: ", key);
  return 0.0;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream lines(csv);
  std::string line;
  while (std::getline(lines, line)) {
    std::vector<std::string> fields;
    std::istringstream fs(line);
    std::string field;
    while (std::getline(fs, field, ',')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace

TEST_CASE("fit subcommand") {
  std::string corpus = temp_path("corpus");
  write_file(corpus, "vocab=2\n0 1 0 1\n");
  std::string model_a = temp_path("model");
  std::string model_b = temp_path("model");

  RunResult r = run_cli("fit --corpus " + corpus + " --order 1 --out " +
                        model_a);
  CHECK(r.status == 0);
  CHECK(r.out.find("fitted vocab=2 order=1") != std::string::npos);
  CHECK(r.out.find("cross_entropy=") != std::string::npos);
  CHECK(r.out.find("wrote " + model_a) != std::string::npos);

  TabularMarkovModel model = load_model(model_a);
  CHECK(model.next_distribution(TokenSeq{0}).probs() ==
        std::vector<double>{0.0, 1.0});
  CHECK(model.next_distribution(TokenSeq{1}).probs() ==
        std::vector<double>{1.0, 0.0});

  SUBCASE("refitting is byte-identical") {
    RunResult again = run_cli("fit --corpus " + corpus +
                              " --order 1 --out " + model_b);
    CHECK(again.status == 0);
    CHECK(read_file(model_a) == read_file(model_b));
    std::remove(model_b.c_str());
  }
  SUBCASE("missing corpus file fails with usage error") {
    RunResult bad = run_cli("fit --corpus /nonexistent.corpus --out " +
                            model_b);
    CHECK(bad.status == 2);
    CHECK(bad.err.find("error:") != std::string::npos);
  }
  std::remove(corpus.c_str());
  std::remove(model_a.c_str());
}

TEST_CASE("derive-draft subcommand") {
  std::string target_model = temp_path("target");
  std::string draft_model = temp_path("draft");
  std::string corpus = std::string(SSD_DATA_DIR) + "/degraded.corpus";

  RunResult fit = run_cli("fit --corpus " + corpus + " --order 2 --out " +
                          target_model);
  REQUIRE(fit.status == 0);
  RunResult derive = run_cli("derive-draft --model " + target_model +
                             " --reference " + corpus + " --order 0 --out " +
                             draft_model);
  CHECK(derive.status == 0);
  CHECK(derive.out.find("derived vocab=8 order=0") != std::string::npos);

  TabularMarkovModel draft = load_model(draft_model);
  CHECK(draft.vocab_size() == 8);
  CHECK(draft.order() == 0);

  SUBCASE("raising the order is rejected") {
    RunResult bad = run_cli("derive-draft --model " + draft_model +
                            " --reference " + corpus + " --order 2 --out " +
                            draft_model + ".x");
    CHECK(bad.status == 2);
    CHECK(bad.err.find("error:") != std::string::npos);
  }
  std::remove(target_model.c_str());
  std::remove(draft_model.c_str());
}

TEST_CASE("decode subcommand") {
  std::string cfg = config_path("identical.cfg");

  SUBCASE("best-case run hits full acceptance and the closed-form speedup") {
    RunResult r = run_cli("decode --config " + cfg);
    CHECK(r.status == 0);
    CHECK(r.out.rfind("tokens: ", 0) == 0);
    CHECK(r.out.find("acceptance_rate=1.0\n") != std::string::npos);
    CHECK(r.out.find("speedup_vs_ar=2.0\n") != std::string::npos);
    CHECK(r.out.find("cycles=24\n") != std::string::npos);
  }
  SUBCASE("byte-identical across runs, and --out mirrors stdout") {
    std::string out_file = temp_path("report");
    RunResult a = run_cli("decode --config " + cfg + " --out " + out_file);
    RunResult b = run_cli("decode --config " + cfg + " --out " + out_file);
    CHECK(a.status == 0);
    CHECK(a.out == b.out);
    CHECK(read_file(out_file) == a.out);
    std::remove(out_file.c_str());
  }
  SUBCASE("seed override changes the sampled tokens") {
    RunResult a = run_cli("decode --config " + cfg + " --seed 101");
    RunResult b = run_cli("decode --config " + cfg + " --seed 102");
    CHECK(a.status == 0);
    CHECK(b.status == 0);
    CHECK(a.out != b.out);
  }
  SUBCASE("invalid overrides exit with usage errors") {
    CHECK(run_cli("decode --config " + cfg + " --beta 1.5").status == 2);
    CHECK(run_cli("decode --config " + cfg + " --target-len 0").status == 2);
    CHECK(run_cli("decode --config /missing.cfg").status == 2);
  }
}

TEST_CASE("tolerance cuts verification passes on the degraded scenario") {
  std::string cfg = config_path("degraded_draft.cfg");
  long long calls_strict = 0, calls_relaxed = 0;
  for (int seed = 1; seed <= 25; ++seed) {
    RunResult strict =
        run_cli("decode --config " + cfg + " --seed " + std::to_string(seed));
    RunResult relaxed = run_cli("decode --config " + cfg + " --seed " +
                                std::to_string(seed) + " --beta 0.4");
    REQUIRE(strict.status == 0);
    REQUIRE(relaxed.status == 0);
    calls_strict +=
        static_cast<long long>(report_value(strict.out, "target_calls"));
    calls_relaxed +=
        static_cast<long long>(report_value(relaxed.out, "target_calls"));
  }
  CHECK(calls_relaxed < calls_strict);
}

TEST_CASE("verify subcommand") {
  RunResult quick = run_cli("verify --level quick");
  CHECK(quick.status == 0);
  CHECK(quick.out.find("[PASS] beta0-losslessness") != std::string::npos);
  CHECK(quick.out.find("verify quick: 5/5 properties passed") !=
        std::string::npos);
  CHECK(quick.out.find("[FAIL]") == std::string::npos);

  RunResult full = run_cli("verify --level full --seed 3");
  CHECK(full.status == 0);
  CHECK(full.out.find("pairs=60") != std::string::npos);
  CHECK(full.out.find("mc-chi-square") != std::string::npos);
  CHECK(full.out.find("verify full: 6/6 properties passed") !=
        std::string::npos);

  CHECK(run_cli("verify --level bogus").status == 2);
}

TEST_CASE("sweep subcommand") {
  std::string cfg = config_path("degraded_draft.cfg");

  SUBCASE("beta sweep: CSV on stdout and disk, rtf non-increasing") {
    std::string csv_a = temp_path("csv");
    std::string csv_b = temp_path("csv");
    RunResult a = run_cli("sweep --config " + cfg +
                          " --kind beta --trials 60 --out " + csv_a);
    CHECK(a.status == 0);
    CHECK(read_file(csv_a) == a.out);

    auto rows = csv_rows(a.out);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0][0] == "beta");
    CHECK(rows[0][8] == "rtf_analog");
    for (std::size_t i = 2; i < rows.size(); ++i) {
      CHECK(std::stod(rows[i][8]) <= std::stod(rows[i - 1][8]));
    }

    RunResult b = run_cli("sweep --config " + cfg +
                          " --kind beta --trials 60 --out " + csv_b);
    CHECK(read_file(csv_b) == read_file(csv_a));
    std::remove(csv_a.c_str());
    std::remove(csv_b.c_str());
  }
  SUBCASE("draft_len sweep has an interior speedup maximum") {
    std::string csv = temp_path("csv");
    RunResult r = run_cli("sweep --config " + cfg +
                          " --kind draft_len --trials 100 --out " + csv);
    CHECK(r.status == 0);
    auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 9);
    std::size_t best = 1;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (std::stod(rows[i][9]) > std::stod(rows[best][9])) best = i;
    }
    CHECK(best > 1);
    CHECK(best < rows.size() - 1);
    std::remove(csv.c_str());
  }
  SUBCASE("usage errors") {
    CHECK(run_cli("sweep --config " + cfg + " --kind beta").status == 2);
    std::string csv = temp_path("csv");
    CHECK(run_cli("sweep --config " + cfg + " --kind bogus --out " + csv)
              .status == 2);

    std::string bad_cfg = temp_path("cfg");
    write_file(bad_cfg, "bogus_key = 1\n");
    RunResult bad = run_cli("sweep --config " + bad_cfg +
                            " --kind beta --out " + csv);
    CHECK(bad.status == 2);
    CHECK(bad.err.find(":1:") != std::string::npos);
    std::remove(bad_cfg.c_str());
  }
}

TEST_CASE("top-level exit codes") {
  CHECK(run_cli("--help").status == 0);
  CHECK(run_cli("").status == 2);
  CHECK(run_cli("frobnicate").status == 2);
}
