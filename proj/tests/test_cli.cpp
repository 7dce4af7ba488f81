// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ordspec/cli.hpp"
#include "ordspec/corpus.hpp"

using namespace ordspec;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "ordspec_test_cli";

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  args.insert(args.begin(), "ordspec");
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path dir(const std::string& name) {
  const fs::path d = kRoot / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

/// Shared synthetic corpus written once per process.
const fs::path& synthetic() {
  static const fs::path p = [] {
    const fs::path d = dir("synth");
    const auto r = run({"synth", "--n", "1500", "--vocab", "300", "--seed", "4", "--out", d.string()});
    REQUIRE(r.code == 0);
    return d / "corpus.jsonl";
  }();
  return p;
}

const std::vector<std::string> kSmallModel = {"--embed-dim", "8", "--hidden", "8", "--epochs", "3"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("usage errors exit with status 1") {
  auto r = run({"train", "--corpus", "x.jsonl", "--no-such-flag"});
  CHECK(r.code == 1);
  CHECK(r.err.find("--no-such-flag") != std::string::npos);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"eval", "--corpus", (kRoot / "missing.jsonl").string(), "--predictions", "p.csv"}).code == 1);
  CHECK(run({"train", "--corpus", synthetic().string(), "--head", "nope", "--out", dir("badhead").string()}).code == 1);
  r = run({"--version"});
  CHECK(r.code == 0);
  CHECK(r.out.find(kVersion) != std::string::npos);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("the installed binary reports the same status") {
  const std::string cmd = std::string(ORDSPEC_CLI_PATH) + " eval --bogus > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 1);
}

TEST_CASE("eval on perfect predictions reports zero error") {
  const fs::path d = dir("perfect");
  const Corpus c = load_corpus(synthetic());
  {
    std::ofstream p(d / "pred.csv");
    p << "id,value\n";
    for (const auto& s : c.sentences()) p << s.id << ',' << *s.label << '\n';
  }
  const auto r = run({"eval", "--corpus", synthetic().string(), "--predictions", (d / "pred.csv").string(), "--out",
                      (d / "out").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("mmae 0.0000") != std::string::npos);
  const std::string csv = slurp(d / "out" / "eval.csv");
  CHECK(csv.find(",0.000000,1.000000,") != std::string::npos);
  CHECK(fs::exists(d / "out" / "manifest.json"));

  // Both sources at once, or neither, is a usage error.
  CHECK(run({"eval", "--corpus", synthetic().string(), "--out", (d / "x").string()}).code == 1);
  std::ofstream(d / "short.csv") << "s0,1\n";
  CHECK(run({"eval", "--corpus", synthetic().string(), "--predictions", (d / "short.csv").string(), "--out",
             (d / "y").string()})
            .code == 1);
}

TEST_CASE("train then eval beats the majority bound") {
  const fs::path d = dir("train");
  auto r = run(with({"train", "--corpus", synthetic().string(), "--head", "gauss", "--out", (d / "m").string()},
                    kSmallModel));
  REQUIRE(r.code == 0);
  CHECK(fs::exists(d / "m" / "model.ospc"));
  CHECK(slurp(d / "m" / "training_log.csv").rfind("epoch,train_loss", 0) == 0);
  r = run({"eval", "--corpus", synthetic().string(), "--model", (d / "m" / "model.ospc").string(), "--out",
           (d / "e").string()});
  REQUIRE(r.code == 0);
  std::istringstream rows(slurp(d / "e" / "eval.csv"));
  std::string header, row;
  std::getline(rows, header);
  std::getline(rows, row);
  const auto first = row.find(','), second = row.find(',', first + 1);
  const double mmae = std::stod(row.substr(second + 1));
  CHECK(mmae < 3.0);

  r = run({"predict", "--corpus", synthetic().string(), "--model", (d / "m" / "model.ospc").string(), "--out",
           (d / "p").string()});
  REQUIRE(r.code == 0);
  const std::string preds = slurp(d / "p" / "predictions.csv");
  CHECK(preds.rfind("id,value,q_1,q_2,q_3,q_4,q_5,q_6,q_7\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(preds.begin(), preds.end(), '\n')) == 1501);
}

TEST_CASE("equal seeds give byte-identical artefacts and manifests") {
  const fs::path d = dir("repeat");
  std::string first_manifest, first_eval, first_log;
  for (int i = 0; i < 2; ++i) {
    const auto r = run(with({"train", "--corpus", synthetic().string(), "--head", "binomial", "--seed", "9", "--out",
                             (d / "run").string()},
                            kSmallModel));
    REQUIRE(r.code == 0);
    const std::string m = slurp(d / "run" / "manifest.json"), e = slurp(d / "run" / "eval.csv"),
                      l = slurp(d / "run" / "training_log.csv");
    if (i == 0) {
      first_manifest = m, first_eval = e, first_log = l;
    } else {
      CHECK(m == first_manifest);
      CHECK(e == first_eval);
      CHECK(l == first_log);
    }
  }
  const auto manifest = nlohmann::json::parse(first_manifest);
  CHECK(manifest.at("command") == "train");
  CHECK(manifest.at("seed") == 9);
  CHECK(manifest.at("options").at("epochs") == "3");
  CHECK(manifest.at("options").at("patience") == "5");  // defaults are recorded too
  CHECK(manifest.at("options").at("tune-embeddings") == false);
  CHECK_FALSE(manifest.at("options").contains("help"));
  CHECK(manifest.at("inputs").contains(synthetic().string()));
  CHECK(manifest.at("libraries").contains("eigen"));

  const auto other = run(with({"train", "--corpus", synthetic().string(), "--head", "binomial", "--seed", "10",
                               "--out", (d / "other").string()},
                              kSmallModel));
  REQUIRE(other.code == 0);
  CHECK(slurp(d / "other" / "training_log.csv") != first_log);
}

TEST_CASE("ingest and synth") {
  const fs::path d = dir("ingest");
  auto r = run({"ingest", "--corpus", synthetic().string(), "--train-frac", "0.75", "--split-mode", "document",
                "--out", d.string()});
  REQUIRE(r.code == 0);
  const Corpus tr = load_corpus(d / "train.jsonl"), te = load_corpus(d / "test.jsonl");
  CHECK(tr.size() + te.size() == 1500);
  CHECK(slurp(d / "histogram.csv").rfind("class,count", 0) == 0);

  r = run({"synth", "--n", "50", "--strip-labels", "--out", (d / "u").string()});
  REQUIRE(r.code == 0);
  for (const auto& s : load_corpus(d / "u" / "corpus.jsonl").sentences()) CHECK_FALSE(s.label.has_value());
}

TEST_CASE("ssl-train runs") {
  const fs::path d = dir("ssl");
  REQUIRE(run({"synth", "--n", "400", "--vocab", "300", "--seed", "8", "--strip-labels", "--out", (d / "u").string()})
              .code == 0);
  const auto r = run(with({"ssl-train", "--corpus", synthetic().string(), "--unlabeled",
                           (d / "u" / "corpus.jsonl").string(), "--ssl", "kld", "--out", (d / "m").string()},
                          kSmallModel));
  REQUIRE(r.code == 0);
  CHECK(fs::exists(d / "m" / "model.ospc"));
}

TEST_CASE("psl-infer writes the MAP assignment") {
  const fs::path d = dir("psl");
  std::ofstream(d / "p.psl") << "predicate A/1 observed\npredicate Y/1 target\nA(x) = 0.8\n"
                                "rule 1 ^2 : A(X) -> Y(X)\nrule 1 ^2 : A(X) & Y(X) -> !A(X)\n";
  const auto r = run({"psl-infer", "--program", (d / "p.psl").string(), "--out", (d / "o").string()});
  REQUIRE(r.code == 0);
  const std::string map = slurp(d / "o" / "map.csv");
  REQUIRE(map.rfind("atom,value\nY(x),", 0) == 0);
  // (0.8 - y)^2 + (y - 0.4)^2 is smallest at y = 0.6
  CHECK(std::abs(std::stod(map.substr(map.find("Y(x),") + 5)) - 0.6) < 1e-3);
  const auto manifest = nlohmann::json::parse(slurp(d / "o" / "manifest.json"));
  CHECK(manifest.at("converged") == true);

  std::ofstream(d / "bad.psl") << "predicate A/1 observed\nrule oops\n";
  const auto bad = run({"psl-infer", "--program", (d / "bad.psl").string(), "--out", (d / "b").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("line 2") != std::string::npos);
}

TEST_CASE("salience and ideology on the bundled fixture") {
  const fs::path fixtures = fs::path(ORDSPEC_FIXTURE_DIR) / "politics";
  const fs::path d = dir("pol");
  auto r = run({"salience", "--fixtures", fixtures.string(), "--out", (d / "s").string()});
  REQUIRE(r.code == 0);
  CHECK(slurp(d / "s" / "salience.csv").rfind("area,", 0) == 0);

  r = run({"ideology", "--fixtures", fixtures.string(), "--out", (d / "i").string()});
  REQUIRE(r.code == 0);
  const std::string gold = slurp(d / "i" / "gold_rho.csv");
  CHECK(gold.rfind("variant,rho\n", 0) == 0);
  CHECK(gold.find("I+II+III+IV,") != std::string::npos);
  CHECK(slurp(d / "i" / "positions.csv").rfind("manifesto,party,year,bootstrap,pca,I+II,I+II+III,I+II+III+IV\n", 0) ==
        0);
}

TEST_CASE("report draws the ratio curves") {
  const fs::path d = dir("report");
  const auto r = run(with({"report", "--n", "1200", "--vocab", "300", "--ratios", "20,60", "--unlabeled-factor", "1",
                           "--out", d.string()},
                          {"--embed-dim", "8", "--hidden", "8", "--epochs", "2"}));
  REQUIRE(r.code == 0);
  const std::string csv = slurp(d / "report.csv");
  CHECK(csv.rfind("ratio,method,labeled,unlabeled,mmae,rho\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  for (const char* svg : {"report_mmae.svg", "report_rho.svg"}) {
    const std::string s = slurp(d / svg);
    CHECK(s.find("<svg") != std::string::npos);
    CHECK(s.find("</svg>") != std::string::npos);
  }
}
