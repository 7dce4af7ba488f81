// SPDX-License-Identifier: Apache-2.0
#include "ordspec/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ordspec/corpus.hpp"
#include "ordspec/crossview.hpp"
#include "ordspec/errors.hpp"
#include "ordspec/metrics.hpp"
#include "ordspec/model.hpp"
#include "ordspec/polanalysis.hpp"
#include "ordspec/polfixture.hpp"
#include "ordspec/pslgrid.hpp"
#include "ordspec/svg.hpp"
#include "ordspec/trainer.hpp"

namespace ordspec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TrainFlags {
  std::string head = "gauss";
  std::string alpha = "0.5";
  double sigma = 1.0;
  std::string bins = "literal";
  int context = 0;
  std::string encoder = "bigru";
  int embed_dim = 50;
  int hidden = 64;
  double encoder_dropout = 0.0;
  int epochs = 30;
  int batch = 32;
  double lr = 1e-3;
  int patience = 5;
  double val_frac = 0.1;
  std::string embeddings;
  bool tune_embeddings = false;
};

struct Flags {
  std::uint64_t seed = 0;
  std::string out = "out";
  std::string corpus;
  std::string unlabeled;
  std::string model;
  std::string predictions;
  std::string program;
  std::string fixtures;
  TrainFlags train;
  // synth / ingest
  std::size_t n = 10000;
  std::size_t vocab = 2000;
  bool strip = false;
  double train_frac = 0.8;
  std::string split_mode = "sentence";
  // ssl
  std::string ssl = "emd";
  double beta = 1.0;
  double dropout = 0.25;
  int interleave = 1;
  bool separate_teacher = false;
  // report
  std::vector<int> ratios = {10, 30, 50, 70, 90};
  double unlabeled_factor = 5.0;
  // psl
  double tol = 1e-6;
  std::size_t max_iters = 50000;
  int exponent = 1;
  double ridge = 0.0;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--head", f.head, "binomial|poisson|gauss|categorical|reg|reg-l1|class")->capture_default_str();
  cmd->add_option("--alpha", f.alpha, "squared-error weight, or 'auto' to tune")->capture_default_str();
  cmd->add_option("--sigma", f.sigma, "gaussian target width")->capture_default_str();
  cmd->add_option("--bins", f.bins, "literal|centered")->capture_default_str();
  cmd->add_option("--context", f.context, "preceding sentences fed to the head")->capture_default_str();
  cmd->add_option("--encoder", f.encoder, "bigru|bow")->capture_default_str();
  cmd->add_option("--embed-dim", f.embed_dim)->capture_default_str();
  cmd->add_option("--hidden", f.hidden)->capture_default_str();
  cmd->add_option("--encoder-dropout", f.encoder_dropout)->capture_default_str();
  cmd->add_option("--epochs", f.epochs)->capture_default_str();
  cmd->add_option("--batch", f.batch)->capture_default_str();
  cmd->add_option("--lr", f.lr)->capture_default_str();
  cmd->add_option("--patience", f.patience)->capture_default_str();
  cmd->add_option("--val-frac", f.val_frac, "share of labelled data held out for early stopping")
      ->capture_default_str();
  cmd->add_option("--embeddings", f.embeddings, "pretrained vectors (token v1 ... vd)");
  cmd->add_flag("--tune-embeddings", f.tune_embeddings);
}

TrainConfig make_train_config(const TrainFlags& f, std::uint64_t seed) {
  TrainConfig c;
  c.head.kind = parse_head_kind(f.head);
  if (f.alpha != "auto") {
    try {
      c.head.alpha = std::stod(f.alpha);
    } catch (const std::exception&) {
      throw InvalidArgument("--alpha must be a number or 'auto'");
    }
  }
  c.head.sigma = f.sigma;
  c.head.bins = parse_bin_mode(f.bins);
  c.encoder.kind = parse_encoder_kind(f.encoder);
  c.encoder.embed_dim = f.embed_dim;
  c.encoder.hidden = f.hidden;
  c.encoder.dropout = f.encoder_dropout;
  c.encoder.tune_pretrained = f.tune_embeddings;
  c.epochs = f.epochs;
  c.batch_size = f.batch;
  c.lr = f.lr;
  c.patience = f.patience;
  c.context_L = std::max(f.context, 1);
  c.seed = seed;
  if (f.context < 0) throw InvalidArgument("--context must be >= 0");
  if (!(f.val_frac > 0.0 && f.val_frac < 1.0)) throw InvalidArgument("--val-frac must be in (0,1)");
  c.validate();
  return c;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write " + path.string());
  out << text;
}

std::string fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

/// Resolved option values of one subcommand, defaults included.
json resolved_options(const CLI::App* cmd) {
  json opts = json::object();
  for (const CLI::Option* opt : cmd->get_options()) {
    const std::string name = opt->get_name(false, true);
    if (name.empty() || opt == cmd->get_help_ptr()) continue;
    std::string key = opt->get_lnames().empty() ? name : opt->get_lnames().front();
    if (opt->get_expected_max() == 0) {
      opts[key] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& res = opt->results();
      opts[key] = res.size() == 1 ? json(res.front()) : json(res);
    } else {
      opts[key] = opt->get_default_str();
    }
  }
  return opts;
}

class Run {
 public:
  Run(const std::string& command, const CLI::App* cmd, const std::vector<std::string>& args,
      const Flags& flags)
      : dir_(flags.out) {
    fs::create_directories(dir_);
    manifest_["tool"] = "ordspec";
    manifest_["version"] = kVersion;
    manifest_["command"] = command;
    manifest_["args"] = std::vector<std::string>(args.begin() + 1, args.end());
    manifest_["seed"] = flags.seed;
    manifest_["options"] = resolved_options(cmd);
    manifest_["libraries"] = {
        {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
        {"fmt", FMT_VERSION},
        {"spdlog", fmt::format("{}.{}.{}", SPDLOG_VER_MAJOR, SPDLOG_VER_MINOR, SPDLOG_VER_PATCH)},
        {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                      NLOHMANN_JSON_VERSION_PATCH)},
        {"cli11", CLI11_VERSION}};
    manifest_["inputs"] = json::object();
    manifest_["outputs"] = json::array();
  }

  /// Records the content hash of an input file.
  void input(const std::string& path) {
    if (path.empty()) return;
    if (fs::is_directory(path)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(path))
        if (e.is_regular_file()) files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) manifest_["inputs"][f.string()] = fnv1a(read_file(f));
    } else {
      manifest_["inputs"][path] = fnv1a(read_file(path));
    }
  }

  fs::path path(const std::string& name) {
    manifest_["outputs"].push_back(name);
    return dir_ / name;
  }

  void write(const std::string& name, const std::string& text) { write_file(path(name), text); }

  void set(const std::string& key, json value) { manifest_[key] = std::move(value); }

  void finish() { write_file(dir_ / "manifest.json", manifest_.dump(2) + "\n"); }

 private:
  fs::path dir_;
  json manifest_;
};

std::string eval_csv(const std::vector<EvalRow>& rows) {
  std::ostringstream ss;
  write_eval_csv(ss, rows);
  return ss.str();
}

std::string fmt_rho(double rho) { return std::isfinite(rho) ? fmt::format("{:.4f}", rho) : "undefined"; }

struct Pipeline {
  const Flags& f;
  Run& run;
  std::ostream& out;
};

Corpus load_labeled(const std::string& path) {
  if (path.empty()) throw InvalidArgument("--corpus is required");
  Corpus c = labeled_only(load_corpus(path));
  if (c.size() < 2) throw InvalidArgument("need at least two labelled sentences");
  return c;
}

std::unique_ptr<EmbeddingTable> load_optional_embeddings(const std::string& path) {
  if (path.empty()) return nullptr;
  std::vector<std::string> warnings;
  return std::make_unique<EmbeddingTable>(load_embeddings(path, &warnings));
}

void finish_training(Pipeline& p, const TrainedModel& tm, const Corpus& val, const std::string& label,
                     const Corpus* context_source = nullptr) {
  save_model(tm, p.run.path("model.ospc"));
  std::ostringstream log;
  write_training_log(log, tm.curve);
  p.run.write("training_log.csv", log.str());
  const Evaluation ev = evaluate(tm, val, context_source);
  const auto row = make_eval_row(label, "val", ev.values, gold_labels(val));
  p.run.write("eval.csv", eval_csv({row}));
  p.run.set("epochs_run", tm.epochs_run);
  p.run.set("best_epoch", tm.best_epoch);
  p.out << fmt::format("{} val mmae {:.4f} rho {} (best epoch {} of {})\n", label, row.mmae, fmt_rho(row.rho),
                       tm.best_epoch, tm.epochs_run);
}

int cmd_ingest(Pipeline& p) {
  if (p.f.corpus.empty()) throw InvalidArgument("--corpus is required");
  p.run.input(p.f.corpus);
  const Corpus corpus = load_corpus(p.f.corpus);
  const auto mode = p.f.split_mode == "document"   ? SplitMode::document
                    : p.f.split_mode == "sentence" ? SplitMode::sentence
                                                   : throw InvalidArgument("--split-mode must be sentence or document");
  const Split parts = split(corpus, p.f.train_frac, p.f.seed, mode);
  write_corpus(parts.train, p.run.path("train.jsonl"));
  write_corpus(parts.test, p.run.path("test.jsonl"));
  const auto h = class_histogram(corpus);
  std::string csv = "class,count,fraction\n";
  for (int k = 0; k < kNumClasses; ++k)
    csv += fmt::format("{},{},{:.6f}\n", k + 1, h.counts[static_cast<std::size_t>(k)],
                       h.fractions[static_cast<std::size_t>(k)]);
  p.run.write("histogram.csv", csv);
  p.out << fmt::format("{} sentences ({} labelled, {} documents): train {}, test {}\n", corpus.size(),
                       corpus.labeled_count(), corpus.documents().size(), parts.train.size(), parts.test.size());
  return 0;
}

int cmd_synth(Pipeline& p) {
  if (p.f.n == 0) throw InvalidArgument("--n must be positive");
  Corpus c = synth_corpus(p.f.seed, p.f.n, kDefaultClassProbs, p.f.vocab);
  if (p.f.strip) c = strip_labels(c);
  write_corpus(c, p.run.path("corpus.jsonl"));
  p.out << fmt::format("wrote {} sentences in {} documents\n", c.size(), c.documents().size());
  return 0;
}

int cmd_train(Pipeline& p) {
  p.run.input(p.f.corpus);
  p.run.input(p.f.train.embeddings);
  const Corpus data = load_labeled(p.f.corpus);
  TrainConfig cfg = make_train_config(p.f.train, p.f.seed);
  const auto emb = load_optional_embeddings(p.f.train.embeddings);
  TrainResources res;
  res.embeddings = emb.get();
  const Split parts = split(data, 1.0 - p.f.train.val_frac, p.f.seed);
  if (p.f.train.alpha == "auto") {
    cfg.head.alpha = tune_alpha(parts.train, parts.test, cfg, {0.1, 0.5, 1.0, 2.0}, res);
    p.out << fmt::format("tuned alpha {}\n", cfg.head.alpha);
  }
  p.run.set("alpha", cfg.head.alpha);
  if (p.f.train.context == 0) {
    finish_training(p, train(parts.train, parts.test, cfg, res), parts.test, to_string(cfg.head.kind));
    return 0;
  }
  auto base = std::make_shared<const TrainedModel>(train(parts.train, parts.test, cfg, res));
  cfg.context_L = p.f.train.context;
  const Corpus source = concat(parts.train, parts.test);
  const TrainedModel tm = train_with_context(parts.train, parts.test, base, cfg, &source, res);
  finish_training(p, tm, parts.test, to_string(cfg.head.kind) + "+context", &source);
  return 0;
}

int cmd_ssl_train(Pipeline& p) {
  p.run.input(p.f.corpus);
  p.run.input(p.f.unlabeled);
  p.run.input(p.f.train.embeddings);
  if (p.f.unlabeled.empty()) throw InvalidArgument("--unlabeled is required");
  const Corpus data = load_labeled(p.f.corpus);
  const Corpus unlabeled = strip_labels(load_corpus(p.f.unlabeled));
  TrainConfig cfg = make_train_config(p.f.train, p.f.seed);
  if (p.f.train.alpha == "auto") throw InvalidArgument("--alpha auto is only supported by train");
  if (p.f.train.context != 0) throw InvalidArgument("ssl-train does not take --context");
  SslConfig ssl;
  ssl.kind = parse_consensus_kind(p.f.ssl);
  ssl.beta = p.f.beta;
  ssl.word_dropout = p.f.dropout;
  ssl.interleave = p.f.interleave;
  ssl.shared = !p.f.separate_teacher;
  ssl.validate();
  const auto emb = load_optional_embeddings(p.f.train.embeddings);
  TrainResources res;
  res.embeddings = emb.get();
  const Split parts = split(data, 1.0 - p.f.train.val_frac, p.f.seed);
  const TrainedModel tm = ssl_train(parts.train, unlabeled, parts.test, cfg, ssl, res);
  finish_training(p, tm, parts.test, fmt::format("{}+{}", to_string(cfg.head.kind), to_string(ssl.kind)));
  return 0;
}

std::map<std::string, double> read_predictions(const std::string& path) {
  std::istringstream in(read_file(path));
  std::map<std::string, double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line_no == 1 && line.rfind("id,", 0) == 0)) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("expected id,value", line_no);
    const std::string id = line.substr(0, comma);
    std::string rest = line.substr(comma + 1);
    if (auto c2 = rest.find(','); c2 != std::string::npos) rest.resize(c2);
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(rest, &used);
      if (used != rest.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError("bad prediction value '" + rest + "'", line_no);
    }
    if (!std::isfinite(v)) throw ParseError("non-finite prediction", line_no);
    if (!out.emplace(id, v).second) throw IntegrityError("duplicate prediction for " + id, line_no);
  }
  return out;
}

int cmd_eval(Pipeline& p) {
  if (p.f.corpus.empty()) throw InvalidArgument("--corpus is required");
  if (p.f.model.empty() == p.f.predictions.empty())
    throw InvalidArgument("give exactly one of --model and --predictions");
  p.run.input(p.f.corpus);
  p.run.input(p.f.model);
  p.run.input(p.f.predictions);
  const Corpus corpus = load_corpus(p.f.corpus);
  std::vector<double> preds;
  std::vector<int> golds;
  std::string label;
  if (!p.f.model.empty()) {
    const TrainedModel tm = load_model(p.f.model);
    const auto all = predict_corpus(tm, corpus);
    for (std::size_t i = 0; i < corpus.size(); ++i)
      if (corpus[i].label) {
        preds.push_back(all[i].value);
        golds.push_back(*corpus[i].label);
      }
    label = to_string(tm.config().head.kind) + (tm.config().context_L > 0 ? "+context" : "");
  } else {
    const auto table = read_predictions(p.f.predictions);
    for (const auto& s : corpus.sentences()) {
      if (!s.label) continue;
      auto it = table.find(s.id);
      if (it == table.end()) throw IntegrityError("no prediction for sentence " + s.id);
      preds.push_back(it->second);
      golds.push_back(*s.label);
    }
    label = "predictions";
  }
  if (golds.empty()) throw InvalidArgument("corpus has no labelled sentences");
  const auto row = make_eval_row(label, "eval", preds, golds);
  p.run.write("eval.csv", eval_csv({row}));
  p.out << fmt::format("{}: n {} mmae {:.4f} rho {}\n", label, golds.size(), row.mmae, fmt_rho(row.rho));
  return 0;
}

int cmd_predict(Pipeline& p) {
  if (p.f.corpus.empty() || p.f.model.empty()) throw InvalidArgument("--corpus and --model are required");
  p.run.input(p.f.corpus);
  p.run.input(p.f.model);
  const Corpus corpus = load_corpus(p.f.corpus);
  const TrainedModel tm = load_model(p.f.model);
  const auto preds = predict_corpus(tm, corpus);
  const int K = tm.config().head.K;
  std::string csv = "id,value";
  for (int k = 1; k <= K; ++k) csv += fmt::format(",q_{}", k);
  csv += '\n';
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    csv += fmt::format("{},{:.6f}", corpus[i].id, preds[i].value);
    for (int k = 0; k < K; ++k)
      csv += preds[i].q ? fmt::format(",{:.6f}", (*preds[i].q)(k)) : std::string(",");
    csv += '\n';
  }
  p.run.write("predictions.csv", csv);
  p.out << fmt::format("predicted {} sentences\n", corpus.size());
  return 0;
}

int cmd_psl_infer(Pipeline& p) {
  if (p.f.program.empty()) throw InvalidArgument("--program is required");
  p.run.input(p.f.program);
  const psl::Program program = psl::parse_program(read_file(p.f.program));
  const psl::Instance inst = psl::ground(program);
  psl::MapOptions opt;
  opt.tol = p.f.tol;
  opt.max_iters = p.f.max_iters;
  const psl::MapResult r = psl::map_infer(inst, opt);
  std::string csv = "atom,value\n";
  for (std::size_t i = 0; i < inst.variables.size(); ++i) csv += fmt::format("{},{:.6f}\n", inst.variables[i], r.y[i]);
  p.run.write("map.csv", csv);
  p.run.set("energy", fmt::format("{:.9g}", r.energy));
  p.run.set("iterations", r.iterations);
  p.run.set("converged", r.converged);
  p.out << fmt::format("{} variables, {} ground rules, energy {:.6f}, {} iterations{}\n", inst.variables.size(),
                       inst.rules.size(), r.energy, r.iterations, r.converged ? "" : " (not converged)");
  return 0;
}

pol::PoliticsFixture load_fixture(Pipeline& p) {
  if (p.f.fixtures.empty()) throw InvalidArgument("--fixtures is required");
  p.run.input(p.f.fixtures);
  return pol::load_politics_fixture(p.f.fixtures);
}

std::vector<pol::ManifestoProfile> fixture_profiles(Pipeline& p, const pol::PoliticsFixture& fx) {
  if (p.f.model.empty()) return pol::build_profiles(fx.manifestos, fx.map);
  p.run.input(p.f.model);
  const TrainedModel tm = load_model(p.f.model);
  std::vector<double> scores;
  for (const auto& pr : predict_corpus(tm, fx.manifestos)) scores.push_back(pr.value);
  return pol::build_profiles(fx.manifestos, fx.map, &scores);
}

int cmd_ideology(Pipeline& p) {
  const auto fx = load_fixture(p);
  const auto profiles = fixture_profiles(p, fx);
  pol::IdeologyOptions opt;
  opt.weights.exponent = p.f.exponent;
  opt.solver.tol = p.f.tol;
  opt.solver.max_iters = p.f.max_iters;
  const auto result = pol::run_ideology(profiles, fx.map, fx.coalitions, opt);
  p.run.write("positions.csv", pol::ideology_csv(result));
  if (!fx.gold.empty()) {
    const auto scores = pol::score_against_gold(result, fx.gold);
    std::string csv = "variant,rho\n";
    for (const auto& v : pol::kPositionVariants) {
      auto it = scores.find(v);
      if (it == scores.end()) continue;
      csv += fmt::format("{},{:.6f}\n", v, it->second);
      p.out << fmt::format("{:<12} rho {:.4f}\n", v, it->second);
    }
    p.run.write("gold_rho.csv", csv);
  }
  for (const auto& [v, ok] : result.converged)
    if (!ok) p.out << fmt::format("warning: {} solver did not converge\n", v);
  return 0;
}

int cmd_salience(Pipeline& p) {
  const auto fx = load_fixture(p);
  const auto profiles = fixture_profiles(p, fx);
  const auto fits = pol::run_salience(profiles, fx.salience, p.f.ridge);
  p.run.write("salience.csv", pol::salience_csv(fits));
  for (const auto& s : fits)
    p.out << fmt::format("{:<12} loglik counts {:.3f} specificity {:.3f}\n", s.area, s.loglik_counts,
                         s.loglik_specificity);
  return 0;
}

int cmd_report(Pipeline& p) {
  const Corpus data = p.f.corpus.empty() ? synth_corpus(p.f.seed, p.f.n, kDefaultClassProbs, p.f.vocab)
                                         : load_labeled(p.f.corpus);
  p.run.input(p.f.corpus);
  if (p.f.ratios.empty()) throw InvalidArgument("--ratios is empty");
  for (int r : p.f.ratios)
    if (r <= 0 || r >= 100) throw InvalidArgument("ratios are percentages in (0,100)");
  if (p.f.train.context != 0) throw InvalidArgument("report does not take --context");
  TrainConfig cfg = make_train_config(p.f.train, p.f.seed);
  SslConfig ssl;
  ssl.kind = parse_consensus_kind(p.f.ssl);
  ssl.beta = p.f.beta;
  ssl.word_dropout = p.f.dropout;
  ssl.interleave = p.f.interleave;
  ssl.shared = !p.f.separate_teacher;
  ssl.validate();
  SslConfig sup = ssl;
  sup.beta = 0.0;

  const Split outer = split(data, 0.8, p.f.seed);
  const Split inner = split(outer.train, 1.0 - p.f.train.val_frac, p.f.seed + 1);
  const Corpus& pool = inner.train;
  const Corpus& val = inner.test;
  const Corpus& test = outer.test;

  std::string csv = "ratio,method,labeled,unlabeled,mmae,rho\n";
  std::vector<double> xs;
  Series sup_mmae{"supervised", {}}, ssl_mmae{to_string(ssl.kind) + " consensus", {}};
  Series sup_rho = sup_mmae, ssl_rho = ssl_mmae;
  for (int ratio : p.f.ratios) {
    const std::size_t n_lab =
        std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(pool.size() * ratio / 100.0)));
    const Split lab = split(pool, static_cast<double>(n_lab) / static_cast<double>(pool.size()),
                            p.f.seed + static_cast<std::uint64_t>(ratio));
    const std::size_t n_unl = std::min(
        lab.test.size(), static_cast<std::size_t>(std::llround(p.f.unlabeled_factor * lab.train.size())));
    const Corpus unl = strip_labels(sample(lab.test, n_unl, p.f.seed));
    xs.push_back(ratio);
    for (const SslConfig* s : {&sup, &ssl}) {
      const TrainedModel tm = ssl_train(lab.train, unl, val, cfg, *s, {});
      const Evaluation ev = evaluate(tm, test);
      const bool is_sup = s == &sup;
      csv += fmt::format("{},{},{},{},{:.6f},{}\n", ratio, is_sup ? "supervised" : to_string(ssl.kind),
                         lab.train.size(), unl.size(), ev.mmae,
                         std::isfinite(ev.rho) ? fmt::format("{:.6f}", ev.rho) : std::string());
      (is_sup ? sup_mmae : ssl_mmae).y.push_back(ev.mmae);
      (is_sup ? sup_rho : ssl_rho).y.push_back(ev.rho);
      p.out << fmt::format("ratio {:>2}% {:<10} mmae {:.4f} rho {}\n", ratio, is_sup ? "supervised" : to_string(ssl.kind),
                           ev.mmae, fmt_rho(ev.rho));
    }
  }
  p.run.write("report.csv", csv);
  p.run.write("report_mmae.svg",
              line_chart("MMAE by labelled share", "labelled training data (%)", "MMAE", xs, {sup_mmae, ssl_mmae}));
  p.run.write("report_rho.svg", line_chart("Spearman rho by labelled share", "labelled training data (%)",
                                           "Spearman rho", xs, {sup_rho, ssl_rho}));
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ordinal sentence specificity models and manifesto analyses", "ordspec"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "log progress to stderr");

  Flags f;
  std::map<std::string, std::function<int(Pipeline&)>> handlers;
  auto sub = [&](const std::string& name, const std::string& help, std::function<int(Pipeline&)> fn) {
    CLI::App* cmd = app.add_subcommand(name, help);
    cmd->add_option("--seed", f.seed, "seed for every random choice")->capture_default_str();
    cmd->add_option("--out", f.out, "output directory")->capture_default_str();
    handlers[name] = std::move(fn);
    return cmd;
  };

  auto* ingest = sub("ingest", "validate a corpus, split it and summarise its labels", cmd_ingest);
  ingest->add_option("--corpus", f.corpus, "JSONL corpus")->required();
  ingest->add_option("--train-frac", f.train_frac)->capture_default_str();
  ingest->add_option("--split-mode", f.split_mode, "sentence|document")->capture_default_str();

  auto* synth = sub("synth", "generate a synthetic corpus", cmd_synth);
  synth->add_option("--n", f.n, "number of sentences")->capture_default_str();
  synth->add_option("--vocab", f.vocab, "vocabulary size")->capture_default_str();
  synth->add_flag("--strip-labels", f.strip, "emit unlabelled sentences");

  auto* trn = sub("train", "train a supervised model", cmd_train);
  trn->add_option("--corpus", f.corpus, "labelled JSONL corpus")->required();
  add_train_flags(trn, f.train);

  auto* ssl = sub("ssl-train", "train with cross-view consensus on unlabelled text", cmd_ssl_train);
  ssl->add_option("--corpus", f.corpus, "labelled JSONL corpus")->required();
  ssl->add_option("--unlabeled", f.unlabeled, "unlabelled JSONL corpus")->required();
  ssl->add_option("--ssl", f.ssl, "mse|kld|emd")->capture_default_str();
  ssl->add_option("--beta", f.beta, "consensus loss weight")->capture_default_str();
  ssl->add_option("--dropout", f.dropout, "student word dropout")->capture_default_str();
  ssl->add_option("--interleave", f.interleave, "unlabelled batches per labelled batch")->capture_default_str();
  ssl->add_flag("--separate-teacher", f.separate_teacher, "train a frozen teacher first");
  add_train_flags(ssl, f.train);

  auto* ev = sub("eval", "score a model or a predictions file against gold labels", cmd_eval);
  ev->add_option("--corpus", f.corpus, "labelled JSONL corpus")->required();
  ev->add_option("--model", f.model, "model checkpoint");
  ev->add_option("--predictions", f.predictions, "CSV of id,value");

  auto* pred = sub("predict", "write predictions for every sentence", cmd_predict);
  pred->add_option("--corpus", f.corpus)->required();
  pred->add_option("--model", f.model)->required();

  auto* psl = sub("psl-infer", "ground a rule program and find its MAP state", cmd_psl_infer);
  psl->add_option("--program", f.program, "rule program file")->required();
  psl->add_option("--tol", f.tol)->capture_default_str();
  psl->add_option("--max-iters", f.max_iters)->capture_default_str();

  auto* ideo = sub("ideology", "estimate party positions on a manifesto collection", cmd_ideology);
  ideo->add_option("--fixtures", f.fixtures, "fixture directory")->required();
  ideo->add_option("--model", f.model, "score sentences with this model instead of gold labels");
  ideo->add_option("--exponent", f.exponent, "hinge exponent (1 or 2)")->capture_default_str();
  ideo->add_option("--tol", f.tol)->capture_default_str();
  ideo->add_option("--max-iters", f.max_iters)->capture_default_str();

  auto* sal = sub("salience", "compare count and specificity features for issue salience", cmd_salience);
  sal->add_option("--fixtures", f.fixtures, "fixture directory")->required();
  sal->add_option("--model", f.model, "score sentences with this model instead of gold labels");
  sal->add_option("--ridge", f.ridge)->capture_default_str();

  auto* rep = sub("report", "supervised vs consensus training across labelled shares", cmd_report);
  rep->add_option("--corpus", f.corpus, "labelled JSONL corpus (default: synthetic)");
  rep->add_option("--n", f.n, "synthetic corpus size")->capture_default_str();
  rep->add_option("--vocab", f.vocab)->capture_default_str();
  rep->add_option("--ratios", f.ratios, "labelled percentages")->delimiter(',')->capture_default_str();
  rep->add_option("--unlabeled-factor", f.unlabeled_factor)->capture_default_str();
  rep->add_option("--ssl", f.ssl, "mse|kld|emd")->capture_default_str();
  rep->add_option("--beta", f.beta)->capture_default_str();
  rep->add_option("--dropout", f.dropout)->capture_default_str();
  rep->add_option("--interleave", f.interleave)->capture_default_str();
  rep->add_flag("--separate-teacher", f.separate_teacher);
  add_train_flags(rep, f.train);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 1;
  }

  auto level = spdlog::get_level();
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);
  int status = 0;
  try {
    CLI::App* cmd = app.get_subcommands().front();
    Run run(cmd->get_name(), cmd, args, f);
    Pipeline p{f, run, out};
    status = handlers.at(cmd->get_name())(p);
    run.finish();
  } catch (const UserError& e) {
    err << "error: " << e.what() << '\n';
    status = 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    status = 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    status = 2;
  }
  spdlog::set_level(level);
  return status;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace ordspec
