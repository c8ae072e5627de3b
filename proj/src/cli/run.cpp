// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "rr/cells.hpp"
#include "rr/cli.hpp"
#include "rr/construct.hpp"
#include "rr/equiv.hpp"
#include "rr/error.hpp"
#include "rr/harness/corpus.hpp"
#include "rr/harness/train.hpp"
#include "rr/optim.hpp"
#include "rr/random.hpp"
#include "rr/wfsa.hpp"
#include "rr/wfsa_io.hpp"

namespace rr::cli {

namespace fs = std::filesystem;
using harness::TrainConfig;

namespace {

std::string num(double v) { return format_weight(v); }
std::string num(std::size_t v) { return std::to_string(v); }

std::string_view activation_name(Activation a) { return a == Activation::kTanh ? "tanh" : "identity"; }

Activation parse_activation(std::string_view s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "identity") return Activation::kIdentity;
  throw Error(ErrorCode::kConfigError, "unknown activation '" + std::string(s) + "'");
}

std::string_view lambda_name(LambdaMode m) {
  switch (m) {
    case LambdaMode::kConstant: return "constant";
    case LambdaMode::kInputDependent: return "input";
    case LambdaMode::kStateDependent: return "state";
  }
  return "?";
}

LambdaMode parse_lambda(std::string_view s) {
  if (s == "constant") return LambdaMode::kConstant;
  if (s == "input") return LambdaMode::kInputDependent;
  if (s == "state") return LambdaMode::kStateDependent;
  throw Error(ErrorCode::kConfigError, "unknown lambda_mode '" + std::string(s) + "'");
}

void store_train(Config& c, const TrainConfig& t) {
  c.declare("train.cell", std::string(cell_kind_name(t.cell)));
  c.declare("train.layers", num(t.layers));
  c.declare("train.hidden", num(t.hidden));
  c.declare("train.embed_dim", num(t.embed_dim));
  c.declare("train.mlp_hidden", num(t.mlp_hidden));
  c.declare("train.bptt_len", num(t.bptt_len));
  c.declare("train.batch_size", num(t.batch_size));
  c.declare("train.optimizer", std::string(harness::optimizer_name(t.optimizer)));
  c.declare("train.lr", num(t.lr));
  c.declare("train.l2", num(t.l2));
  c.declare("train.clip", num(t.clip));
  c.declare("train.dropout_vertical", num(t.dropout_vertical));
  c.declare("train.dropout_recurrent", num(t.dropout_recurrent));
  c.declare("train.dropout_embedding", num(t.dropout_embedding));
  c.declare("train.epochs", num(t.epochs));
  c.declare("train.patience", num(t.patience));
  c.declare("train.lr_halving_patience", num(t.lr_halving_patience));
  c.declare("train.output_gate", t.output_gate ? "true" : "false");
  c.declare("train.activation", std::string(activation_name(t.activation)));
  c.declare("train.ngram", num(t.ngram));
  c.declare("train.lambda_mode", std::string(lambda_name(t.lambda_mode)));
  c.declare("train.seed", std::to_string(t.seed));
}

TrainConfig load_train(const Config& c) {
  TrainConfig t;
  t.cell = parse_cell_kind(c.get("train.cell"));
  t.layers = c.get_size("train.layers");
  t.hidden = c.get_size("train.hidden");
  t.embed_dim = c.get_size("train.embed_dim");
  t.mlp_hidden = c.get_size("train.mlp_hidden");
  t.bptt_len = c.get_size("train.bptt_len");
  t.batch_size = c.get_size("train.batch_size");
  t.optimizer = harness::parse_optimizer(c.get("train.optimizer"));
  t.lr = c.get_double("train.lr");
  t.l2 = c.get_double("train.l2");
  t.clip = c.get_double("train.clip");
  t.dropout_vertical = c.get_double("train.dropout_vertical");
  t.dropout_recurrent = c.get_double("train.dropout_recurrent");
  t.dropout_embedding = c.get_double("train.dropout_embedding");
  t.epochs = c.get_size("train.epochs");
  t.patience = c.get_size("train.patience");
  t.lr_halving_patience = c.get_size("train.lr_halving_patience");
  t.output_gate = c.get_bool("train.output_gate");
  t.activation = parse_activation(c.get("train.activation"));
  t.ngram = c.get_size("train.ngram");
  t.lambda_mode = parse_lambda(c.get("train.lambda_mode"));
  t.seed = c.get_u64("train.seed");
  t.validate();
  return t;
}

void declare_data(Config& c) {
  c.declare("data.train", "");
  c.declare("data.dev", "");
  c.declare("data.test", "");
  c.declare("data.synthetic", "none");
  c.declare("data.vocab", "0");
  c.declare("data.train_size", "0");
  c.declare("data.dev_size", "0");
  c.declare("data.test_size", "0");
  c.declare("data.seed", "1");
  c.declare("data.split_seed", "0");
  c.declare("data.shuffle_labels", "false");
}

struct LmData {
  harness::LmCorpus corpus;
  std::optional<double> unigram_bound_ppl;
};

LmData load_lm_data(const Config& c) {
  LmData d;
  const std::string synthetic = c.get("data.synthetic");
  if (synthetic == "bigram_lm") {
    harness::BigramLmSpec spec;
    if (c.get_size("data.vocab")) spec.vocab = c.get_size("data.vocab");
    if (c.get_size("data.train_size")) spec.train_tokens = c.get_size("data.train_size");
    if (c.get_size("data.dev_size")) spec.dev_tokens = c.get_size("data.dev_size");
    if (c.get_size("data.test_size")) spec.test_tokens = c.get_size("data.test_size");
    spec.seed = c.get_u64("data.seed");
    auto syn = harness::make_bigram_lm(spec);
    d.corpus = std::move(syn.corpus);
    d.unigram_bound_ppl = std::exp(syn.unigram_entropy);
  } else if (synthetic == "none") {
    if (c.get("data.train").empty()) throw Error(ErrorCode::kConfigError, "set data.train or data.synthetic");
    d.corpus = harness::ingest_lm_files(c.get("data.train"), c.get("data.dev"), c.get("data.test"));
  } else {
    throw Error(ErrorCode::kConfigError, "data.synthetic for language modeling is none or bigram_lm");
  }
  return d;
}

harness::ClassCorpus load_class_data(const Config& c) {
  harness::ClassCorpus corpus;
  const std::string synthetic = c.get("data.synthetic");
  if (synthetic == "bigram_detect") {
    harness::BigramDetectSpec spec;
    if (c.get_size("data.vocab")) spec.vocab = c.get_size("data.vocab");
    if (c.get_size("data.train_size")) spec.train = c.get_size("data.train_size");
    if (c.get_size("data.dev_size")) spec.dev = c.get_size("data.dev_size");
    if (c.get_size("data.test_size")) spec.test = c.get_size("data.test_size");
    spec.seed = c.get_u64("data.seed");
    corpus = harness::make_bigram_detection(spec);
  } else if (synthetic == "none") {
    if (c.get("data.train").empty()) throw Error(ErrorCode::kConfigError, "set data.train or data.synthetic");
    corpus = harness::ingest_classify_files(c.get("data.train"), c.get("data.dev"), c.get("data.test"),
                                            c.get_u64("data.split_seed"));
  } else {
    throw Error(ErrorCode::kConfigError, "data.synthetic for classification is none or bigram_detect");
  }
  if (c.get_bool("data.shuffle_labels")) harness::shuffle_labels(corpus, c.get_u64("data.seed") + 1);
  return corpus;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  f << text;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir + ": " + ec.message());
  return p;
}

// Options shared by every subcommand. Each flag maps to a config key that
// depends on the subcommand; an empty mapping means the flag does not apply.
struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::string> semiring;
  std::optional<std::string> cell;
  std::optional<std::size_t> trials;
  std::optional<double> tol;
  std::vector<std::string> overrides;
};

struct FlagKeys {
  std::string seed, semiring, cell, trials, tol;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "INI config file");
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--semiring", c.semiring, "real | maxplus");
  app->add_option("--cell", c.cell, "cell kind");
  app->add_option("--trials", c.trials, "number of trials");
  app->add_option("--tol", c.tol, "tolerance");
  app->add_option("overrides", c.overrides, "section.key=value settings");
}

// defaults < --config file < flags < key=value overrides
void resolve(Config& cfg, const Common& c, const FlagKeys& keys, const std::string& command) {
  if (!c.config.empty()) cfg.load_file(c.config);
  auto apply = [&](const char* flag, const std::string& key, const std::optional<std::string>& value) {
    if (!value) return;
    if (key.empty()) throw CLI::ValidationError(std::string(flag) + " does not apply to " + command);
    cfg.set(key, *value);
  };
  apply("--seed", keys.seed, c.seed ? std::optional<std::string>(std::to_string(*c.seed)) : std::nullopt);
  apply("--semiring", keys.semiring, c.semiring);
  apply("--cell", keys.cell, c.cell);
  apply("--trials", keys.trials, c.trials ? std::optional<std::string>(std::to_string(*c.trials)) : std::nullopt);
  apply("--tol", keys.tol, c.tol ? std::optional<std::string>(num(*c.tol)) : std::nullopt);
  for (const auto& o : c.overrides) cfg.apply_override(o);
}

Wfsa load_automaton(const Config& cfg) {
  const std::string path = cfg.get("wfsa.automaton");
  if (path.empty()) throw Error(ErrorCode::kConfigError, "--automaton is required");
  Wfsa a = import_text(harness::read_file(path));
  const std::string s = cfg.get("wfsa.semiring");
  if (s.empty() || Semiring::parse(s).kind() == a.semiring().kind()) return a;
  // Reinterpret the same weights in another semiring.
  Wfsa b(Semiring::parse(s), a.num_states(), a.alphabet_size());
  for (const auto& t : a.transitions()) b.set_transition(t.key.src, t.key.dst, t.key.label, t.weight);
  for (const auto& [q, w] : a.initial_weights()) b.set_initial(q, w);
  for (const auto& [q, w] : a.final_weights()) b.set_final(q, w);
  validate(b);
  return b;
}

void declare_wfsa(Config& c) {
  c.declare("wfsa.automaton", "");
  c.declare("wfsa.input", "");
  c.declare("wfsa.semiring", "");
  c.declare("wfsa.tol", "1e-9");
}

int cmd_wfsa(const std::string& action, Config& cfg, const Common& common, std::ostream& out) {
  Wfsa a = load_automaton(cfg);
  if (action == "score") {
    const auto x = parse_symbols(cfg.get("wfsa.input"));
    out << format_weight(forward(a, x)) << '\n';
    return kExitOk;
  }
  if (action == "dot") {
    const std::string dot = export_dot(a);
    if (common.out.empty()) {
      out << dot;
    } else {
      write_text(prepare_out(common.out) / "automaton.dot", dot);
    }
    return kExitOk;
  }
  // check: structural validation (done on load) plus, with an input, Forward
  // against path enumeration.
  out << "states: " << a.num_states() << '\n'
      << "alphabet: " << a.alphabet_size() << '\n'
      << "transitions: " << a.num_transitions() << '\n'
      << "epsilon_transitions: " << a.epsilon_arcs().size() << '\n'
      << "semiring: " << a.semiring().name() << '\n';
  const std::string input = cfg.get("wfsa.input");
  if (input.empty()) {
    out << "valid: true\n";
    return kExitOk;
  }
  const auto x = parse_symbols(input);
  const double fwd = forward(a, x);
  const double brute = string_score_bruteforce(a, x, a.num_states());
  const double diff = fwd == brute ? 0.0 : std::abs(fwd - brute);
  const bool pass = diff <= cfg.get_double("wfsa.tol");
  out << "forward: " << format_weight(fwd) << '\n'
      << "bruteforce: " << format_weight(brute) << '\n'
      << "abs_diff: " << format_weight(diff) << '\n'
      << "pass: " << (pass ? "true" : "false") << '\n';
  return pass ? kExitOk : kExitCheckFailed;
}

int cmd_construct(const Config& cfg, const Common& common, std::ostream& out) {
  const std::string tables_path = cfg.get("construct.tables");
  if (tables_path.empty()) throw Error(ErrorCode::kConfigError, "--tables is required");
  const WeightTables t = tables_from_json(harness::read_file(tables_path));
  const Wfsa a = build_family(cfg.get("construct.family"), t, Semiring::parse(cfg.get("construct.semiring")),
                              cfg.get_size("construct.output_dim"));
  const std::string text = export_text(a);
  if (common.out.empty()) {
    out << text;
  } else {
    write_text(prepare_out(common.out) / "automaton.wfsa", text);
  }
  return kExitOk;
}

void declare_equiv(Config& c) {
  c.declare("equiv.check", "cell");
  c.declare("equiv.cell", "rrnn_b");
  c.declare("equiv.trials", "100");
  c.declare("equiv.seed", "0");
  c.declare("equiv.hidden", "4");
  c.declare("equiv.vocab", "8");
  c.declare("equiv.input_dim", "5");
  c.declare("equiv.strings", "50");
  c.declare("equiv.max_len", "10");
  c.declare("equiv.ngram", "2");
  c.declare("equiv.activation", "tanh");
  c.declare("equiv.lambda_mode", "input");
  c.declare("equiv.tol", "0");
}

int cmd_equiv(const Config& cfg, const Common& common, std::ostream& out) {
  EquivSuiteOptions o;
  o.kind = parse_cell_kind(cfg.get("equiv.cell"));
  o.trials = cfg.get_size("equiv.trials");
  o.seed = cfg.get_u64("equiv.seed");
  o.hidden = cfg.get_size("equiv.hidden");
  o.vocab = cfg.get_size("equiv.vocab");
  o.input_dim = cfg.get_size("equiv.input_dim");
  o.strings.count = cfg.get_size("equiv.strings");
  o.strings.max_len = cfg.get_size("equiv.max_len");
  o.ngram = cfg.get_size("equiv.ngram");
  o.activation = parse_activation(cfg.get("equiv.activation"));
  o.lambda_mode = parse_lambda(cfg.get("equiv.lambda_mode"));
  o.tol = cfg.get_double("equiv.tol");
  const std::string check = cfg.get("equiv.check");
  EquivReport report;
  if (check == "cell") {
    report = run_equivalence_suite(o);
  } else if (check == "f_dp") {
    // Hand-written F recursion against generic Forward, on tables read off
    // random RRNN(F) cells.
    Rng rng(o.seed);
    const double tol = o.tol > 0 ? o.tol : 1e-9;
    CellConfig cc;
    cc.kind = CellKind::kRrnnF;
    cc.input_dim = o.input_dim;
    cc.hidden = o.hidden;
    cc.activation = o.activation;
    report.cell = "rrnn_f/dp";
    report.tolerance = tol;
    for (std::size_t trial = 0; trial < o.trials; ++trial) {
      Rng r = rng.split();
      auto cell = make_cell(cc, r);
      randomize_parameters(*cell, r);
      ad::Tensor emb(o.vocab, o.input_dim);
      for (double& v : emb.data()) v = r.normal();
      const auto tables = tables_from_cell(*cell, emb);
      const auto strings = sample_strings(o.vocab, o.strings, r);
      const EquivReport one = check_f_dp(tables, strings, tol);
      if (trial == 0 || one.max_abs_diff > report.max_abs_diff) {
        report.max_abs_diff = one.max_abs_diff;
        report.worst_case = one.worst_case;
      }
      report.trials += 1;
      report.dims_checked += one.dims_checked;
      report.strings_checked += one.strings_checked;
      report.prefixes_checked += one.prefixes_checked;
    }
    report.pass = report.max_abs_diff <= tol;
  } else {
    throw Error(ErrorCode::kConfigError, "equiv.check is cell or f_dp");
  }
  const std::string text = format_report(report);
  out << text;
  if (!common.out.empty()) write_text(prepare_out(common.out) / "equiv_report.txt", text);
  return report.pass ? kExitOk : kExitCheckFailed;
}

void declare_gradcheck(Config& c) {
  c.declare("gradcheck.cell", "rrnn_f");
  c.declare("gradcheck.seed", "1");
  c.declare("gradcheck.hidden", "4");
  c.declare("gradcheck.layers", "1");
  c.declare("gradcheck.vocab", "6");
  c.declare("gradcheck.length", "8");
  c.declare("gradcheck.output_gate", "true");
  c.declare("gradcheck.h", "1e-05");
  c.declare("gradcheck.tol", "0.0001");
}

int cmd_gradcheck(const Config& cfg, std::ostream& out) {
  TrainConfig t = harness::default_lm_config();
  t.cell = parse_cell_kind(cfg.get("gradcheck.cell"));
  t.hidden = cfg.get_size("gradcheck.hidden");
  t.layers = cfg.get_size("gradcheck.layers");
  t.output_gate = cfg.get_bool("gradcheck.output_gate");
  t.seed = cfg.get_u64("gradcheck.seed");
  const std::size_t vocab = cfg.get_size("gradcheck.vocab");
  harness::LmModel model(t, vocab);
  Rng rng(t.seed + 1);
  std::vector<harness::TokenId> stream(cfg.get_size("gradcheck.length"));
  for (auto& s : stream) s = static_cast<harness::TokenId>(rng.index(vocab));
  // Move every parameter off its (often zero) initial value.
  for (ad::Parameter* p : model.parameters())
    for (double& v : p->value.data()) v += rng.uniform(-0.5, 0.5);
  const auto params = model.parameters();
  const auto r = ad::gradcheck([&](ad::Tape& tape) { return harness::lm_sequence_loss(model, tape, stream); },
                               params, cfg.get_double("gradcheck.h"));
  const bool pass = r.max_rel_error <= cfg.get_double("gradcheck.tol");
  out << "cell: " << cell_kind_name(t.cell) << '\n'
      << "entries_checked: " << r.checked << '\n'
      << "max_rel_error: " << format_weight(r.max_rel_error) << '\n'
      << "pass: " << (pass ? "true" : "false") << '\n';
  return pass ? kExitOk : kExitCheckFailed;
}

int cmd_train_lm(const Config& cfg, const Common& common, std::ostream& out) {
  const TrainConfig t = load_train(cfg);
  const LmData data = load_lm_data(cfg);
  const fs::path dir = prepare_out(common.out.empty() ? "rrnn_out" : common.out);
  write_text(dir / "config.ini", cfg.to_ini());
  std::ostringstream log;
  auto result = harness::train_lm(t, data.corpus, &log);
  if (data.unigram_bound_ppl) result.metrics.add("final", "data", "unigram_bound_perplexity", *data.unigram_bound_ppl);
  result.metrics.write_csv((dir / "metrics.csv").string());
  write_text(dir / "train.log", log.str());
  out << log.str();
  out << "best_dev_perplexity " << harness::format_value(result.best_dev_ppl) << '\n';
  out << "test_perplexity " << harness::format_value(result.test_ppl) << '\n';
  if (data.unigram_bound_ppl) out << "unigram_bound_perplexity " << harness::format_value(*data.unigram_bound_ppl) << '\n';
  return kExitOk;
}

int cmd_train_classify(const Config& cfg, const Common& common, std::ostream& out) {
  const TrainConfig t = load_train(cfg);
  const auto corpus = load_class_data(cfg);
  const auto seeds = cfg.get_u64_list("classify.seeds");
  const fs::path dir = prepare_out(common.out.empty() ? "rrnn_out" : common.out);
  write_text(dir / "config.ini", cfg.to_ini());
  const auto summary = harness::train_classifier_seeds(t, corpus, seeds);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    summary.runs[i].metrics.write_csv((dir / ("metrics_seed" + std::to_string(seeds[i]) + ".csv")).string());
    out << "seed " << seeds[i] << " test_accuracy " << harness::format_value(summary.runs[i].test_acc) << '\n';
  }
  summary.summary.write_csv((dir / "summary.csv").string());
  out << "test_accuracy " << harness::format_value(summary.mean_test_acc) << " +- "
      << harness::format_value(summary.std_test_acc) << '\n';
  return kExitOk;
}

void declare_search(Config& c) {
  const harness::SearchSpace s;
  c.declare("search.task", "classify");
  c.declare("search.trials", "20");
  c.declare("search.seed", "1");
  c.declare("search.hidden_min", num(s.hidden_min));
  c.declare("search.hidden_max", num(s.hidden_max));
  c.declare("search.dropout_max", num(s.dropout_max));
  c.declare("search.lr_min", num(s.lr_min));
  c.declare("search.lr_max", num(s.lr_max));
  c.declare("search.l2_min", num(s.l2_min));
  c.declare("search.l2_max", num(s.l2_max));
  c.declare("search.clip_min", num(s.clip_min));
  c.declare("search.clip_max", num(s.clip_max));
}

int cmd_search(const Config& cfg, const Common& common, std::ostream& out) {
  const TrainConfig base = load_train(cfg);
  harness::SearchSpace s;
  s.hidden_min = cfg.get_size("search.hidden_min");
  s.hidden_max = cfg.get_size("search.hidden_max");
  s.dropout_max = cfg.get_double("search.dropout_max");
  s.lr_min = cfg.get_double("search.lr_min");
  s.lr_max = cfg.get_double("search.lr_max");
  s.l2_min = cfg.get_double("search.l2_min");
  s.l2_max = cfg.get_double("search.l2_max");
  s.clip_min = cfg.get_double("search.clip_min");
  s.clip_max = cfg.get_double("search.clip_max");
  const std::size_t trials = cfg.get_size("search.trials");
  const std::uint64_t seed = cfg.get_u64("search.seed");
  const std::string task = cfg.get("search.task");
  const fs::path dir = prepare_out(common.out.empty() ? "rrnn_out" : common.out);
  write_text(dir / "config.ini", cfg.to_ini());
  harness::SearchResult r;
  if (task == "classify") {
    r = harness::random_search_classify(base, s, trials, seed, load_class_data(cfg));
  } else if (task == "lm") {
    r = harness::random_search_lm(base, s, trials, seed, load_lm_data(cfg).corpus);
  } else {
    throw Error(ErrorCode::kConfigError, "search.task is classify or lm");
  }
  r.metrics.write_csv((dir / "search.csv").string());
  // The winning settings as a config runnable with train-classify/train-lm.
  Config best = cfg;
  Config fresh;
  store_train(fresh, r.best);
  for (const char* k : {"train.hidden", "train.lr", "train.l2", "train.clip", "train.dropout_vertical",
                        "train.dropout_recurrent", "train.dropout_embedding", "train.seed"}) {
    best.set(k, fresh.get(k));
  }
  write_text(dir / "best.ini", best.to_ini());
  out << "best_trial " << r.best_index + 1 << '\n'
      << "best_dev_score " << harness::format_value(r.dev_scores[r.best_index]) << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rrnn: weighted automata and rational recurrent networks"};
  app.require_subcommand(1);

  Common common;
  std::string wfsa_action;
  std::string automaton, input, family, tables;

  auto* wfsa = app.add_subcommand("wfsa", "score, check or draw a WFSA");
  wfsa->add_option("action", wfsa_action, "score | check | dot")
      ->required()
      ->check(CLI::IsMember({"score", "check", "dot"}));
  wfsa->add_option("--automaton", automaton, "WFSA text file");
  wfsa->add_option("--input", input, "space-separated symbols");
  auto* construct = app.add_subcommand("construct", "build a named automaton from weight tables");
  construct->add_option("--family", family, "B | C | F | qrnn2 | rcnn | isan");
  construct->add_option("--tables", tables, "JSON weight tables");
  auto* equiv = app.add_subcommand("equiv", "check cell states against automaton scores");
  auto* train_lm = app.add_subcommand("train-lm", "train a language model");
  auto* train_cls = app.add_subcommand("train-classify", "train a text classifier");
  auto* search = app.add_subcommand("search", "random hyperparameter search");
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check of an LM step");
  for (auto* sub : {wfsa, construct, equiv, train_lm, train_cls, search, gradcheck}) add_common(sub, common);

  std::vector<std::string> argv_store{"rrnn"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  try {
    Config cfg;
    FlagKeys keys;
    std::string command;
    if (wfsa->parsed()) {
      command = "wfsa";
      declare_wfsa(cfg);
      keys = {"", "wfsa.semiring", "", "", "wfsa.tol"};
    } else if (construct->parsed()) {
      command = "construct";
      cfg.declare("construct.family", "B");
      cfg.declare("construct.tables", "");
      cfg.declare("construct.semiring", "real");
      cfg.declare("construct.output_dim", "0");
      keys = {"", "construct.semiring", "", "", ""};
    } else if (equiv->parsed()) {
      command = "equiv";
      declare_equiv(cfg);
      keys = {"equiv.seed", "", "equiv.cell", "equiv.trials", "equiv.tol"};
    } else if (train_lm->parsed()) {
      command = "train-lm";
      store_train(cfg, harness::default_lm_config());
      declare_data(cfg);
      keys = {"train.seed", "", "train.cell", "", ""};
    } else if (train_cls->parsed()) {
      command = "train-classify";
      store_train(cfg, harness::default_classify_config());
      declare_data(cfg);
      cfg.declare("classify.seeds", "1,2,3,4,5");
      keys = {"train.seed", "", "train.cell", "", ""};
    } else if (search->parsed()) {
      command = "search";
      store_train(cfg, harness::default_classify_config());
      declare_data(cfg);
      declare_search(cfg);
      keys = {"search.seed", "", "train.cell", "search.trials", ""};
    } else {
      command = "gradcheck";
      declare_gradcheck(cfg);
      keys = {"gradcheck.seed", "", "gradcheck.cell", "", "gradcheck.tol"};
    }
    resolve(cfg, common, keys, command);
    if (command == "wfsa") {
      if (!automaton.empty()) cfg.set("wfsa.automaton", automaton);
      if (!input.empty()) cfg.set("wfsa.input", input);
      return cmd_wfsa(wfsa_action, cfg, common, out);
    }
    if (command == "construct") {
      if (!family.empty()) cfg.set("construct.family", family);
      if (!tables.empty()) cfg.set("construct.tables", tables);
      return cmd_construct(cfg, common, out);
    }
    if (command == "equiv") return cmd_equiv(cfg, common, out);
    if (command == "train-lm") return cmd_train_lm(cfg, common, out);
    if (command == "train-classify") return cmd_train_classify(cfg, common, out);
    if (command == "search") return cmd_search(cfg, common, out);
    return cmd_gradcheck(cfg, out);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::kConfigError:
      case ErrorCode::kParseError:
      case ErrorCode::kIoError: return kExitUsage;
      default: return kExitCheckFailed;
    }
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace rr::cli
