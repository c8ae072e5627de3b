// SPDX-License-Identifier: Apache-2.0
#include "rr/harness/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "rr/error.hpp"
#include "rr/random.hpp"

namespace rr::harness {

using ad::Parameter;
using ad::Tape;
using ad::Tensor;
using ad::Var;

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw Error(ErrorCode::kConfigError, "unknown optimizer '" + std::string(name) + "'");
}

std::string_view optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::kSgd ? "sgd" : "adam"; }

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfigError, what); };
  if (layers == 0) fail("layers must be positive");
  if (hidden == 0) fail("hidden must be positive");
  if (bptt_len == 0) fail("bptt_len must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
  if (epochs == 0) fail("epochs must be positive");
  if (ngram == 0) fail("ngram must be positive");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(l2 >= 0.0)) fail("l2 must be non-negative");
  if (!(clip >= 0.0)) fail("clip must be non-negative");
  for (double p : {dropout_vertical, dropout_recurrent, dropout_embedding}) {
    if (!(p >= 0.0 && p < 1.0)) fail("dropout rates must lie in [0, 1)");
  }
  if (cell == CellKind::kIsan && layers > 1) fail("isan reads symbols directly and cannot be stacked");
}

TrainConfig default_lm_config() {
  TrainConfig c;
  c.optimizer = OptimizerKind::kSgd;
  c.lr = 17.5;
  c.batch_size = 20;
  c.epochs = 10;
  c.patience = 5;
  c.lr_halving_patience = 1;
  c.output_gate = true;
  return c;
}

TrainConfig default_classify_config() {
  TrainConfig c;
  c.optimizer = OptimizerKind::kAdam;
  c.lr = 1e-3;
  c.batch_size = 32;
  c.epochs = 50;
  c.patience = 30;
  c.lr_halving_patience = 10;
  c.output_gate = false;
  return c;
}

std::unique_ptr<ad::Optimizer> make_optimizer(const TrainConfig& cfg) {
  if (cfg.optimizer == OptimizerKind::kSgd) return std::make_unique<ad::Sgd>(cfg.lr, cfg.clip, cfg.l2);
  ad::AdamOptions o;
  o.lr = cfg.lr;
  o.clip = cfg.clip;
  o.l2 = cfg.l2;
  return std::make_unique<ad::Adam>(o);
}

CellStack::CellStack(const TrainConfig& cfg, std::size_t input_dim, std::size_t vocab, Rng& rng) {
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    CellConfig c;
    c.kind = cfg.cell;
    c.input_dim = l == 0 ? input_dim : cfg.hidden;
    c.hidden = cfg.hidden;
    c.vocab_size = vocab;
    c.activation = cfg.activation;
    c.output_gate = cfg.output_gate && cfg.cell != CellKind::kIsan;
    c.ngram = cfg.ngram;
    c.lambda_mode = cfg.lambda_mode;
    layers_.push_back(make_cell(c, rng));
  }
}

std::vector<Parameter*> CellStack::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_)
    for (Parameter* p : l->parameters()) out.push_back(p);
  return out;
}

CellStack::Masks CellStack::sample_masks(std::size_t batch, double p_recurrent, Rng& rng) const {
  Masks m;
  if (p_recurrent <= 0.0) return m;
  for (const auto& l : layers_) m.recurrent.push_back(ad::dropout_mask(batch, l->config().input_dim, p_recurrent, rng));
  return m;
}

std::vector<CellState> CellStack::initial(Tape& tape, std::size_t batch,
                                          const std::vector<CarriedState>* carry) const {
  std::vector<CellState> out;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    out.push_back(layers_[l]->initial_state(tape, batch, carry && !carry->empty() ? &(*carry)[l] : nullptr));
  }
  return out;
}

Var CellStack::step(Tape& tape, std::vector<CellState>& states, Var v, std::span<const Symbol> symbols,
                    const Masks* masks, double vertical, Rng* rng) const {
  Var in = v;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (masks && !masks->recurrent.empty()) in = ad::mul(in, tape.constant(masks->recurrent[l]));
    states[l] = layers_[l]->step(tape, states[l], StepInput{in, symbols});
    in = states[l].h;
    if (vertical > 0.0 && rng) in = ad::mul(in, tape.constant(ad::dropout_mask(in.rows(), in.cols(), vertical, *rng)));
  }
  return in;
}

namespace {

Tensor uniform_tensor(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
  Tensor t(rows, cols);
  for (double& v : t.data()) v = rng.uniform(-scale, scale);
  return t;
}

// Per-vocabulary-row mask: a dropped word type is zero at every position.
Tensor embedding_mask(std::size_t vocab, std::size_t dim, double p, Rng& rng) {
  Tensor m(vocab, dim);
  const double keep = 1.0 / (1.0 - p);
  for (std::size_t r = 0; r < vocab; ++r) {
    const double v = rng.bernoulli(p) ? 0.0 : keep;
    for (std::size_t c = 0; c < dim; ++c) m(r, c) = v;
  }
  return m;
}

std::vector<Tensor> snapshot(const std::vector<Parameter*>& params) {
  std::vector<Tensor> out;
  for (const Parameter* p : params) out.push_back(p->value);
  return out;
}

void restore(const std::vector<Parameter*>& params, const std::vector<Tensor>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

void zero_grads(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->zero_grad();
}

// Backward plus update; non-finite values are reported with the step index.
void update(Tape& tape, Var loss, const std::vector<Parameter*>& params, ad::Optimizer& opt, std::size_t step) {
  if (!std::isfinite(loss.value()[0])) {
    throw Error(ErrorCode::kNumericalError, "non-finite loss at step " + std::to_string(step));
  }
  zero_grads(params);
  tape.backward(loss);
  try {
    opt.step(params);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNumericalError) throw;
    throw Error(ErrorCode::kNumericalError, "non-finite gradient at step " + std::to_string(step));
  }
}

}  // namespace

namespace {

const TrainConfig& checked(const TrainConfig& cfg, std::size_t vocab) {
  cfg.validate();
  if (vocab == 0) throw Error(ErrorCode::kEmptyCorpus, "empty vocabulary");
  return cfg;
}

}  // namespace

LmModel::LmModel(const TrainConfig& cfg, std::size_t vocab_size)
    : LmModel(cfg, vocab_size, *std::make_unique<Rng>(cfg.seed)) {}

LmModel::LmModel(const TrainConfig& cfg, std::size_t vocab_size, Rng& rng)
    : cfg_(checked(cfg, vocab_size)),
      embedding_("embedding", uniform_tensor(vocab_size, cfg.hidden, 0.1, rng)),
      output_bias_("output_bias", Tensor(1, vocab_size)),
      cells_(cfg, cfg.hidden, vocab_size, rng) {}

std::vector<Parameter*> LmModel::parameters() {
  std::vector<Parameter*> out{&embedding_, &output_bias_};
  for (Parameter* p : cells_.parameters()) out.push_back(p);
  return out;
}

Var LmModel::logits(Tape& tape, Var h) {
  Var et = ad::transpose(tape.param(embedding_));
  return ad::add(ad::matmul(h, et), tape.param(output_bias_));
}

double perplexity(double nll_sum, std::size_t tokens) {
  return tokens ? std::exp(nll_sum / static_cast<double>(tokens)) : 0.0;
}

double LmEval::perplexity() const { return harness::perplexity(nll_sum, tokens); }

std::vector<std::vector<TokenId>> batchify(std::span<const TokenId> stream, std::size_t batch) {
  if (batch == 0) throw Error(ErrorCode::kConfigError, "batch must be positive");
  const std::size_t len = stream.size() / batch;
  std::vector<std::vector<TokenId>> rows(batch);
  for (std::size_t b = 0; b < batch; ++b) rows[b].assign(stream.begin() + b * len, stream.begin() + (b + 1) * len);
  return rows;
}

namespace {

// One truncated-BPTT window over positions [t0, t0 + len) of every row,
// predicting position t + 1. Returns the mean per-token loss.
Var lm_window(LmModel& model, Tape& tape, const std::vector<std::vector<TokenId>>& rows, std::size_t t0,
              std::size_t len, std::vector<CarriedState>& carry, Rng* rng, LmEval& eval) {
  const TrainConfig& cfg = model.config();
  const std::size_t batch = rows.size();
  const std::size_t vocab = model.vocab_size();
  Var e = tape.param(model.embedding());
  Var et = ad::transpose(e);
  Var bias = tape.param(model.output_bias());
  Var e_in = e;
  if (rng && cfg.dropout_embedding > 0.0) {
    e_in = ad::mul(e, tape.constant(embedding_mask(vocab, cfg.hidden, cfg.dropout_embedding, *rng)));
  }
  CellStack& cells = model.cells();
  auto states = cells.initial(tape, batch, &carry);
  CellStack::Masks masks;
  if (rng) masks = cells.sample_masks(batch, cfg.dropout_recurrent, *rng);

  std::vector<TokenId> ids(batch), targets(batch);
  Var total;
  for (std::size_t t = t0; t < t0 + len; ++t) {
    for (std::size_t b = 0; b < batch; ++b) {
      ids[b] = rows[b][t];
      targets[b] = rows[b][t + 1];
    }
    Var v = ad::embedding_lookup(e_in, ids);
    Var h = cells.step(tape, states, v, ids, rng ? &masks : nullptr, rng ? cfg.dropout_vertical : 0.0, rng);
    Var ce = ad::softmax_cross_entropy(ad::add(ad::matmul(h, et), bias), targets);
    eval.nll_sum += ce.value()[0] * static_cast<double>(batch);
    eval.tokens += batch;
    total = total.valid() ? ad::add(total, ce) : ce;
  }
  carry.clear();
  for (const auto& s : states) carry.push_back(detach(s));
  return ad::affine(total, 1.0 / static_cast<double>(len), 0.0);
}

}  // namespace

LmEval evaluate_lm(LmModel& model, std::span<const TokenId> stream, std::size_t bptt, std::size_t batch) {
  LmEval eval;
  if (bptt == 0) throw Error(ErrorCode::kConfigError, "bptt must be positive");
  const auto rows = batchify(stream, batch);
  const std::size_t steps = rows.empty() || rows[0].empty() ? 0 : rows[0].size() - 1;
  std::vector<CarriedState> carry;
  for (std::size_t t0 = 0; t0 < steps; t0 += bptt) {
    Tape tape;
    lm_window(model, tape, rows, t0, std::min(bptt, steps - t0), carry, nullptr, eval);
  }
  return eval;
}

Var lm_sequence_loss(LmModel& model, Tape& tape, std::span<const TokenId> stream) {
  if (stream.size() < 2) throw Error(ErrorCode::kEmptyCorpus, "need at least two tokens");
  const std::vector<std::vector<TokenId>> rows{std::vector<TokenId>(stream.begin(), stream.end())};
  std::vector<CarriedState> carry;
  LmEval eval;
  return lm_window(model, tape, rows, 0, stream.size() - 1, carry, nullptr, eval);
}

LmResult train_lm(LmModel& model, const LmCorpus& corpus, std::ostream* log) {
  const TrainConfig& cfg = model.config();
  if (corpus.train.size() < 2) throw Error(ErrorCode::kEmptyCorpus, "training stream is too short");
  Rng rng(cfg.seed ^ 0x5bd1e995ULL);
  auto opt = make_optimizer(cfg);
  const auto params = model.parameters();
  const auto rows = batchify(corpus.train, std::min(cfg.batch_size, corpus.train.size() / 2));
  const std::size_t steps = rows[0].size() - 1;
  const bool have_dev = corpus.dev.size() >= 2;

  LmResult result;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best_params = snapshot(params);
  std::size_t bad = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    LmEval train;
    std::vector<CarriedState> carry;
    for (std::size_t t0 = 0; t0 < steps; t0 += cfg.bptt_len) {
      Tape tape;
      Var loss = lm_window(model, tape, rows, t0, std::min(cfg.bptt_len, steps - t0), carry, &rng, train);
      update(tape, loss, params, *opt, result.steps);
      ++result.steps;
    }
    const double dev_ppl =
        have_dev ? evaluate_lm(model, corpus.dev, cfg.bptt_len).perplexity() : train.perplexity();
    result.metrics.add(epoch, "train", "loss", train.mean_nll());
    result.metrics.add(epoch, "train", "perplexity", train.perplexity());
    result.metrics.add(epoch, "train", "lr", opt->lr());
    result.metrics.add(epoch, "dev", "perplexity", dev_ppl);
    if (log) {
      *log << "epoch " << epoch << " train_ppl " << format_value(train.perplexity()) << " dev_ppl "
           << format_value(dev_ppl) << " lr " << format_value(opt->lr()) << '\n';
    }
    result.epochs_run = epoch;
    if (dev_ppl < best) {
      best = dev_ppl;
      best_params = snapshot(params);
      result.best_epoch = epoch;
      bad = 0;
    } else {
      ++bad;
      if (bad >= cfg.patience) break;
      if (cfg.lr_halving_patience > 0 && bad % cfg.lr_halving_patience == 0) opt->set_lr(opt->lr() * 0.5);
    }
  }
  restore(params, best_params);
  result.best_dev_ppl = best;
  result.metrics.add(result.best_epoch, "dev", "best_perplexity", best);
  if (corpus.test.size() >= 2) {
    result.test_ppl = evaluate_lm(model, corpus.test, cfg.bptt_len).perplexity();
    result.metrics.add(result.best_epoch, "test", "perplexity", result.test_ppl);
    if (log) *log << "test_ppl " << format_value(result.test_ppl) << '\n';
  }
  return result;
}

LmResult train_lm(const TrainConfig& cfg, const LmCorpus& corpus, std::ostream* log) {
  LmModel model(cfg, corpus.vocab.size());
  return train_lm(model, corpus, log);
}

ClassifierModel::ClassifierModel(const TrainConfig& cfg, std::size_t vocab_size, std::size_t num_classes)
    : ClassifierModel(cfg, vocab_size, num_classes, *std::make_unique<Rng>(cfg.seed)) {}

namespace {

std::size_t embed_width(const TrainConfig& c) { return c.embed_dim ? c.embed_dim : c.hidden; }
std::size_t mlp_width(const TrainConfig& c) { return c.mlp_hidden ? c.mlp_hidden : c.hidden; }

}  // namespace

ClassifierModel::ClassifierModel(const TrainConfig& cfg, std::size_t vocab_size, std::size_t num_classes, Rng& rng)
    : cfg_(checked(cfg, vocab_size)),
      embedding_("embedding", uniform_tensor(vocab_size, embed_width(cfg), 1.0, rng)),
      cells_(cfg, embed_width(cfg), vocab_size, rng),
      w1_("mlp_W1", uniform_tensor(cfg.hidden, mlp_width(cfg), std::sqrt(3.0 / static_cast<double>(cfg.hidden)), rng)),
      b1_("mlp_b1", Tensor(1, mlp_width(cfg))),
      w2_("mlp_W2",
          uniform_tensor(mlp_width(cfg), num_classes, std::sqrt(3.0 / static_cast<double>(mlp_width(cfg))), rng)),
      b2_("mlp_b2", Tensor(1, num_classes)) {
  if (num_classes < 2) throw Error(ErrorCode::kConfigError, "need at least two classes");
}

std::vector<Parameter*> ClassifierModel::parameters() {
  std::vector<Parameter*> out{&embedding_};
  for (Parameter* p : cells_.parameters()) out.push_back(p);
  for (Parameter* p : {&w1_, &b1_, &w2_, &b2_}) out.push_back(p);
  return out;
}

Var ClassifierModel::logits(Tape& tape, const std::vector<const Example*>& batch, Rng* rng) {
  const std::size_t n = batch.size();
  const std::size_t len = n ? batch[0]->tokens.size() : 0;
  for (const Example* e : batch) {
    if (e->tokens.size() != len) throw Error(ErrorCode::kShapeError, "batch sequences differ in length");
  }
  const std::size_t vocab = embedding_.value.rows();
  Var e = tape.param(embedding_);
  if (rng && cfg_.dropout_embedding > 0.0) {
    e = ad::mul(e, tape.constant(embedding_mask(vocab, embed_width(cfg_), cfg_.dropout_embedding, *rng)));
  }
  auto states = cells_.initial(tape, n, nullptr);
  CellStack::Masks masks;
  if (rng) masks = cells_.sample_masks(n, cfg_.dropout_recurrent, *rng);
  const double vertical = rng ? cfg_.dropout_vertical : 0.0;
  Var h = tape.constant(Tensor(n, cfg_.hidden));
  std::vector<TokenId> ids(n);
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t b = 0; b < n; ++b) {
      ids[b] = batch[b]->tokens[t];
      if (ids[b] < 0 || static_cast<std::size_t>(ids[b]) >= vocab) {
        throw Error(ErrorCode::kIndexOutOfBounds, "token id " + std::to_string(ids[b]) + " outside vocabulary");
      }
    }
    h = cells_.step(tape, states, ad::embedding_lookup(e, ids), ids, rng ? &masks : nullptr, vertical, rng);
  }
  Var z = ad::tanh(ad::add(ad::matmul(h, tape.param(w1_)), tape.param(b1_)));
  if (vertical > 0.0) z = ad::mul(z, tape.constant(ad::dropout_mask(z.rows(), z.cols(), vertical, *rng)));
  return ad::add(ad::matmul(z, tape.param(w2_)), tape.param(b2_));
}

std::vector<int> ClassifierModel::predict(const std::vector<Example>& examples) {
  std::vector<int> out(examples.size(), 0);
  std::map<std::size_t, std::vector<std::size_t>> by_len;
  for (std::size_t i = 0; i < examples.size(); ++i) by_len[examples[i].tokens.size()].push_back(i);
  constexpr std::size_t kChunk = 256;
  for (const auto& [len, idx] : by_len) {
    for (std::size_t s = 0; s < idx.size(); s += kChunk) {
      std::vector<const Example*> batch;
      for (std::size_t k = s; k < std::min(idx.size(), s + kChunk); ++k) batch.push_back(&examples[idx[k]]);
      Tape tape;
      const Tensor& logits = this->logits(tape, batch, nullptr).value();
      for (std::size_t r = 0; r < batch.size(); ++r) {
        int best = 0;
        for (std::size_t c = 1; c < logits.cols(); ++c)
          if (logits(r, c) > logits(r, best)) best = static_cast<int>(c);
        out[idx[s + r]] = best;
      }
    }
  }
  return out;
}

double ClassifierModel::accuracy(const std::vector<Example>& examples) {
  if (examples.empty()) return 0.0;
  const auto pred = predict(examples);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) correct += pred[i] == examples[i].label;
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

std::vector<std::vector<const Example*>> length_batches(const std::vector<Example>& data, std::size_t batch,
                                                        Rng& rng) {
  if (batch == 0) throw Error(ErrorCode::kConfigError, "batch must be positive");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order.begin(), order.end());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return data[a].tokens.size() < data[b].tokens.size(); });
  std::vector<std::vector<const Example*>> out;
  for (std::size_t i = 0; i < order.size();) {
    const std::size_t len = data[order[i]].tokens.size();
    std::vector<const Example*> b;
    while (i < order.size() && b.size() < batch && data[order[i]].tokens.size() == len) b.push_back(&data[order[i++]]);
    out.push_back(std::move(b));
  }
  rng.shuffle(out.begin(), out.end());
  return out;
}

ClassResult train_classifier(ClassifierModel& model, const ClassCorpus& corpus, std::ostream* log) {
  const TrainConfig& cfg = model.config();
  if (corpus.train.empty()) throw Error(ErrorCode::kEmptyCorpus, "no training examples");
  Rng rng(cfg.seed ^ 0x5bd1e995ULL);
  auto opt = make_optimizer(cfg);
  const auto params = model.parameters();
  const auto& select_on = corpus.dev.empty() ? corpus.train : corpus.dev;

  ClassResult result;
  double best = -1.0;
  std::vector<Tensor> best_params = snapshot(params);
  std::size_t bad = 0;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (const auto& batch : length_batches(corpus.train, cfg.batch_size, rng)) {
      std::vector<std::int32_t> labels;
      for (const Example* e : batch) labels.push_back(e->label);
      Tape tape;
      Var loss = ad::softmax_cross_entropy(model.logits(tape, batch, &rng), labels);
      update(tape, loss, params, *opt, step++);
      loss_sum += loss.value()[0] * static_cast<double>(batch.size());
      seen += batch.size();
    }
    const double dev_acc = model.accuracy(select_on);
    result.metrics.add(epoch, "train", "loss", loss_sum / static_cast<double>(seen));
    result.metrics.add(epoch, "train", "lr", opt->lr());
    result.metrics.add(epoch, "dev", "accuracy", dev_acc);
    if (log) {
      *log << "epoch " << epoch << " train_loss " << format_value(loss_sum / static_cast<double>(seen))
           << " dev_acc " << format_value(dev_acc) << '\n';
    }
    result.epochs_run = epoch;
    if (dev_acc > best) {
      best = dev_acc;
      best_params = snapshot(params);
      result.best_epoch = epoch;
      bad = 0;
    } else {
      ++bad;
      if (bad >= cfg.patience) break;
      if (cfg.lr_halving_patience > 0 && bad % cfg.lr_halving_patience == 0) opt->set_lr(opt->lr() * 0.5);
    }
  }
  restore(params, best_params);
  result.best_dev_acc = best;
  result.train_acc = model.accuracy(corpus.train);
  result.test_acc = model.accuracy(corpus.test);
  result.metrics.add(result.best_epoch, "dev", "best_accuracy", best);
  result.metrics.add(result.best_epoch, "train", "accuracy", result.train_acc);
  result.metrics.add(result.best_epoch, "test", "accuracy", result.test_acc);
  if (log) *log << "test_acc " << format_value(result.test_acc) << '\n';
  return result;
}

ClassResult train_classifier(const TrainConfig& cfg, const ClassCorpus& corpus, std::ostream* log) {
  ClassifierModel model(cfg, corpus.vocab.size(), corpus.num_classes);
  return train_classifier(model, corpus, log);
}

SeedSummary train_classifier_seeds(const TrainConfig& cfg, const ClassCorpus& corpus,
                                   std::span<const std::uint64_t> seeds) {
  SeedSummary s;
  s.seeds.assign(seeds.begin(), seeds.end());
  s.runs.resize(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    TrainConfig c = cfg;
    c.seed = seeds[i];
    s.runs[i] = train_classifier(c, corpus);
  });
  const double n = static_cast<double>(seeds.size());
  for (const auto& r : s.runs) s.mean_test_acc += r.test_acc / n;
  if (seeds.size() > 1) {
    double ss = 0.0;
    for (const auto& r : s.runs) ss += (r.test_acc - s.mean_test_acc) * (r.test_acc - s.mean_test_acc);
    s.std_test_acc = std::sqrt(ss / (n - 1.0));
  }
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    s.summary.add("final", "test", "accuracy_seed" + std::to_string(seeds[i]), s.runs[i].test_acc);
  }
  s.summary.add("final", "test", "accuracy_mean", s.mean_test_acc);
  s.summary.add("final", "test", "accuracy_std", s.std_test_acc);
  return s;
}

TrainConfig sample_config(const TrainConfig& base, const SearchSpace& space, Rng& rng) {
  if (space.hidden_min == 0 || space.hidden_max < space.hidden_min || space.lr_min <= 0 ||
      space.lr_max < space.lr_min || space.l2_min <= 0 || space.l2_max < space.l2_min ||
      space.clip_max < space.clip_min || space.dropout_max < 0 || space.dropout_max >= 1) {
    throw Error(ErrorCode::kConfigError, "invalid search space");
  }
  TrainConfig c = base;
  c.hidden = space.hidden_min + rng.index(space.hidden_max - space.hidden_min + 1);
  c.dropout_vertical = rng.uniform(0.0, space.dropout_max);
  c.dropout_recurrent = rng.uniform(0.0, space.dropout_max);
  c.dropout_embedding = rng.uniform(0.0, space.dropout_max);
  c.lr = rng.log_uniform(space.lr_min, space.lr_max);
  c.l2 = rng.log_uniform(space.l2_min, space.l2_max);
  c.clip = rng.uniform(space.clip_min, space.clip_max);
  c.seed = rng.bits();
  return c;
}

SearchResult random_search(const TrainConfig& base, const SearchSpace& space, std::size_t trials,
                           std::uint64_t seed, const std::function<double(const TrainConfig&)>& objective) {
  if (trials == 0) throw Error(ErrorCode::kConfigError, "random search needs at least one trial");
  SearchResult r;
  Rng rng(seed);
  for (std::size_t i = 0; i < trials; ++i) r.trials.push_back(sample_config(base, space, rng));
  r.dev_scores.assign(trials, 0.0);
  parallel_for(trials, [&](std::size_t i) { r.dev_scores[i] = objective(r.trials[i]); });
  for (std::size_t i = 0; i < trials; ++i) {
    if (r.dev_scores[i] > r.dev_scores[r.best_index]) r.best_index = i;
    const TrainConfig& c = r.trials[i];
    const std::size_t id = i + 1;
    r.metrics.add(id, "search", "hidden", static_cast<double>(c.hidden));
    r.metrics.add(id, "search", "lr", c.lr);
    r.metrics.add(id, "search", "l2", c.l2);
    r.metrics.add(id, "search", "clip", c.clip);
    r.metrics.add(id, "search", "dropout_vertical", c.dropout_vertical);
    r.metrics.add(id, "search", "dropout_recurrent", c.dropout_recurrent);
    r.metrics.add(id, "search", "dropout_embedding", c.dropout_embedding);
    r.metrics.add(id, "dev", "score", r.dev_scores[i]);
  }
  r.best = r.trials[r.best_index];
  r.metrics.add("best", "dev", "trial", static_cast<double>(r.best_index + 1));
  r.metrics.add("best", "dev", "score", r.dev_scores[r.best_index]);
  return r;
}

SearchResult random_search_classify(const TrainConfig& base, const SearchSpace& space, std::size_t trials,
                                    std::uint64_t seed, const ClassCorpus& corpus) {
  return random_search(base, space, trials, seed,
                       [&](const TrainConfig& c) { return train_classifier(c, corpus).best_dev_acc; });
}

SearchResult random_search_lm(const TrainConfig& base, const SearchSpace& space, std::size_t trials,
                              std::uint64_t seed, const LmCorpus& corpus) {
  return random_search(base, space, trials, seed,
                       [&](const TrainConfig& c) { return -train_lm(c, corpus).best_dev_ppl; });
}

}  // namespace rr::harness
