// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rr/autodiff.hpp"
#include "rr/cells.hpp"
#include "rr/harness/corpus.hpp"
#include "rr/harness/metrics.hpp"
#include "rr/optim.hpp"

namespace rr {
class Rng;
}

namespace rr::harness {

enum class OptimizerKind { kSgd, kAdam };
OptimizerKind parse_optimizer(std::string_view name);
std::string_view optimizer_name(OptimizerKind kind);

struct TrainConfig {
  CellKind cell = CellKind::kRrnnF;
  std::size_t layers = 1;
  std::size_t hidden = 64;
  /// Classification embedding width; 0 means `hidden`. LM embeddings are
  /// tied to the output layer and always `hidden` wide.
  std::size_t embed_dim = 0;
  /// Width of the classifier MLP's hidden layer; 0 means `hidden`.
  std::size_t mlp_hidden = 0;
  std::size_t bptt_len = 35;
  std::size_t batch_size = 20;
  OptimizerKind optimizer = OptimizerKind::kSgd;
  double lr = 0.5;
  double l2 = 0.0;
  double clip = 5.0;
  double dropout_vertical = 0.0;
  double dropout_recurrent = 0.0;
  double dropout_embedding = 0.0;
  std::size_t epochs = 10;
  /// Stop after this many epochs without a dev improvement.
  std::size_t patience = 30;
  /// Halve the learning rate after this many epochs without improvement.
  std::size_t lr_halving_patience = 10;
  bool output_gate = true;
  Activation activation = Activation::kTanh;
  std::size_t ngram = 2;
  LambdaMode lambda_mode = LambdaMode::kInputDependent;
  std::uint64_t seed = 1;

  /// Throws ConfigError for non-positive sizes or rates outside [0, 1].
  void validate() const;
};

/// SGD lr 17.5 on the mean per-token loss (0.5 per token summed over a
/// 35-step window), output gates on, lr halving after one flat epoch.
TrainConfig default_lm_config();
/// Adam lr 1e-3, no output gate, early stopping 30, lr halving 10.
TrainConfig default_classify_config();

std::unique_ptr<ad::Optimizer> make_optimizer(const TrainConfig& cfg);

/// Stack of cells: layer l's h sequence is layer l+1's input.
class CellStack {
 public:
  CellStack(const TrainConfig& cfg, std::size_t input_dim, std::size_t vocab, Rng& rng);

  std::size_t size() const { return layers_.size(); }
  Cell& layer(std::size_t i) { return *layers_[i]; }
  const Cell& layer(std::size_t i) const { return *layers_[i]; }
  std::vector<ad::Parameter*> parameters();

  /// Per-sequence dropout masks, fixed over the time steps of one window.
  struct Masks {
    std::vector<ad::Tensor> recurrent;
  };
  Masks sample_masks(std::size_t batch, double p_recurrent, Rng& rng) const;

  std::vector<CellState> initial(ad::Tape& tape, std::size_t batch, const std::vector<CarriedState>* carry) const;
  /// One time step through every layer; returns the top layer's h.
  /// `vertical` > 0 applies fresh dropout to each layer's output.
  ad::Var step(ad::Tape& tape, std::vector<CellState>& states, ad::Var v, std::span<const Symbol> symbols,
               const Masks* masks, double vertical, Rng* rng) const;

 private:
  std::vector<std::unique_ptr<Cell>> layers_;
};

/// Recurrent language model with tied input/output embeddings.
class LmModel {
 public:
  /// Parameters drawn from Rng(cfg.seed).
  LmModel(const TrainConfig& cfg, std::size_t vocab_size);
  LmModel(const TrainConfig& cfg, std::size_t vocab_size, Rng& rng);

  const TrainConfig& config() const { return cfg_; }
  std::size_t vocab_size() const { return embedding_.value.rows(); }
  ad::Parameter& embedding() { return embedding_; }
  ad::Parameter& output_bias() { return output_bias_; }
  CellStack& cells() { return cells_; }
  std::vector<ad::Parameter*> parameters();

  /// Logits for hidden rows h: h E^T + b, with E the shared embedding.
  ad::Var logits(ad::Tape& tape, ad::Var h);

 private:
  TrainConfig cfg_;
  ad::Parameter embedding_;
  ad::Parameter output_bias_;
  CellStack cells_;
};

struct LmEval {
  double nll_sum = 0.0;
  std::size_t tokens = 0;
  double mean_nll() const { return tokens ? nll_sum / static_cast<double>(tokens) : 0.0; }
  double perplexity() const;
};

/// exp(mean NLL).
double perplexity(double nll_sum, std::size_t tokens);

/// Splits a stream into `batch` contiguous rows of equal length (the tail
/// that does not divide evenly is dropped).
std::vector<std::vector<TokenId>> batchify(std::span<const TokenId> stream, std::size_t batch);

/// Scores a stream with windows of `bptt` steps, carrying state across
/// windows. Dropout off.
LmEval evaluate_lm(LmModel& model, std::span<const TokenId> stream, std::size_t bptt, std::size_t batch = 1);

/// Mean next-token loss over one window covering all of `stream` (batch 1,
/// zero state, no dropout).
ad::Var lm_sequence_loss(LmModel& model, ad::Tape& tape, std::span<const TokenId> stream);

struct LmResult {
  Metrics metrics;
  double best_dev_ppl = 0.0;
  double test_ppl = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  std::size_t steps = 0;
};

/// Truncated BPTT over cfg.batch_size contiguous streams; per-epoch train
/// loss, dev perplexity and lr go to the metrics. The best-dev parameters
/// are restored before the test evaluation. Throws NumericalError naming
/// the step on a non-finite loss or gradient.
LmResult train_lm(LmModel& model, const LmCorpus& corpus, std::ostream* log = nullptr);
LmResult train_lm(const TrainConfig& cfg, const LmCorpus& corpus, std::ostream* log = nullptr);

/// Final hidden state -> tanh MLP -> class logits.
class ClassifierModel {
 public:
  ClassifierModel(const TrainConfig& cfg, std::size_t vocab_size, std::size_t num_classes);
  ClassifierModel(const TrainConfig& cfg, std::size_t vocab_size, std::size_t num_classes, Rng& rng);

  const TrainConfig& config() const { return cfg_; }
  std::vector<ad::Parameter*> parameters();

  /// Logits for equally long sequences (one row each). With `rng` set,
  /// training-time dropout is applied.
  ad::Var logits(ad::Tape& tape, const std::vector<const Example*>& batch, Rng* rng);
  std::vector<int> predict(const std::vector<Example>& examples);
  double accuracy(const std::vector<Example>& examples);

 private:
  TrainConfig cfg_;
  ad::Parameter embedding_;
  CellStack cells_;
  ad::Parameter w1_, b1_, w2_, b2_;
};

/// Shuffled batches of equally long examples.
std::vector<std::vector<const Example*>> length_batches(const std::vector<Example>& data, std::size_t batch,
                                                        Rng& rng);

struct ClassResult {
  Metrics metrics;
  double best_dev_acc = 0.0;
  double test_acc = 0.0;
  double train_acc = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

ClassResult train_classifier(ClassifierModel& model, const ClassCorpus& corpus, std::ostream* log = nullptr);
ClassResult train_classifier(const TrainConfig& cfg, const ClassCorpus& corpus, std::ostream* log = nullptr);

struct SeedSummary {
  std::vector<std::uint64_t> seeds;
  std::vector<ClassResult> runs;
  double mean_test_acc = 0.0;
  /// Sample standard deviation (n - 1).
  double std_test_acc = 0.0;
  /// Per-seed rows tagged `seed<k>` plus mean and std rows.
  Metrics summary;
};

/// Independent runs with cfg.seed replaced by each seed; may run
/// concurrently (see worker_count).
SeedSummary train_classifier_seeds(const TrainConfig& cfg, const ClassCorpus& corpus,
                                   std::span<const std::uint64_t> seeds);

/// Bounds of the random hyperparameter search.
struct SearchSpace {
  std::size_t hidden_min = 100;
  std::size_t hidden_max = 300;
  double dropout_max = 0.5;
  double lr_min = 1e-4;
  double lr_max = 1e-2;
  double l2_min = 1e-7;
  double l2_max = 1e-5;
  double clip_min = 1.0;
  double clip_max = 5.0;
};

/// A copy of `base` with hidden, dropouts, lr, l2 and clip drawn from the
/// space (lr and l2 log-uniform) and a fresh seed.
TrainConfig sample_config(const TrainConfig& base, const SearchSpace& space, Rng& rng);

struct SearchResult {
  std::vector<TrainConfig> trials;
  /// Dev score per trial; higher is better.
  std::vector<double> dev_scores;
  std::size_t best_index = 0;
  TrainConfig best;
  Metrics metrics;
};

/// `objective` trains one config and returns its dev score (higher is
/// better). Trials are sampled up front, so the sequence depends only on
/// the seed. Throws ConfigError for zero trials.
SearchResult random_search(const TrainConfig& base, const SearchSpace& space, std::size_t trials,
                           std::uint64_t seed, const std::function<double(const TrainConfig&)>& objective);

/// Classifier objective: best dev accuracy.
SearchResult random_search_classify(const TrainConfig& base, const SearchSpace& space, std::size_t trials,
                                    std::uint64_t seed, const ClassCorpus& corpus);
/// LM objective: negative best dev perplexity.
SearchResult random_search_lm(const TrainConfig& base, const SearchSpace& space, std::size_t trials,
                              std::uint64_t seed, const LmCorpus& corpus);

}  // namespace rr::harness
