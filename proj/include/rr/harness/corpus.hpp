// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace rr::harness {

using TokenId = std::int32_t;

/// Token <-> id bijection. Corpus tokens come first (frequency descending,
/// ties lexicographic), then the specials <unk>, <eos>, <pad>.
class Vocab {
 public:
  static constexpr std::string_view kUnkToken = "<unk>";
  static constexpr std::string_view kEosToken = "<eos>";
  static constexpr std::string_view kPadToken = "<pad>";

  Vocab() : Vocab(std::vector<std::string>{}) {}
  /// Tokens in id order; specials are appended.
  explicit Vocab(const std::vector<std::string>& tokens);
  static Vocab from_counts(const std::map<std::string, std::size_t>& counts);

  std::size_t size() const { return tokens_.size(); }
  /// Unknown tokens map to unk().
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const { return ids_.count(std::string(token)) > 0; }
  const std::string& token(TokenId id) const;
  TokenId unk() const { return unk_; }
  TokenId eos() const { return eos_; }
  TokenId pad() const { return pad_; }
  static bool is_special(std::string_view token);

  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, TokenId> ids_;
  TokenId unk_ = 0;
  TokenId eos_ = 0;
  TokenId pad_ = 0;
};

/// Language-modeling data: each split is one long id stream.
struct LmCorpus {
  Vocab vocab;
  std::vector<TokenId> train;
  std::vector<TokenId> dev;
  std::vector<TokenId> test;
};

struct Example {
  std::vector<TokenId> tokens;
  int label = 0;
};

struct ClassCorpus {
  Vocab vocab;
  std::size_t num_classes = 2;
  std::vector<Example> train;
  std::vector<Example> dev;
  std::vector<Example> test;
};

/// Whitespace tokens per line with <eos> appended to each non-blank line.
std::vector<std::vector<std::string>> read_lm_lines(std::istream& in);
/// `label<TAB>text` lines; blank lines are skipped. Malformed lines raise
/// ParseError naming the line number.
std::vector<std::pair<int, std::vector<std::string>>> read_labeled_lines(std::istream& in);

/// Vocab from `train`, OOV in dev/test -> unk. Empty dev/test texts are
/// filled by a contiguous 80/10/10 split of train. Throws EmptyCorpus.
LmCorpus ingest_lm(std::string_view train, std::string_view dev = {}, std::string_view test = {});
/// As ingest_lm; unsplit data is shuffled under `split_seed` then split 80/10/10.
ClassCorpus ingest_classify(std::string_view train, std::string_view dev = {}, std::string_view test = {},
                            std::uint64_t split_seed = 0);

/// File variants (empty path = absent). Throws IoError on unreadable files.
LmCorpus ingest_lm_files(const std::string& train, const std::string& dev, const std::string& test);
ClassCorpus ingest_classify_files(const std::string& train, const std::string& dev, const std::string& test,
                                  std::uint64_t split_seed = 0);

std::string read_file(const std::string& path);

/// First-order Markov source: symbol i is followed by (i + offsets[k]) mod
/// vocab with probability probs[k].
struct BigramLmSpec {
  std::size_t vocab = 32;
  std::vector<std::size_t> offsets{1, 5, 11};
  std::vector<double> probs{0.6, 0.3, 0.1};
  std::size_t train_tokens = 50000;
  std::size_t dev_tokens = 5000;
  std::size_t test_tokens = 5000;
  std::uint64_t seed = 1;
};

struct SyntheticLm {
  LmCorpus corpus;
  /// Stationary distribution of the source.
  std::vector<double> stationary;
  /// Entropy (nats) of the stationary unigram distribution; exp of it is
  /// the best perplexity any context-free predictor can reach.
  double unigram_entropy = 0.0;
  /// Entropy rate (nats per token) of the source.
  double entropy_rate = 0.0;
};

/// Stationary distribution of the source's transition matrix.
std::vector<double> bigram_stationary(const BigramLmSpec& spec);
SyntheticLm make_bigram_lm(const BigramLmSpec& spec);

/// Binary task: label 1 iff the bigram (x, y) occurs. A fraction of the
/// negatives contain both x and y, never adjacent in that order.
struct BigramDetectSpec {
  std::size_t vocab = 16;
  TokenId x = 0;
  TokenId y = 1;
  std::size_t min_len = 8;
  std::size_t max_len = 16;
  std::size_t train = 5000;
  std::size_t dev = 500;
  std::size_t test = 500;
  double hard_negative_fraction = 0.5;
  std::uint64_t seed = 1;
};

bool contains_bigram(const std::vector<TokenId>& s, TokenId x, TokenId y);
ClassCorpus make_bigram_detection(const BigramDetectSpec& spec);

/// Permutes the train and dev labels (null-model control); test is untouched.
void shuffle_labels(ClassCorpus& corpus, std::uint64_t seed);

}  // namespace rr::harness
