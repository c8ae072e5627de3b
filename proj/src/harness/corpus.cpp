// SPDX-License-Identifier: Apache-2.0
#include "rr/harness/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rr/error.hpp"
#include "rr/random.hpp"

namespace rr::harness {

Vocab::Vocab(const std::vector<std::string>& tokens) {
  for (const auto& t : tokens) {
    if (is_special(t)) continue;
    if (ids_.count(t)) throw Error(ErrorCode::kConfigError, "duplicate vocab token '" + t + "'");
    ids_[t] = static_cast<TokenId>(tokens_.size());
    tokens_.push_back(t);
  }
  for (auto s : {kUnkToken, kEosToken, kPadToken}) {
    ids_[std::string(s)] = static_cast<TokenId>(tokens_.size());
    tokens_.emplace_back(s);
  }
  unk_ = ids_.at(std::string(kUnkToken));
  eos_ = ids_.at(std::string(kEosToken));
  pad_ = ids_.at(std::string(kPadToken));
}

Vocab Vocab::from_counts(const std::map<std::string, std::size_t>& counts) {
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
  // map order is lexicographic; a stable sort keeps it among equal counts
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  tokens.reserve(items.size());
  for (auto& [t, c] : items) tokens.push_back(t);
  return Vocab(tokens);
}

TokenId Vocab::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? unk_ : it->second;
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw Error(ErrorCode::kIndexOutOfBounds, "token id " + std::to_string(id));
  }
  return tokens_[id];
}

bool Vocab::is_special(std::string_view token) {
  return token == kUnkToken || token == kEosToken || token == kPadToken;
}

namespace {

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::vector<std::vector<std::string>> read_lm_lines(std::istream& in) {
  std::vector<std::vector<std::string>> lines;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    toks.emplace_back(Vocab::kEosToken);
    lines.push_back(std::move(toks));
  }
  return lines;
}

std::vector<std::pair<int, std::vector<std::string>>> read_labeled_lines(std::istream& in) {
  std::vector<std::pair<int, std::vector<std::string>>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(lineno) + ": expected label<TAB>text");
    }
    int label = 0;
    const char* first = line.data();
    const char* last = line.data() + tab;
    auto [ptr, ec] = std::from_chars(first, last, label);
    if (ec != std::errc() || ptr != last || label < 0) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(lineno) + ": bad label '" + line.substr(0, tab) + "'");
    }
    out.emplace_back(label, split_ws(std::string_view(line).substr(tab + 1)));
  }
  return out;
}

namespace {

template <typename T>
void split_80_10_10(std::vector<T>& train, std::vector<T>& dev, std::vector<T>& test) {
  const std::size_t n = train.size();
  const std::size_t n_dev = n / 10;
  const std::size_t n_test = n / 10;
  const std::size_t n_train = n - n_dev - n_test;
  dev.assign(train.begin() + n_train, train.begin() + n_train + n_dev);
  test.assign(train.begin() + n_train + n_dev, train.end());
  train.resize(n_train);
}

std::vector<TokenId> flatten(const Vocab& v, const std::vector<std::vector<std::string>>& lines) {
  std::vector<TokenId> out;
  for (const auto& l : lines)
    for (const auto& t : l) out.push_back(v.id(t));
  return out;
}

std::vector<std::vector<std::string>> lm_lines(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_lm_lines(in);
}

std::vector<std::pair<int, std::vector<std::string>>> labeled(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_labeled_lines(in);
}

}  // namespace

LmCorpus ingest_lm(std::string_view train, std::string_view dev, std::string_view test) {
  auto tr = lm_lines(train);
  auto dv = lm_lines(dev);
  auto te = lm_lines(test);
  if (dev.empty() && test.empty()) split_80_10_10(tr, dv, te);
  std::map<std::string, std::size_t> counts;
  for (const auto& l : tr)
    for (const auto& t : l)
      if (!Vocab::is_special(t)) ++counts[t];
  if (counts.empty()) throw Error(ErrorCode::kEmptyCorpus, "training text has no tokens");
  LmCorpus c;
  c.vocab = Vocab::from_counts(counts);
  c.train = flatten(c.vocab, tr);
  c.dev = flatten(c.vocab, dv);
  c.test = flatten(c.vocab, te);
  return c;
}

ClassCorpus ingest_classify(std::string_view train, std::string_view dev, std::string_view test,
                            std::uint64_t split_seed) {
  auto tr = labeled(train);
  auto dv = labeled(dev);
  auto te = labeled(test);
  if (dev.empty() && test.empty()) {
    Rng rng(split_seed);
    rng.shuffle(tr.begin(), tr.end());
    split_80_10_10(tr, dv, te);
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& [label, toks] : tr)
    for (const auto& t : toks)
      if (!Vocab::is_special(t)) ++counts[t];
  if (tr.empty() || counts.empty()) throw Error(ErrorCode::kEmptyCorpus, "training text has no examples");
  ClassCorpus c;
  c.vocab = Vocab::from_counts(counts);
  int max_label = 1;
  auto convert = [&](const auto& lines, std::vector<Example>& out) {
    for (const auto& [label, toks] : lines) {
      Example e;
      e.label = label;
      max_label = std::max(max_label, label);
      for (const auto& t : toks) e.tokens.push_back(c.vocab.id(t));
      out.push_back(std::move(e));
    }
  };
  convert(tr, c.train);
  convert(dv, c.dev);
  convert(te, c.test);
  c.num_classes = static_cast<std::size_t>(max_label) + 1;
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string maybe_read(const std::string& path) { return path.empty() ? std::string() : read_file(path); }

}  // namespace

LmCorpus ingest_lm_files(const std::string& train, const std::string& dev, const std::string& test) {
  return ingest_lm(read_file(train), maybe_read(dev), maybe_read(test));
}

ClassCorpus ingest_classify_files(const std::string& train, const std::string& dev, const std::string& test,
                                  std::uint64_t split_seed) {
  return ingest_classify(read_file(train), maybe_read(dev), maybe_read(test), split_seed);
}

namespace {

void check_spec(const BigramLmSpec& s) {
  if (s.vocab == 0 || s.offsets.empty() || s.offsets.size() != s.probs.size()) {
    throw Error(ErrorCode::kConfigError, "bigram source needs a vocab and matching offsets/probs");
  }
  double total = 0.0;
  for (double p : s.probs) {
    if (p < 0.0) throw Error(ErrorCode::kConfigError, "negative successor probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorCode::kConfigError, "successor probabilities must sum to 1");
}

std::string symbol_name(std::size_t i) {
  std::string s = std::to_string(i);
  return "w" + std::string(s.size() < 2 ? 2 - s.size() : 0, '0') + s;
}

}  // namespace

std::vector<double> bigram_stationary(const BigramLmSpec& spec) {
  check_spec(spec);
  const std::size_t v = spec.vocab;
  std::vector<double> pi(v, 1.0 / static_cast<double>(v));
  std::vector<double> next(v);
  // Lazy chain (I + P) / 2 has the same stationary distribution and is
  // aperiodic, so power iteration converges.
  for (int iter = 0; iter < 100000; ++iter) {
    for (std::size_t i = 0; i < v; ++i) next[i] = 0.5 * pi[i];
    for (std::size_t i = 0; i < v; ++i)
      for (std::size_t k = 0; k < spec.offsets.size(); ++k) next[(i + spec.offsets[k]) % v] += 0.5 * pi[i] * spec.probs[k];
    double delta = 0.0;
    for (std::size_t i = 0; i < v; ++i) delta = std::max(delta, std::abs(next[i] - pi[i]));
    pi.swap(next);
    if (delta < 1e-16) break;
  }
  return pi;
}

SyntheticLm make_bigram_lm(const BigramLmSpec& spec) {
  SyntheticLm out;
  out.stationary = bigram_stationary(spec);
  const std::size_t v = spec.vocab;
  for (double p : out.stationary)
    if (p > 0.0) out.unigram_entropy -= p * std::log(p);
  // Successor probabilities per source symbol (offsets may collide mod v).
  std::vector<std::map<std::size_t, double>> succ(v);
  for (std::size_t i = 0; i < v; ++i)
    for (std::size_t k = 0; k < spec.offsets.size(); ++k) succ[i][(i + spec.offsets[k]) % v] += spec.probs[k];
  for (std::size_t i = 0; i < v; ++i)
    for (auto& [j, p] : succ[i])
      if (p > 0.0) out.entropy_rate -= out.stationary[i] * p * std::log(p);

  std::vector<std::string> names;
  for (std::size_t i = 0; i < v; ++i) names.push_back(symbol_name(i));
  out.corpus.vocab = Vocab(names);

  Rng rng(spec.seed);
  auto draw = [&](const std::vector<double>& probs) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      acc += probs[k];
      if (u < acc) return k;
    }
    return probs.size() - 1;
  };
  auto chain = [&](std::size_t n) {
    std::vector<TokenId> s;
    s.reserve(n);
    if (n == 0) return s;
    std::size_t cur = draw(out.stationary);
    s.push_back(static_cast<TokenId>(cur));
    while (s.size() < n) {
      cur = (cur + spec.offsets[draw(spec.probs)]) % v;
      s.push_back(static_cast<TokenId>(cur));
    }
    return s;
  };
  out.corpus.train = chain(spec.train_tokens);
  out.corpus.dev = chain(spec.dev_tokens);
  out.corpus.test = chain(spec.test_tokens);
  return out;
}

bool contains_bigram(const std::vector<TokenId>& s, TokenId x, TokenId y) {
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i - 1] == x && s[i] == y) return true;
  return false;
}

ClassCorpus make_bigram_detection(const BigramDetectSpec& spec) {
  if (spec.vocab < 3 || spec.x == spec.y || spec.min_len < 3 || spec.max_len < spec.min_len ||
      static_cast<std::size_t>(std::max(spec.x, spec.y)) >= spec.vocab || spec.x < 0 || spec.y < 0) {
    throw Error(ErrorCode::kConfigError, "invalid bigram-detection spec");
  }
  ClassCorpus c;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < spec.vocab; ++i) names.push_back(symbol_name(i));
  c.vocab = Vocab(names);
  c.num_classes = 2;
  Rng rng(spec.seed);

  auto example = [&]() {
    Example e;
    e.label = rng.bernoulli(0.5) ? 1 : 0;
    const bool hard = e.label == 0 && rng.bernoulli(spec.hard_negative_fraction);
    for (;;) {
      const std::size_t n = spec.min_len + rng.index(spec.max_len - spec.min_len + 1);
      std::vector<TokenId> s(n);
      for (auto& t : s) t = static_cast<TokenId>(rng.index(spec.vocab));
      if (e.label == 1) {
        const std::size_t p = rng.index(n - 1);
        s[p] = spec.x;
        s[p + 1] = spec.y;
      } else if (hard) {
        const std::size_t i = rng.index(n);
        const std::size_t j = rng.index(n);
        if (i == j || j + 1 == i) continue;
        s[i] = spec.y;
        s[j] = spec.x;
      }
      if (contains_bigram(s, spec.x, spec.y) == (e.label == 1)) {
        e.tokens = std::move(s);
        return e;
      }
    }
  };
  for (std::size_t i = 0; i < spec.train; ++i) c.train.push_back(example());
  for (std::size_t i = 0; i < spec.dev; ++i) c.dev.push_back(example());
  for (std::size_t i = 0; i < spec.test; ++i) c.test.push_back(example());
  return c;
}

void shuffle_labels(ClassCorpus& corpus, std::uint64_t seed) {
  Rng rng(seed);
  for (auto* split : {&corpus.train, &corpus.dev}) {
    std::vector<int> labels;
    for (const auto& e : *split) labels.push_back(e.label);
    rng.shuffle(labels.begin(), labels.end());
    for (std::size_t i = 0; i < split->size(); ++i) (*split)[i].label = labels[i];
  }
}

}  // namespace rr::harness
