// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rr/autodiff.hpp"
#include "rr/cells.hpp"
#include "rr/construct.hpp"
#include "rr/wfsa.hpp"

namespace rr {

class Rng;

/// Largest alphabet for which per-symbol tables are enumerated.
inline constexpr std::size_t kMaxEnumerableVocab = 64;

struct WorstCase {
  std::vector<Symbol> string;
  std::size_t dim = 0;
  /// Prefix length (1-based time step).
  std::size_t t = 0;
};

struct EquivReport {
  std::string cell;
  std::size_t trials = 0;
  std::size_t dims_checked = 0;
  std::size_t strings_checked = 0;
  std::size_t prefixes_checked = 0;
  double max_abs_diff = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  WorstCase worst_case;
};

/// Structured text rendering, one `key: value` per line.
std::string format_report(const EquivReport& r);

/// Per-symbol weight tables for each output dimension, read off the cell's
/// gates evaluated on every row of `embeddings` (one row per symbol).
/// Throws VocabTooLarge above kMaxEnumerableVocab symbols.
std::vector<WeightTables> tables_from_cell(const Cell& cell, const ad::Tensor& embeddings);

/// The automaton for dimension `dim` built from its tables.
Wfsa automaton_for(const Cell& cell, const WeightTables& tables, std::size_t dim);

/// Applied to each built automaton before scoring (sensitivity checks).
using AutomatonHook = std::function<void(Wfsa& automaton, std::size_t dim)>;

/// Per-prefix comparison of unrolled cell states against Forward scores of
/// the per-dimension automata. A mismatch yields pass = false.
EquivReport check_equivalence(const Cell& cell, const ad::Tensor& embeddings,
                              std::span<const std::vector<Symbol>> strings, double tol,
                              const AutomatonHook& hook = {});

/// Hand-written unigram/bigram dynamic program with the epsilon shortcut,
/// compared per prefix with generic epsilon-aware Forward on build_f.
double f_dp_score_step(const WeightTables& t, std::span<const Symbol> x, std::vector<double>& prefixes);
EquivReport check_f_dp(std::span<const WeightTables> tables, std::span<const std::vector<Symbol>> strings,
                       double tol);

struct StringSampling {
  std::size_t count = 50;
  std::size_t max_len = 10;
};

/// Adversarial strings (empty, single symbol, all-same at max length, max
/// length random) followed by uniformly random ones.
std::vector<std::vector<Symbol>> sample_strings(std::size_t vocab, const StringSampling& spec, Rng& rng);

/// Redraws every parameter of the cell from a broad distribution.
void randomize_parameters(Cell& cell, Rng& rng);

struct EquivSuiteOptions {
  CellKind kind = CellKind::kRrnnB;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t hidden = 4;
  std::size_t vocab = 8;
  std::size_t input_dim = 5;
  std::size_t ngram = 2;
  Activation activation = Activation::kTanh;
  LambdaMode lambda_mode = LambdaMode::kInputDependent;
  StringSampling strings;
  /// <= 0 selects default_tolerance(kind).
  double tol = 0.0;
};

/// 1e-9 for max-plus, ISAN and QRNN-2; 1e-6 for the other real cells.
double default_tolerance(CellKind kind);

/// Draws `trials` independent cells and embeddings and checks each.
EquivReport run_equivalence_suite(const EquivSuiteOptions& opts);

}  // namespace rr
