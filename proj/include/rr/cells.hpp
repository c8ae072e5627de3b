// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rr/autodiff.hpp"
#include "rr/semiring.hpp"
#include "rr/wfsa.hpp"

namespace rr {

class Rng;

enum class CellKind { kExample1, kRrnnB, kRrnnBMaxPlus, kRrnnC, kRrnnF, kQrnn2, kRcnn, kIsan };

CellKind parse_cell_kind(std::string_view name);
std::string_view cell_kind_name(CellKind kind);
/// Semiring in which the cell's recurrence is rational.
Semiring cell_semiring(CellKind kind);

/// g in u = (1 - f) * g(W_u v + b_u).
enum class Activation { kIdentity, kTanh };

/// How the RCNN decay lambda_t is computed. Only the first two are rational;
/// kStateDependent is rejected with NotRational.
enum class LambdaMode { kConstant, kInputDependent, kStateDependent };

struct CellConfig {
  CellKind kind = CellKind::kRrnnB;
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  /// Number of input symbols; ISAN only (its parameters are per symbol).
  std::size_t vocab_size = 0;
  Activation activation = Activation::kIdentity;
  bool output_gate = false;
  /// RCNN n-gram order.
  std::size_t ngram = 2;
  LambdaMode lambda_mode = LambdaMode::kInputDependent;
};

/// Recurrent state for a batch (one row per sequence).
struct CellState {
  /// c for single-memory cells; c^(1)..c^(n) for C, F and RCNN.
  std::vector<ad::Var> memory;
  /// The rational hidden state c_t (p-mixture for F, c^(n) for C/RCNN).
  ad::Var c;
  /// Output h_t.
  ad::Var h;
  /// Previous input embedding (2-window QRNN).
  ad::Var prev_input;
  std::size_t t = 0;
};

/// Detached copy of a CellState, carried across truncated-BPTT windows.
struct CarriedState {
  std::vector<ad::Tensor> memory;
  ad::Tensor prev_input;
  std::size_t t = 0;
};

CarriedState detach(const CellState& s);

struct StepInput {
  /// Batch x input_dim embeddings for the current step.
  ad::Var v;
  /// Current symbols; required by ISAN, ignored otherwise.
  std::span<const Symbol> symbols;
};

/// A rational recurrent cell over explicit state. Parameters live in the
/// cell; steps are recorded on the caller's tape and have no side effects.
class Cell {
 public:
  virtual ~Cell() = default;
  Cell(const Cell&) = delete;
  Cell& operator=(const Cell&) = delete;

  const CellConfig& config() const { return config_; }
  CellKind kind() const { return config_.kind; }
  std::size_t hidden() const { return config_.hidden; }

  /// Zero state in the cell's semiring (0 for real, -inf for max-plus), or
  /// the carried state if given.
  CellState initial_state(ad::Tape& tape, std::size_t batch, const CarriedState* carried = nullptr) const;

  CellState step(ad::Tape& tape, const CellState& prev, const StepInput& in) const;

  /// Per-step gate and input readouts ("f", "u", "f1", "u2", "lambda",
  /// "r", "p1", ...). `v_prev` is only read by the 2-window QRNN.
  virtual std::map<std::string, ad::Var> readouts(ad::Tape& tape, ad::Var v_prev, ad::Var v) const = 0;

  std::vector<ad::Parameter*> parameters();
  ad::Parameter& param(const std::string& name);
  const ad::Parameter& param(const std::string& name) const;
  bool has_param(const std::string& name) const { return params_.count(name) > 0; }

 protected:
  explicit Cell(CellConfig config) : config_(std::move(config)) {}
  ad::Parameter& add_param(const std::string& name, std::size_t rows, std::size_t cols, Rng& rng, double scale);
  ad::Var p(ad::Tape& tape, const std::string& name) const;
  /// v W + b, or v W when `bias` is empty.
  ad::Var linear(ad::Tape& tape, ad::Var v, const std::string& weight, const std::string& bias) const;

  virtual std::size_t memory_size() const { return 1; }
  virtual void recur(ad::Tape& tape, const CellState& prev, const StepInput& in, CellState& next) const = 0;
  /// h from c: tanh(o * c) with an output gate, tanh(c) otherwise.
  virtual ad::Var output(ad::Tape& tape, ad::Var c, ad::Var v) const;
  void add_output_gate(Rng& rng);

  CellConfig config_;

 private:
  mutable std::map<std::string, ad::Parameter> params_;
};

/// Builds a cell with freshly initialised parameters.
std::unique_ptr<Cell> make_cell(const CellConfig& config, Rng& rng);

/// Runs the cell over one sequence (batch of 1) from the zero state, or from
/// `carried`, and returns the state after every step.
std::vector<CellState> unroll(const Cell& cell, ad::Tape& tape, ad::Var embeddings, std::span<const Symbol> x,
                              const CarriedState* carried = nullptr);

}  // namespace rr
