// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rr/semiring.hpp"
#include "rr/wfsa.hpp"

namespace rr {

/// Dense per-symbol weight functions from which the named automata are
/// wired. Every per-symbol table has alphabet_size entries.
struct WeightTables {
  std::size_t alphabet_size = 0;
  /// mu_1..mu_n. For the QRNN-2 automaton a single optional table holds the
  /// weights of the first window (previous input = padding).
  std::vector<std::vector<double>> mu;
  /// phi, or phi_1 / phi_2.
  std::vector<std::vector<double>> phi;
  /// Epsilon weight (input independent).
  std::optional<double> gamma;
  /// Final weights rho_1, rho_2.
  std::vector<double> rho;
  /// QRNN-2 pair tables indexed [previous symbol][current symbol].
  std::vector<std::vector<double>> mu_by_prev;
  std::vector<std::vector<double>> phi_by_prev;
  /// ISAN: mu_matrix[alpha][j][i] is the weight of c_{t-1}[i] in c_t[j].
  std::vector<std::vector<std::vector<double>>> mu_matrix;
  /// ISAN bias eta[alpha][j].
  std::vector<std::vector<double>> eta;
};

/// Two states. q0 loops on every symbol with weight one, moves to q1 with
/// mu(alpha), and q1 loops with phi(alpha). lambda(q0) = rho(q1) = one.
Wfsa build_b(const WeightTables& t, Semiring s);

/// Three states: B extended by a second mu/phi stage; q2 is final.
Wfsa build_c(const WeightTables& t, Semiring s);

/// Four states combining unigram and bigram paths. q1 and q2 are final with
/// rho_1 and rho_2; q3 is reached from q0 by an epsilon arc weighted gamma
/// and moves to q2 with mu_2.
Wfsa build_f(const WeightTables& t, Semiring s);

/// 2|Sigma| + 1 states reproducing a 2-window QRNN dimension.
/// State 0 is q0, states 1..|Sigma| are p_alpha, states |Sigma|+1..2|Sigma|
/// are the final states q_alpha.
Wfsa build_qrnn2(const WeightTables& t, Semiring s);

/// n + 1 states for an n-gram RCNN dimension (n = t.mu.size(), one phi).
Wfsa build_rcnn_ngram(const WeightTables& t, Semiring s);

/// 2d states for dimension `output_dim` of an ISAN. States 0..d-1 carry the
/// hidden coordinates; states d..2d-1 are initial and supply the bias.
Wfsa build_isan(const WeightTables& t, std::size_t output_dim, Semiring s);

/// Dispatch by family name: B, C, F, qrnn2, rcnn, isan.
Wfsa build_family(std::string_view family, const WeightTables& t, Semiring s,
                  std::size_t output_dim = 0);

/// JSON encoding of WeightTables (field names as in the struct).
WeightTables tables_from_json(std::string_view json_text);
std::string tables_to_json(const WeightTables& t);

}  // namespace rr
