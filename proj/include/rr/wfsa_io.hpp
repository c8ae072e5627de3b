// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rr/wfsa.hpp"

namespace rr {

// Line-oriented text format:
//
//   WFSA <num_states> <alphabet_size> <real|maxplus>
//   I <state> <weight>
//   F <state> <weight>
//   T <src> <dst> <symbol|eps> <weight>
//
// A line with exactly four fields and no tag is read as a transition.
// Symbols are decimal ids, `eps`, or a single lowercase letter (a = 0,
// b = 1, ...). Weights accept `-inf`. Blank lines and `#` comments are
// ignored.
std::string export_text(const Wfsa& a);
Wfsa import_text(std::string_view text);

/// Graphviz rendering: bold outline on initial states, double circles on
/// final states, arcs labelled `symbol/weight`.
std::string export_dot(const Wfsa& a);

/// Parses one symbol token as accepted by the text format.
Symbol parse_symbol(std::string_view token);
/// Parses a whitespace-separated symbol string ("a a b" or "0 0 1").
std::vector<Symbol> parse_symbols(std::string_view text);

/// Shortest decimal form that reads back to the same double.
std::string format_weight(double w);

}  // namespace rr
