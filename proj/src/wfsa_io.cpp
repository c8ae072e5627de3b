// SPDX-License-Identifier: Apache-2.0
#include "rr/wfsa_io.hpp"

#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>

#include "rr/error.hpp"

namespace rr {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

std::optional<long long> to_integer(std::string_view token) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return v;
}

std::optional<double> to_double(std::string_view token) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return v;
}

std::string symbol_name(Symbol s) { return s == kEpsilon ? "eps" : std::to_string(s); }

}  // namespace

std::string format_weight(double w) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, w);
  return std::string(buf, ptr);
}

Symbol parse_symbol(std::string_view token) {
  if (token == "eps") return kEpsilon;
  if (auto v = to_integer(token); v && *v >= 0) return static_cast<Symbol>(*v);
  if (token.size() == 1 && token[0] >= 'a' && token[0] <= 'z') return token[0] - 'a';
  throw Error(ErrorCode::kParseError, "bad symbol '" + std::string(token) + "'");
}

std::vector<Symbol> parse_symbols(std::string_view text) {
  std::vector<Symbol> out;
  for (auto tok : split_fields(text)) {
    Symbol s = parse_symbol(tok);
    if (s == kEpsilon) throw Error(ErrorCode::kParseError, "eps is not an input symbol");
    out.push_back(s);
  }
  return out;
}

std::string export_text(const Wfsa& a) {
  std::ostringstream out;
  out << "WFSA " << a.num_states() << ' ' << a.alphabet_size() << ' ' << a.semiring().name() << '\n';
  for (const auto& [q, w] : a.initial_weights()) out << "I " << q << ' ' << format_weight(w) << '\n';
  for (const auto& [q, w] : a.final_weights()) out << "F " << q << ' ' << format_weight(w) << '\n';
  for (const auto& arc : a.transitions()) {
    out << "T " << arc.key.src << ' ' << arc.key.dst << ' ' << symbol_name(arc.key.label) << ' '
        << format_weight(arc.weight) << '\n';
  }
  return out.str();
}

Wfsa import_text(std::string_view text) {
  std::optional<Wfsa> result;
  std::size_t line_no = 0;
  std::size_t start = 0;
  auto fail = [&](const std::string& why) -> Error {
    return Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": " + why);
  };
  auto state_of = [&](std::string_view tok) {
    auto v = to_integer(tok);
    if (!v || *v < 0) throw fail("bad state '" + std::string(tok) + "'");
    return static_cast<StateId>(*v);
  };
  auto weight_of = [&](std::string_view tok) {
    auto v = to_double(tok);
    if (!v) throw fail("bad weight '" + std::string(tok) + "'");
    return *v;
  };

  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto f = split_fields(line);
    if (f.empty()) continue;

    if (f[0] == "WFSA") {
      if (result) throw fail("duplicate header");
      if (f.size() != 4) throw fail("header needs: WFSA <num_states> <alphabet_size> <semiring>");
      auto n = to_integer(f[1]);
      auto sigma = to_integer(f[2]);
      if (!n || *n < 0 || !sigma || *sigma < 0) throw fail("bad header sizes");
      Semiring s;
      try {
        s = Semiring::parse(f[3]);
      } catch (const Error&) {
        throw fail("unknown semiring '" + std::string(f[3]) + "'");
      }
      result.emplace(s, static_cast<std::size_t>(*n), static_cast<std::size_t>(*sigma));
      continue;
    }
    if (!result) throw fail("missing WFSA header");

    if (f[0] == "I" || f[0] == "F") {
      if (f.size() != 3) throw fail("expected: " + std::string(f[0]) + " <state> <weight>");
      if (f[0] == "I") {
        result->set_initial(state_of(f[1]), weight_of(f[2]));
      } else {
        result->set_final(state_of(f[1]), weight_of(f[2]));
      }
      continue;
    }

    std::span<const std::string_view> arc(f);
    if (f[0] == "T") arc = arc.subspan(1);
    if (arc.size() != 4) throw fail("expected: T <src> <dst> <symbol|eps> <weight>");
    Symbol label = 0;
    try {
      label = parse_symbol(arc[2]);
    } catch (const Error&) {
      throw fail("bad symbol '" + std::string(arc[2]) + "'");
    }
    result->set_transition(state_of(arc[0]), state_of(arc[1]), label, weight_of(arc[3]));
  }
  if (!result) throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": missing WFSA header");
  return std::move(*result);
}

std::string export_dot(const Wfsa& a) {
  std::ostringstream out;
  out << "digraph wfsa {\n  rankdir=LR;\n";
  for (std::size_t q = 0; q < a.num_states(); ++q) {
    const auto id = static_cast<StateId>(q);
    const bool is_final = a.final_weights().count(id) > 0;
    const bool is_initial = a.initial_weights().count(id) > 0;
    out << "  q" << q << " [shape=" << (is_final ? "doublecircle" : "circle");
    out << ", label=\"q" << q;
    if (is_initial) out << "\\nλ=" << format_weight(a.initial(id));
    if (is_final) out << "\\nρ=" << format_weight(a.final_weight(id));
    out << '"';
    if (is_initial) out << ", penwidth=2";
    out << "];\n";
  }
  for (const auto& arc : a.transitions()) {
    out << "  q" << arc.key.src << " -> q" << arc.key.dst << " [label=\""
        << (arc.key.label == kEpsilon ? std::string("ε") : std::to_string(arc.key.label)) << '/'
        << format_weight(arc.weight) << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace rr
