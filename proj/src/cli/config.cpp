// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <sstream>

#include "rr/cli.hpp"
#include "rr/error.hpp"

namespace rr::cli {

namespace pt = boost::property_tree;

void Config::declare(const std::string& key, const std::string& default_value) {
  if (key.find('.') == std::string::npos) throw Error(ErrorCode::kConfigError, "key needs a section: " + key);
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = default_value;
      return;
    }
  }
  entries_.emplace_back(key, default_value);
}

bool Config::has(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
}

void Config::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  throw Error(ErrorCode::kConfigError, "unknown key '" + key + "'");
}

namespace {

void load_tree(Config& cfg, const pt::ptree& tree) {
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw Error(ErrorCode::kConfigError, "setting '" + section + "' outside a section");
    for (const auto& [key, value] : body) cfg.set(section + "." + key, value.data());
  }
}

}  // namespace

void Config::load_file(const std::string& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  load_tree(*this, tree);
}

void Config::load_string(const std::string& ini_text) {
  std::istringstream in(ini_text);
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::kConfigError, e.what());
  }
  load_tree(*this, tree);
}

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw Error(ErrorCode::kConfigError, "override '" + std::string(assignment) + "' is not section.key=value");
  }
  set(std::string(assignment.substr(0, eq)), std::string(assignment.substr(eq + 1)));
}

const std::string& Config::get(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  throw Error(ErrorCode::kConfigError, "unknown key '" + key + "'");
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw Error(ErrorCode::kConfigError, key + ": '" + text + "' is not a valid number");
  }
  return value;
}

}  // namespace

double Config::get_double(const std::string& key) const { return parse_number<double>(key, get(key)); }
std::size_t Config::get_size(const std::string& key) const { return parse_number<std::size_t>(key, get(key)); }
std::uint64_t Config::get_u64(const std::string& key) const { return parse_number<std::uint64_t>(key, get(key)); }

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorCode::kConfigError, key + ": '" + v + "' is not true/false");
}

std::vector<std::uint64_t> Config::get_u64_list(const std::string& key) const {
  std::vector<std::uint64_t> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    out.push_back(parse_number<std::uint64_t>(key, item));
  }
  if (out.empty()) throw Error(ErrorCode::kConfigError, key + ": empty list");
  return out;
}

std::string Config::to_ini() const {
  pt::ptree tree;
  for (const auto& [k, v] : entries_) {
    const auto dot = k.find('.');
    tree.put(pt::ptree::path_type(k.substr(0, dot) + '/' + k.substr(dot + 1), '/'), v);
  }
  std::ostringstream out;
  pt::write_ini(out, tree);
  return out.str();
}

}  // namespace rr::cli
