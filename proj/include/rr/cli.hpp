// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

/// Declared `section.key` settings with defaults, overlaid by an INI file and
/// by `section.key=value` overrides. Undeclared keys raise ConfigError.
class Config {
 public:
  void declare(const std::string& key, const std::string& default_value);
  bool has(const std::string& key) const;

  void load_file(const std::string& path);
  void load_string(const std::string& ini_text);
  /// Accepts `section.key=value`.
  void apply_override(std::string_view assignment);
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  /// Comma-separated unsigned integers.
  std::vector<std::uint64_t> get_u64_list(const std::string& key) const;

  /// Resolved settings, grouped by section in declaration order.
  std::string to_ini() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace rr::cli
