#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "edist/parallel.hpp"

namespace edist::cli {

using nlohmann::json;

/// Bad command line or config file; maps to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ValueType { kInt, kUint64, kReal, kString, kBool, kRealList, kIntList, kStringList };

/// One configurable key of a subcommand.
struct Param {
  std::string key;
  ValueType type = ValueType::kReal;
  /// Default value; null means "no default".
  json fallback;
  std::string help;
  bool required = false;
  bool positional = false;
  /// Recorded in the output's provenance block. Execution knobs (threads,
  /// output paths) are not, so that artifacts do not depend on them.
  bool echo = true;
  std::vector<std::string> choices;
  std::optional<double> lo, hi;
  bool lo_open = false, hi_open = false;

  Param& in_open(double a, double b) { lo = a; hi = b; lo_open = hi_open = true; return *this; }
  Param& at_least(double a) { lo = a; return *this; }
  Param& above(double a) { lo = a; lo_open = true; return *this; }
  Param& one_of(std::vector<std::string> c) { choices = std::move(c); return *this; }
  Param& as_positional() { positional = true; return *this; }
  Param& mandatory() { required = true; return *this; }
  Param& hidden_from_echo() { echo = false; return *this; }
};

Param real_param(std::string key, json fallback, std::string help);
Param int_param(std::string key, json fallback, std::string help);
Param string_param(std::string key, json fallback, std::string help);
Param bool_param(std::string key, bool fallback, std::string help);
Param real_list_param(std::string key, json fallback, std::string help);
Param int_list_param(std::string key, json fallback, std::string help);
Param string_list_param(std::string key, json fallback, std::string help);

/// Keys every subcommand accepts: seed, threads, output, csv, tolerance.
std::vector<Param> global_params();

/// "n_list" -> "--n-list".
std::string flag_name(const std::string& key);

/// Resolved configuration of one run.
class Config {
 public:
  Config(std::string command, json values, std::vector<Param> schema);

  const std::string& command() const noexcept { return command_; }
  bool has(const std::string& key) const;
  double real(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::uint64_t seed() const;
  std::string str(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::vector<long long> integers(const std::string& key) const;
  std::vector<std::size_t> counts(const std::string& key) const;
  std::vector<std::string> strings(const std::string& key) const;
  /// Optional real: the value if set, otherwise `fallback`.
  double real_or(const std::string& key, double fallback) const;

  const Executor& executor() const { return executor_; }
  /// Values of every echoed key (sorted by key).
  json provenance() const;

 private:
  const json& at(const std::string& key) const;
  std::string command_;
  json values_;
  std::vector<Param> schema_;
  Executor executor_;
};

/// Merges defaults, the optional config file and command-line values (in
/// increasing precedence) and validates the result. `flags` holds the raw
/// text of every option given on the command line, keyed by param key.
Config resolve_config(const std::string& command, const std::vector<Param>& schema,
                      const std::optional<std::string>& config_file,
                      const std::vector<std::pair<std::string, std::string>>& flags);

}  // namespace edist::cli
