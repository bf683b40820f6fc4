#include "cli_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace edist::cli {
namespace {

Param make(std::string key, ValueType type, json fallback, std::string help) {
  Param p;
  p.key = std::move(key);
  p.type = type;
  p.fallback = std::move(fallback);
  p.help = std::move(help);
  return p;
}

bool is_list(ValueType t) {
  return t == ValueType::kRealList || t == ValueType::kIntList || t == ValueType::kStringList;
}

ValueType element_type(ValueType t) {
  switch (t) {
    case ValueType::kRealList: return ValueType::kReal;
    case ValueType::kIntList: return ValueType::kInt;
    case ValueType::kStringList: return ValueType::kString;
    default: return t;
  }
}

std::string type_name(ValueType t) {
  switch (t) {
    case ValueType::kInt: return "an integer";
    case ValueType::kUint64: return "a nonnegative 64-bit integer";
    case ValueType::kReal: return "a number";
    case ValueType::kString: return "a string";
    case ValueType::kBool: return "a boolean";
    case ValueType::kRealList: return "a list of numbers";
    case ValueType::kIntList: return "a list of integers";
    case ValueType::kStringList: return "a list of strings";
  }
  return "a value";
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void check_range(const Param& p, double v, const std::string& path) {
  if (p.lo && (p.lo_open ? !(v > *p.lo) : !(v >= *p.lo))) {
    throw ConfigError(path + ": must be " + (p.lo_open ? "> " : ">= ") + fmt(*p.lo) + ", got " + fmt(v));
  }
  if (p.hi && (p.hi_open ? !(v < *p.hi) : !(v <= *p.hi))) {
    throw ConfigError(path + ": must be " + (p.hi_open ? "< " : "<= ") + fmt(*p.hi) + ", got " + fmt(v));
  }
}

// Validates one scalar JSON value and returns it in canonical form.
json scalar_from_json(const Param& p, ValueType t, const json& v, const std::string& path) {
  switch (t) {
    case ValueType::kInt:
      if (!v.is_number_integer()) throw ConfigError(path + ": expected " + type_name(t));
      check_range(p, static_cast<double>(v.get<long long>()), path);
      return v.get<long long>();
    case ValueType::kUint64:
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
        throw ConfigError(path + ": expected " + type_name(t));
      }
      return v.get<std::uint64_t>();
    case ValueType::kReal: {
      if (!v.is_number()) throw ConfigError(path + ": expected " + type_name(t));
      const double x = v.get<double>();
      check_range(p, x, path);
      return x;
    }
    case ValueType::kString: {
      if (!v.is_string()) throw ConfigError(path + ": expected " + type_name(t));
      const auto s = v.get<std::string>();
      if (!p.choices.empty() && std::find(p.choices.begin(), p.choices.end(), s) == p.choices.end()) {
        std::string all;
        for (const auto& c : p.choices) all += (all.empty() ? "" : ", ") + c;
        throw ConfigError(path + ": '" + s + "' is not one of {" + all + "}");
      }
      return s;
    }
    case ValueType::kBool:
      if (!v.is_boolean()) throw ConfigError(path + ": expected " + type_name(t));
      return v.get<bool>();
    default:
      break;
  }
  throw ConfigError(path + ": unsupported type");
}

json value_from_json(const Param& p, const json& v, const std::string& path) {
  if (!is_list(p.type)) return scalar_from_json(p, p.type, v, path);
  if (!v.is_array()) throw ConfigError(path + ": expected " + type_name(p.type));
  json out = json::array();
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(scalar_from_json(p, element_type(p.type), v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

json scalar_from_text(ValueType t, const std::string& s, const std::string& path) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  switch (t) {
    case ValueType::kInt: {
      long long v = 0;
      auto [ptr, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || ptr != e) throw ConfigError(path + ": expected " + type_name(t) + ", got '" + s + "'");
      return v;
    }
    case ValueType::kUint64: {
      std::uint64_t v = 0;
      auto [ptr, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || ptr != e) throw ConfigError(path + ": expected " + type_name(t) + ", got '" + s + "'");
      return v;
    }
    case ValueType::kReal: {
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
        throw ConfigError(path + ": expected " + type_name(t) + ", got '" + s + "'");
      }
      return v;
    }
    case ValueType::kBool:
      if (s == "true" || s == "1" || s == "yes") return true;
      if (s == "false" || s == "0" || s == "no") return false;
      throw ConfigError(path + ": expected " + type_name(t) + ", got '" + s + "'");
    default:
      return s;
  }
}

json value_from_text(const Param& p, const std::string& s, const std::string& path) {
  if (!is_list(p.type)) return scalar_from_json(p, p.type, scalar_from_text(p.type, s, path), path);
  json out = json::array();
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    const std::string at = path + "[" + std::to_string(i++) + "]";
    out.push_back(scalar_from_json(p, element_type(p.type), scalar_from_text(element_type(p.type), item, at), at));
  }
  return out;
}

}  // namespace

Param real_param(std::string key, json fallback, std::string help) {
  return make(std::move(key), ValueType::kReal, std::move(fallback), std::move(help));
}
Param int_param(std::string key, json fallback, std::string help) {
  return make(std::move(key), ValueType::kInt, std::move(fallback), std::move(help));
}
Param string_param(std::string key, json fallback, std::string help) {
  return make(std::move(key), ValueType::kString, std::move(fallback), std::move(help));
}
Param bool_param(std::string key, bool fallback, std::string help) {
  return make(std::move(key), ValueType::kBool, fallback, std::move(help));
}
Param real_list_param(std::string key, json fallback, std::string help) {
  return make(std::move(key), ValueType::kRealList, std::move(fallback), std::move(help));
}
Param int_list_param(std::string key, json fallback, std::string help) {
  return make(std::move(key), ValueType::kIntList, std::move(fallback), std::move(help));
}
Param string_list_param(std::string key, json fallback, std::string help) {
  return make(std::move(key), ValueType::kStringList, std::move(fallback), std::move(help));
}

std::vector<Param> global_params() {
  std::vector<Param> g;
  g.push_back(make("seed", ValueType::kUint64, 0, "root seed of every random substream"));
  g.push_back(int_param("threads", 0, "worker threads (0: hardware concurrency)").at_least(0).hidden_from_echo());
  g.push_back(string_param("output", nullptr, "JSON summary path (stdout when absent)").hidden_from_echo());
  g.push_back(string_param("csv", nullptr, "CSV plot-data path").hidden_from_echo());
  g.push_back(real_param("tolerance", nullptr, "relative tolerance override for quadrature routines").above(0.0));
  return g;
}

std::string flag_name(const std::string& key) {
  std::string f = "--" + key;
  std::replace(f.begin(), f.end(), '_', '-');
  return f;
}

Config::Config(std::string command, json values, std::vector<Param> schema)
    : command_(std::move(command)), values_(std::move(values)), schema_(std::move(schema)) {
  const auto t = values_.at("threads").get<long long>();
  executor_ = t == 0 ? Executor::hardware() : Executor(static_cast<std::size_t>(t));
}

const json& Config::at(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::logic_error("config key not in schema: " + key);
  return *it;
}

bool Config::has(const std::string& key) const { return !at(key).is_null(); }
double Config::real(const std::string& key) const { return at(key).get<double>(); }
long long Config::integer(const std::string& key) const { return at(key).get<long long>(); }
std::size_t Config::count(const std::string& key) const {
  const auto v = at(key).get<long long>();
  if (v < 0) throw ConfigError(key + ": must be nonnegative");
  return static_cast<std::size_t>(v);
}
std::uint64_t Config::seed() const { return at("seed").get<std::uint64_t>(); }
std::string Config::str(const std::string& key) const { return at(key).get<std::string>(); }
bool Config::flag(const std::string& key) const { return at(key).get<bool>(); }
std::vector<double> Config::reals(const std::string& key) const { return at(key).get<std::vector<double>>(); }
std::vector<long long> Config::integers(const std::string& key) const {
  return at(key).get<std::vector<long long>>();
}
std::vector<std::size_t> Config::counts(const std::string& key) const {
  std::vector<std::size_t> out;
  for (long long v : integers(key)) {
    if (v < 0) throw ConfigError(key + ": entries must be nonnegative");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}
std::vector<std::string> Config::strings(const std::string& key) const {
  return at(key).get<std::vector<std::string>>();
}
double Config::real_or(const std::string& key, double fallback) const {
  return has(key) ? real(key) : fallback;
}

json Config::provenance() const {
  json out = json::object();
  for (const auto& p : schema_) {
    if (p.echo) out[p.key] = values_.at(p.key);
  }
  return out;
}

Config resolve_config(const std::string& command, const std::vector<Param>& schema,
                      const std::optional<std::string>& config_file,
                      const std::vector<std::pair<std::string, std::string>>& flags) {
  auto find = [&](const std::string& key) -> const Param* {
    for (const auto& p : schema) {
      if (p.key == key) return &p;
    }
    return nullptr;
  };
  json values = json::object();
  for (const auto& p : schema) values[p.key] = p.fallback.is_null() ? json() : value_from_json(p, p.fallback, p.key);

  if (config_file) {
    std::ifstream in(*config_file);
    if (!in) throw ConfigError("cannot open config file '" + *config_file + "'");
    json file;
    try {
      file = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file '" + *config_file + "': " + e.what());
    }
    if (!file.is_object()) throw ConfigError("config file '" + *config_file + "': top level must be an object");
    for (auto it = file.begin(); it != file.end(); ++it) {
      const Param* p = find(it.key());
      if (!p) throw ConfigError("config file '" + *config_file + "': unknown key '" + it.key() + "' for '" + command + "'");
      values[p->key] = it.value().is_null() && !p->required
                           ? json()
                           : value_from_json(*p, it.value(), "config file '" + *config_file + "': " + it.key());
    }
  }
  for (const auto& [key, text] : flags) {
    const Param* p = find(key);
    if (!p) throw ConfigError("unknown option '" + flag_name(key) + "'");
    values[key] = value_from_text(*p, text, p->positional ? key : flag_name(key));
  }
  for (const auto& p : schema) {
    if (p.required && values[p.key].is_null()) {
      throw ConfigError("missing required key '" + p.key + "'" +
                        (p.positional ? "" : " (" + flag_name(p.key) + ")"));
    }
  }
  return Config(command, std::move(values), schema);
}

}  // namespace edist::cli
