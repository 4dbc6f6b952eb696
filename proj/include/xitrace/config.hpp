#pragma once

// INI-style config reader for the command-line tools: [section] headers,
// key = value lines, # or ; comments, blank lines ignored. Lookups go
// through typed getters with defaults; every value actually consulted
// (explicit or defaulted) is recorded so a report can embed the exact
// configuration it ran with. Keys that were set but never consulted in the
// sections a subcommand owns are treated as descriptor errors -- that is
// where typos end up.

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "xitrace/core.hpp"

namespace xitrace {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline bool parse_double_strict(const std::string& s, double* out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return false;
  *out = v;
  return true;
}

inline bool parse_int_strict(const std::string& s, long long* out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size()) return false;
  *out = v;
  return true;
}

}  // namespace detail

class Config {
 public:
  static Config from_string(const std::string& text,
                            const std::string& origin = "<config>") {
    Config c;
    c.origin_ = origin;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      // comments start at # or ; (values here never contain either)
      for (const char mark : {'#', ';'}) {
        const auto pos = line.find(mark);
        if (pos != std::string::npos) line.erase(pos);
      }
      line = detail::trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          c.fail(lineno, "unterminated section header");
        section = detail::trim(line.substr(1, line.size() - 2));
        if (section.empty()) c.fail(lineno, "empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        c.fail(lineno, "expected key = value");
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      if (key.empty()) c.fail(lineno, "empty key");
      if (section.empty())
        c.fail(lineno, "key '" + key + "' before any [section]");
      const std::string dotted = section + "." + key;
      if (c.values_.count(dotted))
        c.fail(lineno, "duplicate key '" + dotted + "'");
      c.values_[dotted] = value;
    }
    return c;
  }

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str(), path);
  }

  // command-line override, "section.key=value"
  void set_override(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
      throw config_error("--set expects section.key=value, got '" + spec + "'");
    const std::string dotted = detail::trim(spec.substr(0, eq));
    if (dotted.find('.') == std::string::npos)
      throw config_error("--set key must be section.key, got '" + dotted + "'");
    values_[dotted] = detail::trim(spec.substr(eq + 1));
  }

  bool has(const std::string& sec, const std::string& key) const {
    return values_.count(sec + "." + key) > 0;
  }

  std::string get_string(const std::string& sec, const std::string& key,
                         const std::string& def) const {
    const std::string dotted = sec + "." + key;
    const auto it = values_.find(dotted);
    const std::string v = (it == values_.end()) ? def : it->second;
    note(dotted, v);
    return v;
  }

  std::string require_string(const std::string& sec,
                             const std::string& key) const {
    const std::string dotted = sec + "." + key;
    const auto it = values_.find(dotted);
    if (it == values_.end())
      throw config_error(origin_ + ": missing required key [" + sec + "] " +
                         key);
    note(dotted, it->second);
    return it->second;
  }

  double get_double(const std::string& sec, const std::string& key,
                    double def) const {
    if (!has(sec, key)) {
      note(sec + "." + key, format_g12(def));
      return def;
    }
    return require_double(sec, key);
  }

  double require_double(const std::string& sec, const std::string& key) const {
    const std::string raw = require_string(sec, key);
    double v;
    if (!detail::parse_double_strict(raw, &v))
      throw config_error(origin_ + ": [" + sec + "] " + key +
                         " is not a number: '" + raw + "'");
    return v;
  }

  std::int64_t get_int(const std::string& sec, const std::string& key,
                       std::int64_t def) const {
    if (!has(sec, key)) {
      note(sec + "." + key, std::to_string(def));
      return def;
    }
    return require_int(sec, key);
  }

  std::int64_t require_int(const std::string& sec,
                           const std::string& key) const {
    const std::string raw = require_string(sec, key);
    long long v;
    if (!detail::parse_int_strict(raw, &v))
      throw config_error(origin_ + ": [" + sec + "] " + key +
                         " is not an integer: '" + raw + "'");
    return v;
  }

  // comma- or whitespace-separated list of numbers
  std::vector<double> get_list(const std::string& sec, const std::string& key,
                               const std::vector<double>& def) const {
    const std::string dotted = sec + "." + key;
    if (!values_.count(dotted)) {
      std::string echo;
      for (double d : def) {
        if (!echo.empty()) echo += ", ";
        echo += format_g12(d);
      }
      note(dotted, echo);
      return def;
    }
    const std::string raw = require_string(sec, key);
    std::string munged = raw;
    for (char& ch : munged)
      if (ch == ',') ch = ' ';
    std::istringstream in(munged);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
      double v;
      if (!detail::parse_double_strict(tok, &v))
        throw config_error(origin_ + ": [" + sec + "] " + key +
                           " has a non-numeric entry: '" + tok + "'");
      out.push_back(v);
    }
    if (out.empty())
      throw config_error(origin_ + ": [" + sec + "] " + key + " is empty");
    return out;
  }

  // every key the run consulted, with the value it used (sorted by key)
  const std::map<std::string, std::string>& resolved() const {
    return resolved_;
  }

  // Typo guard: any key present in one of the owned sections that no getter
  // consulted is an error. Sections not listed are ignored (a single file
  // may serve several subcommands).
  void check_consumed(const std::vector<std::string>& owned_sections) const {
    for (const auto& [dotted, value] : values_) {
      const std::string sec = dotted.substr(0, dotted.find('.'));
      bool owned = false;
      for (const auto& s : owned_sections) owned |= (s == sec);
      if (owned && !consumed_.count(dotted))
        throw config_error(origin_ + ": unknown key [" + sec + "] " +
                           dotted.substr(sec.size() + 1));
    }
  }

 private:
  [[noreturn]] void fail(int lineno, const std::string& msg) const {
    throw config_error(origin_ + ":" + std::to_string(lineno) + ": " + msg);
  }

  void note(const std::string& dotted, const std::string& value) const {
    resolved_[dotted] = value;
    consumed_.insert(dotted);
  }

  std::string origin_ = "<config>";
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, std::string> resolved_;
  mutable std::set<std::string> consumed_;
};

}  // namespace xitrace
