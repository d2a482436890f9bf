#pragma once

#include <cctype>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "reachbound/errors.hpp"

namespace reachbound {

// Small TOML subset sufficient for experiment configs: [table] headers,
// key = value lines with strings, booleans, integers, floats and flat arrays,
// and # comments. Values land in a json object so TOML and JSON configs are
// interchangeable downstream.
namespace minitoml {

namespace detail {

inline void skip_ws(std::string_view s, std::size_t& i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

inline nlohmann::json parse_value(std::string_view s, std::size_t& i, int line);

inline nlohmann::json parse_scalar(std::string_view s, std::size_t& i, int line) {
  skip_ws(s, i);
  if (i >= s.size()) throw ConfigError("line " + std::to_string(line) + ": missing value");
  const char c = s[i];
  if (c == '"') {
    std::string out;
    ++i;
    while (i < s.size() && s[i] != '"') {
      if (s[i] == '\\' && i + 1 < s.size()) ++i;
      out += s[i++];
    }
    if (i >= s.size()) throw ConfigError("line " + std::to_string(line) + ": unterminated string");
    ++i;
    return out;
  }
  std::size_t start = i;
  while (i < s.size() && s[i] != ',' && s[i] != ']' && s[i] != '#') ++i;
  std::string tok{s.substr(start, i - start)};
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.pop_back();
  if (tok == "true") return true;
  if (tok == "false") return false;
  try {
    if (tok.find_first_of(".eE") == std::string::npos &&
        tok.find_first_not_of("+-0123456789_") == std::string::npos) {
      std::string digits;
      for (char d : tok)
        if (d != '_') digits += d;
      return std::stoll(digits);
    }
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw ConfigError("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": cannot parse value '" + tok + "'");
  }
}

inline nlohmann::json parse_value(std::string_view s, std::size_t& i, int line) {
  skip_ws(s, i);
  if (i < s.size() && s[i] == '[') {
    nlohmann::json arr = nlohmann::json::array();
    ++i;
    skip_ws(s, i);
    if (i < s.size() && s[i] == ']') {
      ++i;
      return arr;
    }
    for (;;) {
      arr.push_back(parse_value(s, i, line));
      skip_ws(s, i);
      if (i < s.size() && s[i] == ',') {
        ++i;
        continue;
      }
      if (i < s.size() && s[i] == ']') {
        ++i;
        return arr;
      }
      throw ConfigError("line " + std::to_string(line) + ": expected ',' or ']' in array");
    }
  }
  return parse_scalar(s, i, line);
}

}  // namespace detail

inline nlohmann::json parse(std::string_view text) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* table = &root;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                           : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    std::size_t i = 0;
    detail::skip_ws(line, i);
    if (i >= line.size() || line[i] == '#') continue;
    if (line[i] == '[') {
      const std::size_t close = line.find(']', i);
      if (close == std::string_view::npos)
        throw ConfigError("line " + std::to_string(line_no) + ": unterminated table header");
      std::string name{line.substr(i + 1, close - i - 1)};
      if (name.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty table name");
      table = &root[name];
      if (table->is_null()) *table = nlohmann::json::object();
      continue;
    }
    const std::size_t eq = line.find('=', i);
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    std::string key{line.substr(i, eq - i)};
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    std::size_t vi = eq + 1;
    (*table)[key] = detail::parse_value(line, vi, line_no);
    detail::skip_ws(line, vi);
    if (vi < line.size() && line[vi] != '#')
      throw ConfigError("line " + std::to_string(line_no) + ": trailing characters after value");
  }
  return root;
}

}  // namespace minitoml
}  // namespace reachbound
