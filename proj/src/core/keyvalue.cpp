#include "svypost/core/keyvalue.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <system_error>

#include "svypost/core/error.hpp"

namespace svypost {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kConfiguration,
                  "line " + std::to_string(lineno) + ": expected 'key = value', got '" + line + "'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) {
      throw Error(ErrorKind::kConfiguration, "line " + std::to_string(lineno) + ": empty key");
    }
    if (!section.empty()) key = section + "." + key;
    out[key] = value;
  }
  return out;
}

KeyValues read_key_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfiguration, "cannot open '" + path + "'");
  return parse_key_values(in);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::string cleaned = text;
  if (cleaned.size() >= 2 && cleaned.front() == '[' && cleaned.back() == ']') {
    cleaned = cleaned.substr(1, cleaned.size() - 2);
  }
  for (char c : cleaned) {
    if (c == ',') {
      if (auto t = trim(item); !t.empty()) out.push_back(t);
      item.clear();
    } else if (c != '"') {
      item.push_back(c);
    }
  }
  if (auto t = trim(item); !t.empty()) out.push_back(t);
  return out;
}

double parse_double_value(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw Error(ErrorKind::kConfiguration, "'" + key + "': expected a number, got '" + text + "'");
  }
  return v;
}

long long parse_int_value(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw Error(ErrorKind::kConfiguration,
                "'" + key + "': expected an integer, got '" + text + "'");
  }
  return v;
}

bool parse_bool_value(const std::string& key, const std::string& text) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw Error(ErrorKind::kConfiguration, "'" + key + "': expected true/false, got '" + text + "'");
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_double_value("list", item));
  return out;
}

}  // namespace svypost
