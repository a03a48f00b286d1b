#pragma once

#include <istream>
#include <map>
#include <string>
#include <vector>

namespace svypost {

/// Flat `key = value` text: one pair per line, `#` starts a comment, values may
/// be double-quoted, and `[section]` headers prefix following keys with
/// `section.` (so a TOML-style layout reads the same as dotted keys).
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in);
KeyValues read_key_values_file(const std::string& path);

/// Comma-separated list, whitespace trimmed, empty items dropped.
std::vector<std::string> split_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

double parse_double_value(const std::string& key, const std::string& text);
long long parse_int_value(const std::string& key, const std::string& text);
bool parse_bool_value(const std::string& key, const std::string& text);

}  // namespace svypost
