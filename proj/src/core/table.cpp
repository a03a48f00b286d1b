#include "svypost/core/table.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
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

bool parse_double(const std::string& cell, double& out) {
  const std::string t = trim(cell);
  if (t.empty() || t == "NA" || t == "NaN") return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

std::vector<std::string> split_csv_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(trim(current));
  return fields;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

bool DataTable::has_column(const std::string& name) const {
  for (const auto& n : names_) {
    if (n == name) return true;
  }
  return false;
}

std::size_t DataTable::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < names_.size(); ++j) {
    if (names_[j] == name) return j;
  }
  throw Error(ErrorKind::kNotFound, "column '" + name + "' not found in data");
}

const std::vector<std::string>& DataTable::text(const std::string& name) const {
  return columns_[column_index(name)];
}

Eigen::VectorXd DataTable::numeric(const std::string& name) const {
  const auto& cells = text(name);
  Eigen::VectorXd out(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    double v = 0.0;
    if (!parse_double(cells[i], v)) {
      throw Error(ErrorKind::kData, "column '" + name + "' row " + std::to_string(i + 1) +
                                        ": missing or non-numeric value '" + cells[i] + "'");
    }
    out[static_cast<Eigen::Index>(i)] = v;
  }
  return out;
}

void DataTable::add_column(const std::string& name, std::vector<std::string> cells) {
  if (!names_.empty() && cells.size() != rows_) {
    throw Error(ErrorKind::kInvalidArgument, "column '" + name + "' has " +
                                                 std::to_string(cells.size()) + " rows, table has " +
                                                 std::to_string(rows_));
  }
  if (has_column(name)) {
    columns_[column_index(name)] = std::move(cells);
    return;
  }
  rows_ = cells.size();
  names_.push_back(name);
  columns_.push_back(std::move(cells));
}

void DataTable::add_column(const std::string& name, const Eigen::VectorXd& values) {
  std::vector<std::string> cells;
  cells.reserve(static_cast<std::size_t>(values.size()));
  for (double v : values) cells.push_back(format_double(v));
  add_column(name, std::move(cells));
}

DataTable DataTable::select_rows(const std::vector<std::size_t>& rows) const {
  DataTable out;
  out.names_ = names_;
  out.rows_ = rows.size();
  out.columns_.resize(columns_.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    out.columns_[j].reserve(rows.size());
    for (std::size_t r : rows) out.columns_[j].push_back(columns_[j].at(r));
  }
  return out;
}

DataTable DataTable::read_csv(std::istream& in) {
  DataTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::kData, "CSV input is empty (a header row is required)");
  }
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
  table.names_ = split_csv_record(line);
  table.columns_.resize(table.names_.size());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_csv_record(line);
    if (fields.size() != table.names_.size()) {
      throw Error(ErrorKind::kData, "CSV line " + std::to_string(lineno) + " has " +
                                        std::to_string(fields.size()) + " fields, expected " +
                                        std::to_string(table.names_.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) table.columns_[j].push_back(std::move(fields[j]));
    ++table.rows_;
  }
  return table;
}

DataTable DataTable::read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kData, "cannot open data file '" + path + "'");
  return read_csv(in);
}

void DataTable::write_csv(std::ostream& out) const {
  for (std::size_t j = 0; j < names_.size(); ++j) {
    out << (j ? "," : "") << csv_escape(names_[j]);
  }
  out << '\n';
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < names_.size(); ++j) {
      out << (j ? "," : "") << csv_escape(columns_[j][i]);
    }
    out << '\n';
  }
}

void DataTable::write_csv_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kData, "cannot write '" + path + "'");
  write_csv(out);
}

}  // namespace svypost
