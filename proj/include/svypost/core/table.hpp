#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace svypost {

/// Column-oriented table of string cells, as read from a CSV file.
///
/// Cells keep their original text; numeric access parses on demand and fails
/// with a data error on empty or non-numeric cells, so missing values in a
/// referenced column are never silently skipped.
class DataTable {
 public:
  DataTable() = default;

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  bool has_column(const std::string& name) const;
  std::size_t column_index(const std::string& name) const;

  const std::vector<std::string>& text(const std::string& name) const;
  Eigen::VectorXd numeric(const std::string& name) const;

  void add_column(const std::string& name, std::vector<std::string> cells);
  void add_column(const std::string& name, const Eigen::VectorXd& values);

  /// Keeps only the given rows, in the given order.
  DataTable select_rows(const std::vector<std::size_t>& rows) const;

  static DataTable read_csv(std::istream& in);
  static DataTable read_csv_file(const std::string& path);
  void write_csv(std::ostream& out) const;
  void write_csv_file(const std::string& path) const;

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<std::string>> columns_;
  std::size_t rows_ = 0;
};

/// Splits one CSV record honouring double-quoted fields.
std::vector<std::string> split_csv_record(const std::string& line);

/// Quotes a field if it contains a delimiter, quote or newline.
std::string csv_escape(const std::string& field);

/// Shortest round-trip decimal representation.
std::string format_double(double value);

}  // namespace svypost
