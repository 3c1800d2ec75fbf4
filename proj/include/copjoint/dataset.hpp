#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace copjoint {

/// Column-oriented numeric table. Missing values are stored as NaN.
class Dataset {
 public:
  Dataset() = default;

  void add_column(const std::string& name, Eigen::VectorXd values);
  bool has(const std::string& name) const { return columns_.count(name) > 0; }
  const Eigen::VectorXd& column(const std::string& name) const;
  const std::vector<std::string>& names() const { return names_; }
  Eigen::Index n_rows() const { return n_rows_; }

  /// Rows where every listed column is observed.
  std::vector<Eigen::Index> complete_rows(const std::vector<std::string>& cols) const;
  Dataset select_rows(const std::vector<Eigen::Index>& rows) const;

 private:
  std::vector<std::string> names_;
  std::map<std::string, Eigen::VectorXd> columns_;
  Eigen::Index n_rows_ = 0;
};

struct CsvReadResult {
  Dataset data;
  std::vector<std::string> errors;  // every schema problem found, not just the first
};

/// Reads a header + comma separated numeric table. Empty fields and "NA"
/// become NaN; other non-numeric cells are reported in `errors`.
CsvReadResult read_csv(const std::string& path);
CsvReadResult parse_csv(const std::string& text);

}  // namespace copjoint
