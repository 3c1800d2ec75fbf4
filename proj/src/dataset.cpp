#include "copjoint/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "copjoint/errors.hpp"

namespace copjoint {

void Dataset::add_column(const std::string& name, Eigen::VectorXd values) {
  if (!names_.empty() && values.size() != n_rows_)
    throw DataError("column '" + name + "' has " + std::to_string(values.size()) + " rows, expected " +
                    std::to_string(n_rows_));
  if (has(name)) throw DataError("duplicate column '" + name + "'");
  if (names_.empty()) n_rows_ = values.size();
  names_.push_back(name);
  columns_.emplace(name, std::move(values));
}

const Eigen::VectorXd& Dataset::column(const std::string& name) const {
  auto it = columns_.find(name);
  if (it == columns_.end()) throw DataError("missing column '" + name + "'");
  return it->second;
}

std::vector<Eigen::Index> Dataset::complete_rows(const std::vector<std::string>& cols) const {
  std::vector<const Eigen::VectorXd*> refs;
  for (const auto& c : cols) refs.push_back(&column(c));
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < n_rows_; ++i) {
    bool ok = true;
    for (const auto* r : refs) {
      if (std::isnan((*r)(i))) {
        ok = false;
        break;
      }
    }
    if (ok) rows.push_back(i);
  }
  return rows;
}

Dataset Dataset::select_rows(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  for (const auto& name : names_) {
    const auto& src = columns_.at(name);
    Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) v(static_cast<Eigen::Index>(i)) = src(rows[i]);
    out.add_column(name, std::move(v));
  }
  if (names_.empty()) out.n_rows_ = static_cast<Eigen::Index>(rows.size());
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

CsvReadResult parse_csv(const std::string& text) {
  CsvReadResult res;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    res.errors.push_back("empty file: no header row");
    return res;
  }
  std::vector<std::string> header = split_line(line);
  for (auto& h : header) h = trim(h);
  std::vector<std::vector<double>> cols(header.size());
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != header.size()) {
      res.errors.push_back("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                           " fields, found " + std::to_string(cells.size()));
      continue;
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string cell = trim(cells[j]);
      double v = std::numeric_limits<double>::quiet_NaN();
      if (!cell.empty() && cell != "NA") {
        char* end = nullptr;
        v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0') {
          res.errors.push_back("line " + std::to_string(line_no) + ", column '" + header[j] +
                               "': non-numeric value '" + cell + "'");
          v = std::numeric_limits<double>::quiet_NaN();
        }
      }
      cols[j].push_back(v);
    }
  }
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j].empty()) {
      res.errors.push_back("column " + std::to_string(j + 1) + " has an empty header");
      continue;
    }
    try {
      res.data.add_column(header[j], Eigen::Map<Eigen::VectorXd>(cols[j].data(), static_cast<Eigen::Index>(cols[j].size())));
    } catch (const DataError& e) {
      res.errors.push_back(e.what());
    }
  }
  return res;
}

CsvReadResult read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    CsvReadResult res;
    res.errors.push_back("cannot open '" + path + "'");
    return res;
  }
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str());
}

}  // namespace copjoint
