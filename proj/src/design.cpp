#include <algorithm>
#include <cmath>
#include <set>

#include "copjoint/errors.hpp"
#include "copjoint/joint_model.hpp"

namespace copjoint {

int EquationDesign::n_parametric() const {
  int n_smooth_cols = 0;
  for (const auto& s : smooths) n_smooth_cols += s.term.n_coef();
  return static_cast<int>(x.cols()) - n_smooth_cols;
}

Eigen::MatrixXd JointDesign::penalty(const std::vector<double>& lambdas, int extra) const {
  const int dim = p1() + p2() + extra;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(dim, dim);
  const auto ranges = smooth_ranges();
  if (lambdas.size() != ranges.size())
    throw DomainError("penalty: expected " + std::to_string(ranges.size()) + " smoothing parameters");
  std::size_t k = 0;
  for (const auto* eq : {&treatment, &outcome}) {
    for (const auto& sb : eq->smooths) {
      const auto [start, size] = ranges[k];
      s.block(start, start, size, size) = lambdas[k] * sb.term.penalty;
      ++k;
    }
  }
  return s;
}

std::vector<std::pair<int, int>> JointDesign::smooth_ranges() const {
  std::vector<std::pair<int, int>> out;
  for (const auto& sb : treatment.smooths) out.emplace_back(sb.start, sb.term.n_coef());
  for (const auto& sb : outcome.smooths) out.emplace_back(p1() + sb.start, sb.term.n_coef());
  return out;
}

std::vector<std::string> JointDesign::smooth_names() const {
  std::vector<std::string> out;
  for (const auto& sb : treatment.smooths) out.push_back("treatment:s(" + sb.term.covariate + ")");
  for (const auto& sb : outcome.smooths) out.push_back("outcome:s(" + sb.term.covariate + ")");
  return out;
}

namespace {

void check_binary(const Eigen::VectorXd& y, const std::string& name) {
  double ones = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) throw DataError("column '" + name + "' must be coded 0/1");
    ones += y(i);
  }
  if (ones == 0.0) throw DataError("response '" + name + "' is all zero");
  if (ones == static_cast<double>(y.size())) throw DataError("response '" + name + "' is all one");
}

std::string level_label(const ModelSpec& spec, const std::string& col, int level) {
  for (const auto& [name, labels] : spec.level_labels) {
    if (name != col) continue;
    for (const auto& [code, label] : labels) {
      if (code == level) return col + " (" + label + ")";
    }
  }
  return col + "[" + std::to_string(level) + "]";
}

EquationDesign build_equation(const Dataset& data, const ModelSpec& spec, const MarginSpec& m,
                              const std::string& treatment_name, std::vector<std::string>& warnings) {
  const auto n = data.n_rows();
  std::vector<Eigen::VectorXd> cols;
  EquationDesign eq;
  eq.link = m.link;
  cols.push_back(Eigen::VectorXd::Ones(n));
  eq.column_names.push_back("(Intercept)");
  if (m.includes_treatment) {
    eq.treatment_col = static_cast<int>(cols.size());
    cols.push_back(data.column(treatment_name));
    eq.column_names.push_back(treatment_name);
  }
  for (const auto& name : m.parametric_terms) {
    cols.push_back(data.column(name));
    eq.column_names.push_back(name);
  }
  for (const auto& name : m.categorical_terms) {
    const auto& v = data.column(name);
    std::set<int> levels;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (v(i) != std::round(v(i))) throw DataError("categorical column '" + name + "' has non-integer codes");
      levels.insert(static_cast<int>(v(i)));
    }
    int ref = levels.empty() ? 0 : *levels.begin();
    for (const auto& [col, r] : spec.reference_levels) {
      if (col == name) ref = r;
    }
    if (!levels.count(ref)) throw DataError("reference level " + std::to_string(ref) + " absent from '" + name + "'");
    for (int lv : levels) {
      if (lv == ref) continue;
      Eigen::VectorXd ind(n);
      for (Eigen::Index i = 0; i < n; ++i) ind(i) = static_cast<int>(v(i)) == lv ? 1.0 : 0.0;
      cols.push_back(ind);
      eq.column_names.push_back(level_label(spec, name, lv));
    }
  }
  int start = static_cast<int>(cols.size());
  for (const auto& name : m.smooth_terms) {
    SmoothTerm term = build_basis(data.column(name), spec.basis_dim, name);
    for (const auto& w : term.warnings) warnings.push_back(w);
    SmoothBlock sb{term, start};
    for (int j = 0; j < term.n_coef(); ++j) {
      cols.push_back(term.basis_matrix.col(j));
      eq.column_names.push_back("s(" + name + ")." + std::to_string(j + 1));
    }
    start += term.n_coef();
    eq.smooths.push_back(std::move(sb));
  }
  eq.x.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) eq.x.col(static_cast<Eigen::Index>(j)) = cols[j];
  return eq;
}

}  // namespace

JointDesign assemble_design(const Dataset& data, const ModelSpec& spec) {
  const std::string& treat = spec.treatment.response;
  // schema checks, all problems reported together
  std::vector<std::string> required{spec.treatment.response, spec.outcome.response};
  for (const auto* m : {&spec.treatment, &spec.outcome}) {
    for (const auto* list : {&m->parametric_terms, &m->categorical_terms, &m->smooth_terms})
      required.insert(required.end(), list->begin(), list->end());
  }
  std::vector<std::string> missing;
  for (const auto& c : required) {
    if (!data.has(c) && std::find(missing.begin(), missing.end(), c) == missing.end()) missing.push_back(c);
  }
  if (!missing.empty()) {
    std::string msg = "missing columns:";
    for (const auto& c : missing) msg += " '" + c + "'";
    throw DataError(msg);
  }
  if (spec.treatment.includes_treatment) throw DataError("the treatment equation cannot include the treatment");
  for (const auto* list : {&spec.treatment.parametric_terms, &spec.outcome.parametric_terms,
                           &spec.treatment.smooth_terms, &spec.outcome.smooth_terms,
                           &spec.treatment.categorical_terms, &spec.outcome.categorical_terms}) {
    if (std::find(list->begin(), list->end(), treat) != list->end())
      throw DataError("treatment '" + treat + "' enters the outcome equation only through gamma");
  }
  for (const auto& c : required) {
    const auto& v = data.column(c);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v(i))) throw DataError("column '" + c + "' has missing values; drop incomplete rows first");
    }
  }
  check_binary(data.column(spec.treatment.response), spec.treatment.response);
  check_binary(data.column(spec.outcome.response), spec.outcome.response);

  JointDesign d;
  d.y1 = data.column(spec.treatment.response);
  d.y2 = data.column(spec.outcome.response);
  d.treatment = build_equation(data, spec, spec.treatment, treat, d.warnings);
  d.outcome = build_equation(data, spec, spec.outcome, treat, d.warnings);
  return d;
}

JointDesign make_design(Eigen::MatrixXd x1, Eigen::MatrixXd x2, Eigen::VectorXd y1, Eigen::VectorXd y2, Link link1,
                        Link link2, int treatment_col) {
  if (x1.rows() != y1.size() || x2.rows() != y2.size() || y1.size() != y2.size())
    throw DataError("make_design: row counts differ");
  if (treatment_col < 0 || treatment_col >= x2.cols()) throw DataError("make_design: treatment column out of range");
  check_binary(y1, "y1");
  check_binary(y2, "y2");
  JointDesign d;
  d.treatment.link = link1;
  d.outcome.link = link2;
  d.treatment.x = std::move(x1);
  d.outcome.x = std::move(x2);
  d.outcome.treatment_col = treatment_col;
  for (Eigen::Index j = 0; j < d.treatment.x.cols(); ++j) d.treatment.column_names.push_back("x1." + std::to_string(j));
  for (Eigen::Index j = 0; j < d.outcome.x.cols(); ++j)
    d.outcome.column_names.push_back(j == treatment_col ? "y1" : "x2." + std::to_string(j));
  d.y1 = std::move(y1);
  d.y2 = std::move(y2);
  return d;
}

}  // namespace copjoint
