#include "copjoint/smooth.hpp"

#include <algorithm>
#include <cmath>

#include "copjoint/errors.hpp"

namespace copjoint {

namespace {

// Clamped knot vector: boundary knots repeated degree + 1 times.
std::vector<double> augmented_knots(const SmoothTerm& term) {
  std::vector<double> t;
  t.reserve(term.knots.size() + 2 * term.degree);
  for (int i = 0; i < term.degree; ++i) t.push_back(term.knots.front());
  t.insert(t.end(), term.knots.begin(), term.knots.end());
  for (int i = 0; i < term.degree; ++i) t.push_back(term.knots.back());
  return t;
}

// Values (deriv = 0), first or second derivatives of all basis functions at
// x in [t.front(), t.back()].
Eigen::RowVectorXd bspline(const std::vector<double>& t, int degree, int n_basis, double x, int deriv) {
  const int n_knots = static_cast<int>(t.size());
  // locate span: t[span] <= x < t[span+1], last non-empty span at the right end
  int span = degree;
  for (int i = degree; i < n_knots - degree - 1; ++i) {
    if (x >= t[i]) span = i;
  }
  while (span > degree && t[span] == t[span + 1]) --span;

  // table[p] holds the p-degree functions: table[p][i] = B_{i,p}(x) for all i
  std::vector<std::vector<double>> table(degree + 1, std::vector<double>(n_knots, 0.0));
  table[0][span] = 1.0;
  for (int p = 1; p <= degree; ++p) {
    for (int i = 0; i + p + 1 < n_knots; ++i) {
      double v = 0.0;
      const double d1 = t[i + p] - t[i];
      const double d2 = t[i + p + 1] - t[i + 1];
      if (d1 > 0) v += (x - t[i]) / d1 * table[p - 1][i];
      if (d2 > 0) v += (t[i + p + 1] - x) / d2 * table[p - 1][i + 1];
      table[p][i] = v;
    }
  }

  if (deriv == 0) {
    Eigen::RowVectorXd out(n_basis);
    for (int i = 0; i < n_basis; ++i) out(i) = table[degree][i];
    return out;
  }

  // Derivatives: apply d/dx B_{i,p} = p (B_{i,p-1}/(t_{i+p}-t_i) - B_{i+1,p-1}/(t_{i+p+1}-t_{i+1}))
  // deriv times, starting from the (degree - deriv) table.
  if (deriv > degree) return Eigen::RowVectorXd::Zero(n_basis);
  std::vector<double> cur = table[degree - deriv];
  for (int p = degree - deriv + 1; p <= degree; ++p) {
    std::vector<double> next(n_knots, 0.0);
    for (int i = 0; i + p + 1 < n_knots; ++i) {
      double v = 0.0;
      const double d1 = t[i + p] - t[i];
      const double d2 = t[i + p + 1] - t[i + 1];
      if (d1 > 0) v += p * cur[i] / d1;
      if (d2 > 0) v -= p * cur[i + 1] / d2;
      next[i] = v;
    }
    cur = std::move(next);
  }
  Eigen::RowVectorXd out(n_basis);
  for (int i = 0; i < n_basis; ++i) out(i) = cur[i];
  return out;
}

}  // namespace

Eigen::RowVectorXd raw_basis_row(const SmoothTerm& term, double x) {
  const auto t = augmented_knots(term);
  const double a = term.lower();
  const double b = term.upper();
  if (x < a) {
    return bspline(t, term.degree, term.basis_dim, a, 0) + (x - a) * bspline(t, term.degree, term.basis_dim, a, 1);
  }
  if (x > b) {
    return bspline(t, term.degree, term.basis_dim, b, 0) + (x - b) * bspline(t, term.degree, term.basis_dim, b, 1);
  }
  return bspline(t, term.degree, term.basis_dim, x, 0);
}

SmoothTerm build_basis(const Eigen::VectorXd& x, int basis_dim, const std::string& covariate) {
  if (x.size() == 0) throw DataError("build_basis: empty covariate '" + covariate + "'");
  if (basis_dim < 3) throw DomainError("build_basis: basis_dim must be at least 3");
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x(i))) throw DataError("build_basis: non-finite value in '" + covariate + "'");
  }
  std::vector<double> distinct(x.data(), x.data() + x.size());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) throw DataError("build_basis: covariate '" + covariate + "' is constant");

  SmoothTerm term;
  term.covariate = covariate;
  int dim = basis_dim;
  if (static_cast<int>(distinct.size()) < dim) {
    dim = std::max(3, static_cast<int>(distinct.size()));
    term.warnings.push_back("basis_dim for '" + covariate + "' reduced from " + std::to_string(basis_dim) +
                            " to " + std::to_string(dim) + " (too few distinct values)");
  }
  if (static_cast<int>(distinct.size()) < 3) throw DataError("build_basis: covariate '" + covariate +
                                                             "' needs at least 3 distinct values");
  term.basis_dim = dim;
  term.degree = std::min(3, dim - 1);

  // Knots at equally spaced quantiles of the distinct values.
  const int n_distinct_knots = dim - term.degree + 1;
  term.knots.resize(n_distinct_knots);
  const double last = static_cast<double>(distinct.size() - 1);
  for (int k = 0; k < n_distinct_knots; ++k) {
    const double pos = last * k / (n_distinct_knots - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, distinct.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    term.knots[k] = distinct[lo] + frac * (distinct[hi] - distinct[lo]);
  }

  const auto n = x.size();
  Eigen::MatrixXd raw(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) raw.row(i) = raw_basis_row(term, x(i));

  // Null space of the column sums.
  const Eigen::VectorXd colsum = raw.colwise().sum().transpose();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(colsum);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
  term.constraint = q.rightCols(dim - 1);
  term.basis_matrix = raw * term.constraint;

  // Integrated squared second derivative, 3-point Gauss-Legendre per knot span.
  const auto t = augmented_knots(term);
  constexpr double gl_x[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  constexpr double gl_w[3] = {0.5555555555555556, 0.8888888888888888, 0.5555555555555556};
  Eigen::MatrixXd s_raw = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t k = 0; k + 1 < term.knots.size(); ++k) {
    const double a = term.knots[k];
    const double b = term.knots[k + 1];
    const double half = (b - a) / 2.0;
    for (int g = 0; g < 3; ++g) {
      const double xx = a + half * (gl_x[g] + 1.0);
      const Eigen::RowVectorXd d2 = bspline(t, term.degree, dim, xx, 2);
      s_raw.noalias() += gl_w[g] * half * d2.transpose() * d2;
    }
  }
  Eigen::MatrixXd s = term.constraint.transpose() * s_raw * term.constraint;
  s = 0.5 * (s + s.transpose());
  // Scale so that lambda is comparable across covariates measured in different units.
  const double x_norm = term.basis_matrix.cwiseAbs().rowwise().sum().maxCoeff();
  const double s_norm = s.cwiseAbs().colwise().sum().maxCoeff();
  if (s_norm > 0) s *= x_norm * x_norm / s_norm;
  term.penalty = s;
  return term;
}

Eigen::MatrixXd smooth_design(const SmoothTerm& term, const Eigen::VectorXd& x_new, int* n_extrapolated) {
  Eigen::MatrixXd out(x_new.size(), term.n_coef());
  int extrap = 0;
  for (Eigen::Index i = 0; i < x_new.size(); ++i) {
    if (x_new(i) < term.lower() || x_new(i) > term.upper()) ++extrap;
    out.row(i) = raw_basis_row(term, x_new(i)) * term.constraint;
  }
  if (n_extrapolated) *n_extrapolated = extrap;
  return out;
}

SmoothEvaluation evaluate_smooth(const SmoothTerm& term, const Eigen::VectorXd& coefficients,
                                 const Eigen::VectorXd& x_new) {
  if (coefficients.size() != term.n_coef())
    throw DomainError("evaluate_smooth: expected " + std::to_string(term.n_coef()) + " coefficients");
  SmoothEvaluation ev;
  ev.values = smooth_design(term, x_new, &ev.n_extrapolated) * coefficients;
  return ev;
}

PenalizedLsFit penalized_least_squares(const SmoothTerm& term, const Eigen::VectorXd& y, double lambda) {
  const auto n = term.basis_matrix.rows();
  if (y.size() != n) throw DomainError("penalized_least_squares: response length mismatch");
  const int p = term.n_coef() + 1;
  Eigen::MatrixXd x(n, p);
  x.col(0).setOnes();
  x.rightCols(p - 1) = term.basis_matrix;
  const Eigen::MatrixXd h = x.transpose() * x;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
  s.bottomRightCorner(p - 1, p - 1) = lambda * term.penalty;
  const Eigen::VectorXd b = (h + s).ldlt().solve(x.transpose() * y);
  PenalizedLsFit fit;
  fit.intercept = b(0);
  fit.coefficients = b.tail(p - 1);
  fit.edf = block_edf(h, s, 1, p - 1);
  return fit;
}

double block_edf(const Eigen::MatrixXd& hessian, const Eigen::MatrixXd& penalty, int start, int size) {
  const Eigen::MatrixXd f = (hessian + penalty).ldlt().solve(hessian);
  return f.diagonal().segment(start, size).sum();
}

}  // namespace copjoint
