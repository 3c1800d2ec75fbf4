#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace copjoint {

/// Penalized cubic regression spline for one continuous covariate.
///
/// The raw basis is a clamped B-spline of degree min(3, basis_dim - 1) with
/// knots at equally spaced quantiles of the distinct covariate values. The
/// sum-to-zero constraint over the training points is absorbed by
/// reparameterizing onto the null space of the column sums, which leaves
/// basis_dim - 1 columns. The penalty is the integrated squared second
/// derivative, so linear functions are unpenalized.
struct SmoothTerm {
  std::string covariate;
  int basis_dim = 10;
  int degree = 3;
  std::vector<double> knots;         // distinct knots, knots.front() = min x, knots.back() = max x
  Eigen::MatrixXd constraint;        // basis_dim x (basis_dim - 1), orthonormal
  Eigen::MatrixXd basis_matrix;      // n x (basis_dim - 1), centered
  Eigen::MatrixXd penalty;           // (basis_dim - 1) x (basis_dim - 1), symmetric PSD
  double lambda = 1.0;
  double edf = 0.0;                  // filled in after fitting
  std::vector<std::string> warnings;

  int n_coef() const { return basis_dim - 1; }
  double lower() const { return knots.front(); }
  double upper() const { return knots.back(); }
};

/// Throws DataError for a constant covariate. With fewer distinct values
/// than basis_dim the dimension is reduced and a warning recorded.
SmoothTerm build_basis(const Eigen::VectorXd& x, int basis_dim, const std::string& covariate = "x");

/// Raw (uncentered) B-spline values at one point; values outside the knot
/// range are linear extensions from the nearest boundary.
Eigen::RowVectorXd raw_basis_row(const SmoothTerm& term, double x);

/// Centered basis evaluated at new points (rows match x_new).
Eigen::MatrixXd smooth_design(const SmoothTerm& term, const Eigen::VectorXd& x_new, int* n_extrapolated = nullptr);

struct SmoothEvaluation {
  Eigen::VectorXd values;
  int n_extrapolated = 0;
};

/// h(x) for given spline coefficients (length basis_dim - 1).
SmoothEvaluation evaluate_smooth(const SmoothTerm& term, const Eigen::VectorXd& coefficients,
                                 const Eigen::VectorXd& x_new);

/// Gaussian penalized least-squares fit y ~ intercept + h(x). Used for
/// scatterplot smoothing and as a reference fit in tests.
struct PenalizedLsFit {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  double edf = 0.0;  // of the smooth block
};
PenalizedLsFit penalized_least_squares(const SmoothTerm& term, const Eigen::VectorXd& y, double lambda);

/// Trace of the [start, start + size) diagonal block of (H + S)^{-1} H.
double block_edf(const Eigen::MatrixXd& hessian, const Eigen::MatrixXd& penalty, int start, int size);

}  // namespace copjoint
