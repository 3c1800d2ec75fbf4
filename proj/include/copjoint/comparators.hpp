#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "copjoint/margins.hpp"

namespace copjoint {

struct GlmOptions {
  int max_iter = 100;
  double tol = 1e-10;           // relative change in penalized deviance
  double coef_cap = 15.0;       // separation guard on the linear-predictor scale
  Eigen::MatrixXd penalty;      // optional p x p quadratic penalty (0.5 b'Pb subtracted)
  Eigen::VectorXd start;        // optional starting coefficients
};

/// Binary-response GLM. Aliased columns are dropped and reported; their
/// coefficient is 0 and variance NaN.
struct GlmFit {
  Link link = Link::Logit;
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  double score_norm = 0.0;               // infinity norm at the returned estimate
  std::vector<double> deviance_trace;    // penalized deviance per iteration
  std::vector<int> dropped_columns;
  std::vector<std::string> warnings;

  Eigen::VectorXd fitted(const Eigen::MatrixXd& x) const;  // P(Y = 1)
};

GlmFit fit_glm_binary(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, Link link, const GlmOptions& opt = {});

/// Cox proportional hazards model with Breslow ties. Coefficients are on
/// the log-hazard scale (positive = shorter survival).
struct CoxFit {
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;            // inf on the diagonal for uninformative columns
  double partial_loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  double score_norm = 0.0;
  std::string ties_method = "breslow";
  std::vector<int> uninformative_columns;
  std::vector<std::string> warnings;
};

CoxFit fit_cox_ph(const Eigen::VectorXd& time, const Eigen::VectorXd& status, const Eigen::MatrixXd& x);

/// Breslow partial log-likelihood at a given coefficient vector.
double cox_partial_loglik(const Eigen::VectorXd& time, const Eigen::VectorXd& status, const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& beta);

/// Two-stage predictor substitution: logistic first stage for the
/// treatment, fitted probability substituted into a logistic outcome model.
struct TwoStageFit {
  GlmFit stage1;
  GlmFit stage2;                 // column 0 is the fitted treatment
  Eigen::VectorXd fitted_treatment;
  double treatment_coefficient = 0.0;
  double treatment_variance = 0.0;
  std::vector<std::string> warnings;
};

/// x_stage1 and x_stage2 must carry their own intercept columns.
TwoStageFit fit_2sps(const Eigen::VectorXd& y2, const Eigen::VectorXd& y1, const Eigen::MatrixXd& x_stage1,
                     const Eigen::MatrixXd& x_stage2);

}  // namespace copjoint
