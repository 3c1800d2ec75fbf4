#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "copjoint/copula.hpp"
#include "copjoint/dataset.hpp"
#include "copjoint/margins.hpp"
#include "copjoint/smooth.hpp"

namespace copjoint {

/// Two-equation recursive model: treatment margin, outcome margin (which
/// receives the observed treatment with coefficient gamma) and copula.
struct ModelSpec {
  MarginSpec treatment;
  MarginSpec outcome;
  CopulaSpec copula;
  int basis_dim = 10;
  /// Optional level -> label map for categorical columns, used in reports.
  std::vector<std::pair<std::string, std::vector<std::pair<int, std::string>>>> level_labels;
  /// Reference level per categorical column; the smallest code by default.
  std::vector<std::pair<std::string, int>> reference_levels;
};

struct SmoothBlock {
  SmoothTerm term;
  int start = 0;  // first column within the equation design
};

struct EquationDesign {
  Link link = Link::Probit;
  Eigen::MatrixXd x;
  std::vector<std::string> column_names;
  std::vector<SmoothBlock> smooths;
  int treatment_col = -1;  // outcome equation: column holding Y1
  int n_parametric() const;
};

struct JointDesign {
  EquationDesign treatment;
  EquationDesign outcome;
  Eigen::VectorXd y1;
  Eigen::VectorXd y2;
  std::vector<std::string> warnings;

  Eigen::Index n() const { return y1.size(); }
  int p1() const { return static_cast<int>(treatment.x.cols()); }
  int p2() const { return static_cast<int>(outcome.x.cols()); }
  int n_smooths() const { return static_cast<int>(treatment.smooths.size() + outcome.smooths.size()); }
  /// Full-parameter block-diagonal penalty for the given per-smooth lambdas
  /// (treatment smooths first). Dimension = p1 + p2 + extra.
  Eigen::MatrixXd penalty(const std::vector<double>& lambdas, int extra) const;
  /// Offset of each smooth block in the full parameter vector.
  std::vector<std::pair<int, int>> smooth_ranges() const;
  std::vector<std::string> smooth_names() const;
};

/// Builds both design matrices from complete data. Columns: intercept,
/// treatment (outcome equation), parametric, reference-coded categorical
/// indicators, centered spline bases.
JointDesign assemble_design(const Dataset& data, const ModelSpec& spec);

/// Direct construction from matrices (intercepts included by the caller);
/// `treatment_col` is the outcome column holding y1.
JointDesign make_design(Eigen::MatrixXd x1, Eigen::MatrixXd x2, Eigen::VectorXd y1, Eigen::VectorXd y2, Link link1,
                        Link link2, int treatment_col);

struct JointConfigProbs {
  double k11 = 0.0;
  double k10 = 0.0;
  double k01 = 0.0;
  double k00 = 0.0;
  bool clamped = false;  // a Frechet violation was corrected
};

JointConfigProbs joint_config_probs(double p1, double p2, const CopulaSpec& copula);

/// Probability clamp applied to the margins before copula evaluation.
inline constexpr double kProbClamp = 1e-12;
/// Floor applied to cell probabilities before taking the log.
inline constexpr double kCellFloor = 1e-300;

struct LoglikDiagnostics {
  int clamped_cells = 0;      // kappa below kCellFloor
  int frechet_clamps = 0;
};

/// Evaluates the copula log-likelihood and its analytic gradient over the
/// unconstrained parameter vector (beta1 | beta2 | theta_star). When the
/// copula parameter is fixed the vector omits theta_star.
class JointLikelihood {
 public:
  JointLikelihood(std::shared_ptr<const JointDesign> design, CopulaSpec copula,
                  std::optional<double> fixed_theta_star = std::nullopt);

  int n_params() const { return design_->p1() + design_->p2() + (fixed_theta_star_ ? 0 : 1); }
  bool theta_free() const { return !fixed_theta_star_.has_value(); }
  double theta_star(const Eigen::VectorXd& params) const;
  CopulaSpec copula_at(const Eigen::VectorXd& params) const;

  double loglik(const Eigen::VectorXd& params, LoglikDiagnostics* diag = nullptr) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& params) const;
  /// Per-observation log-likelihood contributions.
  Eigen::VectorXd loglik_terms(const Eigen::VectorXd& params) const;

  const JointDesign& design() const { return *design_; }
  std::shared_ptr<const JointDesign> design_ptr() const { return design_; }
  const CopulaSpec& copula_template() const { return copula_; }
  const ThetaMap& theta_map() const { return map_; }

 private:
  std::shared_ptr<const JointDesign> design_;
  CopulaSpec copula_;
  ThetaMap map_;
  std::optional<double> fixed_theta_star_;
};

struct FitOptions {
  int max_iter = 200;
  double grad_tol = 1e-6;
  double rel_tol = 1e-9;
  double coef_cap = 15.0;
  std::optional<double> fixed_theta_star;   // e.g. 0 for Gaussian independence
  std::vector<double> lambdas;              // fixed smoothing parameters; empty = select by AIC
  int smoothing_sweeps = 1;
  std::optional<Eigen::VectorXd> start;
};

struct FittedJointModel {
  std::shared_ptr<const JointDesign> design;
  CopulaSpec copula;                 // theta at the estimate
  bool theta_free = true;
  Eigen::VectorXd coefficients;      // beta1 | beta2 | theta_star
  Eigen::MatrixXd covariance;        // inverse penalized observed information
  Eigen::MatrixXd hessian;           // negative Hessian of the log-likelihood
  double edf_total = 0.0;
  std::vector<std::pair<std::string, double>> edf_per_smooth;
  std::vector<double> lambda;
  double loglik = 0.0;
  double penalized_loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::vector<double> objective_trace;   // penalized log-likelihood after each accepted step
  std::vector<std::string> warnings;
  LoglikDiagnostics diagnostics;

  Eigen::Index n() const { return design->n(); }
  int p1() const { return design->p1(); }
  int p2() const { return design->p2(); }
  double gamma() const { return coefficients(p1() + design->outcome.treatment_col); }
  double theta_star() const;
  Eigen::VectorXd standard_errors() const;
};

FittedJointModel fit(const ModelSpec& spec, const Dataset& data, const FitOptions& options = {});
FittedJointModel fit_design(std::shared_ptr<const JointDesign> design, const CopulaSpec& copula,
                            const FitOptions& options = {});

struct InformationCriteria {
  double aic = 0.0;
  double bic = 0.0;
  double edf_total = 0.0;
};

InformationCriteria information_criteria(const FittedJointModel& model);

}  // namespace copjoint
