#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "copjoint/joint_model.hpp"

namespace copjoint {

enum class SateVariant { MarginalToggle, ConditionalOnTreatment };
std::string to_string(SateVariant v);
SateVariant parse_sate_variant(const std::string& s);

struct SateEstimate {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  SateVariant variant = SateVariant::MarginalToggle;
  int n_draws = 0;
  double level = 0.95;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

/// SATE at an arbitrary parameter vector (beta1 | beta2 [| theta_star]).
/// marginal_toggle averages F2(eta2 | Y1 = 1) - F2(eta2 | Y1 = 0);
/// conditional_on_treatment averages C(p1, p2(1)) / p1 - (p2(0) - C(p1, p2(0))) / (1 - p1).
double sate_at(const JointDesign& design, const CopulaSpec& copula_template, bool theta_free,
               const Eigen::VectorXd& params, SateVariant variant);

/// Point estimate on the model's own design.
double sate(const FittedJointModel& model, SateVariant variant = SateVariant::MarginalToggle);

/// Coefficient draws from N(estimate, covariance). Draw d uses the stream
/// derived from (seed, d), so the draws do not depend on `jobs`.
Eigen::MatrixXd draw_coefficients(const FittedJointModel& model, int n_draws, std::uint64_t seed,
                                  std::vector<std::string>* warnings = nullptr);

/// Percentile interval from simulated coefficient vectors.
SateEstimate sate_ci(const FittedJointModel& model, SateVariant variant = SateVariant::MarginalToggle,
                     int n_draws = 1000, double level = 0.95, std::uint64_t seed = 1, int jobs = 1);

enum class TauCiMethod { Simulation, ObservedInformation };

struct DependenceSummary {
  double theta = 0.0;
  double tau = 0.0;
  double ci_low = 0.0;       // tau scale
  double ci_high = 0.0;
  double theta_ci_low = 0.0;
  double theta_ci_high = 0.0;
  int n_draws = 0;
  TauCiMethod method = TauCiMethod::Simulation;
};

DependenceSummary kendall_tau_ci(const FittedJointModel& model, int n_draws = 1000, double level = 0.95,
                                 std::uint64_t seed = 1, TauCiMethod method = TauCiMethod::Simulation);

/// Type-1 (inverse empirical CDF) sample quantile; commutes with monotone maps.
double empirical_quantile(std::vector<double> values, double prob);

struct GridRequest {
  Family family = Family::Gaussian;
  Rotation rotation = Rotation::R0;
  Link treatment_link = Link::Probit;
  Link outcome_link = Link::Probit;
  std::string label() const;
  bool operator==(const GridRequest& o) const = default;
};

struct ModelGridRow {
  GridRequest request;
  SateEstimate sate;
  DependenceSummary tau;
  double aic = 0.0;
  double bic = 0.0;
  double loglik = 0.0;
  double edf = 0.0;
  bool converged = false;
  bool failed = false;
  std::string error;
  std::vector<std::string> warnings;
  std::shared_ptr<const FittedJointModel> model;  // null when the fit failed
};

struct GridOptions {
  FitOptions fit;
  SateVariant variant = SateVariant::MarginalToggle;
  int n_draws = 1000;
  double level = 0.95;
  std::uint64_t seed = 1;
  int jobs = 1;
};

/// Fits every requested combination and ranks by (AIC, BIC). Converged fits
/// come first, then non-converged, then failures. Duplicate requests are
/// dropped with a warning.
std::vector<ModelGridRow> model_grid(const Dataset& data, const std::vector<GridRequest>& requests,
                                     const ModelSpec& spec_template, const GridOptions& options,
                                     std::vector<std::string>* warnings = nullptr);

}  // namespace copjoint
