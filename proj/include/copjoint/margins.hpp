#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace copjoint {

enum class Link { Probit, Logit, Cloglog };

std::string to_string(Link link);
Link parse_link(std::string_view name);   // "probit"/"p", "logit"/"l", "cloglog"/"c"
char link_code(Link link);                // 'p', 'l', 'c'

/// Inverse link g^{-1}(x): probit Phi(x), logit 1/(1+e^-x), cloglog 1-exp(-exp(x)).
double link_cdf(Link link, double x);
/// d/dx link_cdf(link, x).
double link_density(Link link, double x);
/// CDF F of the latent error implied by the link, F(x) = 1 - link_cdf(-x).
/// For probit and logit F coincides with link_cdf; for cloglog it is the
/// Gumbel (max) CDF exp(-exp(-x)).
double latent_error_cdf(Link link, double x);

/// P(Y = 1) = 1 - F(-eta).
double marginal_prob(Link link, double eta);

/// One equation of the recursive system: response, link and the covariates
/// entering its additive predictor.
struct MarginSpec {
  std::string response;
  Link link = Link::Probit;
  std::vector<std::string> parametric_terms;   // numeric or binary columns
  std::vector<std::string> categorical_terms;  // reference-coded factors
  std::vector<std::string> smooth_terms;       // penalized spline columns
  bool includes_treatment = false;             // outcome equation only (gamma)
};

/// marginal_prob for an assembled design row; throws DomainError on a
/// dimension mismatch.
double marginal_prob(Link link, const Eigen::VectorXd& coefficients, const Eigen::VectorXd& design_row);

}  // namespace copjoint
