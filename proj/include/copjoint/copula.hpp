#pragma once

#include <string>
#include <string_view>

namespace copjoint {

enum class Family { Gaussian, StudentT, Clayton, Joe, Frank };
enum class Rotation { R0, R180 };

std::string to_string(Family f);
std::string to_string(Rotation r);
Family parse_family(std::string_view name);

/// A bivariate copula: family, rotation and dependence parameter.
///
/// `theta` is rho for Gaussian and Student-t, and the Archimedean parameter
/// otherwise. `df` is only read for Student-t.
struct CopulaSpec {
  Family family = Family::Gaussian;
  Rotation rotation = Rotation::R0;
  double theta = 0.0;
  double df = 5.0;

  // Throws DomainError if theta/df fall outside the family domain.
  void validate() const;
  std::string label() const;  // e.g. "Clayton180", "StudentT(df=5)"
};

struct CopulaPartials {
  double du = 0.0;
  double dv = 0.0;
  double dtheta = 0.0;
};

// Standard normal helpers shared across the library.
double norm_cdf(double x);
double norm_pdf(double x);
double norm_quantile(double p);

/// Phi_2(x, y; rho), lower orthant probability of a standard bivariate normal.
/// Genz's double-precision Gauss-Legendre scheme (absolute error ~1e-15).
double bivariate_normal_cdf(double x, double y, double rho);
double bivariate_normal_pdf(double x, double y, double rho);

/// Lower orthant probability of the standard bivariate Student-t with
/// correlation rho and df degrees of freedom. Adaptive Gauss-Kronrod over the
/// conditional t distribution; throws QuadratureError when the error
/// estimate stays above tolerance.
double bivariate_t_cdf(double x, double y, double rho, double df);
double bivariate_t_pdf(double x, double y, double rho, double df);

/// C(u, v) including boundary values; u, v in [0, 1].
double copula_cdf(double u, double v, const CopulaSpec& spec);

/// Partial derivatives of C with respect to u, v and theta (natural scale).
/// Requires u, v strictly inside (0, 1); throws BoundaryError otherwise.
CopulaPartials copula_partials(double u, double v, const CopulaSpec& spec);

double theta_to_tau(const CopulaSpec& spec);

/// Inverse of theta_to_tau. Throws DomainError naming the attainable tau
/// range when tau cannot be reached by the family/rotation.
double tau_to_theta(Family family, Rotation rotation, double tau, double df = 5.0);

/// Smooth bijection between the natural parameter and the real line used by
/// the optimizer: tanh for rho, exp for Clayton, 1 + exp for Joe, identity
/// for Frank.
struct ThetaMap {
  Family family = Family::Gaussian;

  double from_unconstrained(double theta_star) const;
  double to_unconstrained(double theta) const;
  // d theta / d theta_star
  double derivative(double theta_star) const;
  // Box on theta_star that keeps the likelihood numerically well defined.
  double lower_bound() const;
  double upper_bound() const;
  // theta_star giving independence when attainable (Gaussian, t, Frank);
  // otherwise the weakest representable dependence.
  double independence() const;
};

ThetaMap theta_reparam(Family family);

}  // namespace copjoint
