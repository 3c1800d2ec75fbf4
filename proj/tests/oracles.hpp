#pragma once

// Reference implementations written independently of the library: direct
// quadrature and textbook closed forms. Slow but simple.

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/digamma.hpp>

#include "copjoint/copula.hpp"
#include "copjoint/dataset.hpp"
#include "copjoint/margins.hpp"

namespace oracle {

using big = boost::multiprecision::cpp_bin_float_50;

inline double Phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
inline double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double Phi_inv(double p) { return boost::math::quantile(boost::math::normal(), p); }

// P(X <= x, Y <= y) = int_{-inf}^x phi(s) Phi((y - rho s) / sqrt(1 - rho^2)) ds
inline double phi2(double x, double y, double rho) {
  const double sd = std::sqrt(1.0 - rho * rho);
  auto f = [&](double s) { return phi(s) * Phi((y - rho * s) / sd); };
  const double lo = -40.0;
  if (x <= lo) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, x, 20, 1e-15);
}

inline double t2(double x, double y, double rho, double df) {
  const boost::math::students_t t(df), t1(df + 1.0);
  const double om = 1.0 - rho * rho;
  auto f = [&](double s) {
    return boost::math::pdf(t, s) * boost::math::cdf(t1, (y - rho * s) * std::sqrt((df + 1.0) / ((df + s * s) * om)));
  };
  using gk = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double inf = std::numeric_limits<double>::infinity();
  // the conditional cdf turns over sharply near s = y / rho
  const double c = rho != 0.0 ? y / rho : inf;
  if (c >= x) return gk::integrate(f, -inf, x, 15, 1e-12);
  return gk::integrate(f, -inf, c, 15, 1e-12) + gk::integrate(f, c, x, 15, 1e-12);
}

inline double copula_base(copjoint::Family f, double u, double v, double th, double df) {
  using copjoint::Family;
  switch (f) {
    case Family::Gaussian:
      return phi2(Phi_inv(u), Phi_inv(v), th);
    case Family::StudentT: {
      const boost::math::students_t t(df);
      return t2(boost::math::quantile(t, u), boost::math::quantile(t, v), th, df);
    }
    // Archimedean forms in 50-digit arithmetic
    case Family::Clayton: {
      const big U = u, V = v, T = th;
      return static_cast<double>(pow(pow(U, -T) + pow(V, -T) - 1, -1 / T));
    }
    case Family::Joe: {
      const big T = th, a = pow(1 - big(u), T), b = pow(1 - big(v), T);
      return static_cast<double>(1 - pow(a + b - a * b, 1 / T));
    }
    case Family::Frank: {
      const big T = th;
      return static_cast<double>(-log(1 + (exp(-T * u) - 1) * (exp(-T * v) - 1) / (exp(-T) - 1)) / T);
    }
  }
  return 0.0;
}

inline double copula(const copjoint::CopulaSpec& s, double u, double v) {
  if (s.rotation == copjoint::Rotation::R180) return u + v - 1.0 + copula_base(s.family, 1.0 - u, 1.0 - v, s.theta, s.df);
  return copula_base(s.family, u, v, s.theta, s.df);
}

inline double inv_link(copjoint::Link l, double eta) {
  switch (l) {
    case copjoint::Link::Probit: return Phi(eta);
    case copjoint::Link::Logit: return 1.0 / (1.0 + std::exp(-eta));
    case copjoint::Link::Cloglog: return 1.0 - std::exp(-std::exp(eta));
  }
  return 0.0;
}

// tau = 1 + 2 / (2 - theta) (psi(2) - psi(2 / theta + 1)), theta != 2
inline double joe_tau(double th) {
  using boost::math::digamma;
  return 1.0 + 2.0 / (2.0 - th) * (digamma(2.0) - digamma(2.0 / th + 1.0));
}

inline double frank_tau(double th) {
  auto f = [](double t) { return t == 0.0 ? 1.0 : t / std::expm1(t); };
  const double d = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, th, 15, 1e-15) / th;
  return 1.0 - 4.0 / th * (1.0 - d);
}

// Recursive bivariate probit data with correlated latent errors.
struct Sim {
  Eigen::MatrixXd x1, x2;   // x2 column 1 holds y1
  Eigen::VectorXd y1, y2;
  copjoint::Dataset data;   // columns y1, y2, a, b, c
};

inline Sim recursive_probit(int n, double rho, double gamma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Sim s;
  s.x1.resize(n, 3);
  s.x2.resize(n, 3);
  s.y1.resize(n);
  s.y2.resize(n);
  Eigen::VectorXd a(n), b(n), c(n);
  for (int i = 0; i < n; ++i) {
    a(i) = z(rng);
    b(i) = z(rng);
    c(i) = z(rng);
    const double e1 = z(rng);
    const double e2 = rho * e1 + std::sqrt(1.0 - rho * rho) * z(rng);
    s.y1(i) = 0.2 + 0.8 * a(i) - 0.5 * b(i) + e1 > 0 ? 1.0 : 0.0;
    s.y2(i) = -0.1 + gamma * s.y1(i) + 0.6 * c(i) + e2 > 0 ? 1.0 : 0.0;
    s.x1.row(i) << 1.0, a(i), b(i);
    s.x2.row(i) << 1.0, s.y1(i), c(i);
  }
  s.data.add_column("y1", s.y1);
  s.data.add_column("y2", s.y2);
  s.data.add_column("a", a);
  s.data.add_column("b", b);
  s.data.add_column("c", c);
  return s;
}

}  // namespace oracle
