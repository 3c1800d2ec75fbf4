#include "copjoint/copula.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "copjoint/errors.hpp"

namespace copjoint {

std::string to_string(Family f) {
  switch (f) {
    case Family::Gaussian: return "Gaussian";
    case Family::StudentT: return "StudentT";
    case Family::Clayton: return "Clayton";
    case Family::Joe: return "Joe";
    case Family::Frank: return "Frank";
  }
  return "?";
}

std::string to_string(Rotation r) { return r == Rotation::R0 ? "0" : "180"; }

Family parse_family(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "gaussian" || s == "normal" || s == "n") return Family::Gaussian;
  if (s == "studentt" || s == "student-t" || s == "t") return Family::StudentT;
  if (s == "clayton" || s == "c") return Family::Clayton;
  if (s == "joe" || s == "j") return Family::Joe;
  if (s == "frank" || s == "f") return Family::Frank;
  throw DomainError("unknown copula family '" + std::string(name) + "'");
}

void CopulaSpec::validate() const {
  if (!std::isfinite(theta)) throw DomainError("copula parameter must be finite");
  switch (family) {
    case Family::Gaussian:
      if (!(std::abs(theta) < 1.0)) throw DomainError("Gaussian copula requires rho in (-1, 1)");
      break;
    case Family::StudentT:
      if (!(std::abs(theta) < 1.0)) throw DomainError("Student-t copula requires rho in (-1, 1)");
      if (!(df > 2.0)) throw DomainError("Student-t copula requires df > 2");
      break;
    case Family::Clayton:
      if (!(theta > 0.0)) throw DomainError("Clayton copula requires theta > 0");
      break;
    case Family::Joe:
      if (!(theta > 1.0)) throw DomainError("Joe copula requires theta > 1");
      break;
    case Family::Frank:
      // theta = 0 is the independence limit
      if (!std::isfinite(theta)) throw DomainError("Frank copula requires a finite theta");
      break;
  }
}

std::string CopulaSpec::label() const {
  std::ostringstream os;
  os << to_string(family);
  if (rotation == Rotation::R180) os << "180";
  if (family == Family::StudentT) os << "(df=" << df << ")";
  return os.str();
}

namespace {

// cdf and partials are evaluated back to back on the same margins
double t_quantile(double p, double df) {
  thread_local double last_p[2] = {-1.0, -1.0};
  thread_local double last_df[2] = {0.0, 0.0};
  thread_local double last_x[2] = {0.0, 0.0};
  thread_local int slot = 0;
  for (int k = 0; k < 2; ++k) {
    if (last_p[k] == p && last_df[k] == df) return last_x[k];
  }
  const double x = boost::math::quantile(boost::math::students_t(df), p);
  slot ^= 1;
  last_p[slot] = p;
  last_df[slot] = df;
  last_x[slot] = x;
  return x;
}

// Frank below this |theta| is evaluated by its second-order expansion.
constexpr double kFrankSeries = 1e-4;

double clayton_log_a(double u, double v, double theta) {
  // log(u^-theta + v^-theta - 1) without overflow
  const double lu = -theta * std::log(u);
  const double lv = -theta * std::log(v);
  const double m = std::max(lu, lv);
  if (m < 1.0) return std::log1p(std::expm1(lu) + std::expm1(lv));
  return m + std::log(std::exp(lu - m) + std::exp(lv - m) - std::exp(-m));
}

// log S for Joe, S = a + b - ab with a = (1-u)^theta; la = log a, oma = 1 - a
double joe_log_s(double la, double lb, double oma, double omb) {
  const double prod = oma * omb;
  if (prod < 0.5) return std::log1p(-prod);
  return std::log(std::exp(la) + std::exp(lb) * oma);
}

// Frank with theta > 0: 1 + ab/d = N / (1 - e^-theta), N a sum of two
// non-negative terms, so log N has no cancellation.
struct FrankTerms {
  double t_u, t_v, log_n;
};

FrankTerms frank_terms(double u, double v, double th) {
  FrankTerms f;
  f.t_u = -th * u + std::log(-std::expm1(-th * v));  // e^{-th u}(1 - e^{-th v})
  f.t_v = -th * v + std::log(-std::expm1(-th * u));  // e^{-th v}(1 - e^{-th u})
  // N = e^{-th u}(1 - e^{-th v}) + e^{-th v} - e^{-th}
  const double t2 = v < 1.0 ? -th * v + std::log(-std::expm1(-th * (1.0 - v))) : -std::numeric_limits<double>::infinity();
  const double m = std::max(f.t_u, t2);
  f.log_n = m == -std::numeric_limits<double>::infinity() ? m : m + std::log1p(std::exp(std::min(f.t_u, t2) - m));
  return f;
}

double base_cdf(double u, double v, const CopulaSpec& s) {
  switch (s.family) {
    case Family::Gaussian:
      if (s.theta == 0.0) return u * v;
      return bivariate_normal_cdf(norm_quantile(u), norm_quantile(v), s.theta);
    case Family::StudentT: {
      return bivariate_t_cdf(t_quantile(u, s.df), t_quantile(v, s.df), s.theta, s.df);
    }
    case Family::Clayton:
      return std::exp(-clayton_log_a(u, v, s.theta) / s.theta);
    case Family::Joe: {
      const double la = s.theta * std::log1p(-u);  // log (1-u)^theta
      const double lb = s.theta * std::log1p(-v);
      const double oma = -std::expm1(la);
      const double omb = -std::expm1(lb);
      return -std::expm1(joe_log_s(la, lb, oma, omb) / s.theta);
    }
    case Family::Frank: {
      const double th = s.theta;
      if (std::abs(th) < kFrankSeries) {
        const double g = u * v * (1 - u) * (1 - v);
        return u * v + th / 2.0 * g + th * th / 12.0 * g * (1 - 2 * u) * (1 - 2 * v);
      }
      if (th > 0.0) return -(frank_terms(u, v, th).log_n - std::log(-std::expm1(-th))) / th;
      const double a = std::expm1(-th * u);
      const double b = std::expm1(-th * v);
      const double d = std::expm1(-th);
      return -std::log1p(a * b / d) / th;
    }
  }
  return 0.0;
}

CopulaPartials base_partials(double u, double v, const CopulaSpec& s) {
  CopulaPartials p;
  const double th = s.theta;
  switch (s.family) {
    case Family::Gaussian: {
      const double x = norm_quantile(u);
      const double y = norm_quantile(v);
      const double sd = std::sqrt((1.0 - th) * (1.0 + th));
      p.du = norm_cdf((y - th * x) / sd);
      p.dv = norm_cdf((x - th * y) / sd);
      p.dtheta = bivariate_normal_pdf(x, y, th);
      break;
    }
    case Family::StudentT: {
      const boost::math::students_t t1(s.df + 1.0);
      const double x = t_quantile(u, s.df);
      const double y = t_quantile(v, s.df);
      const double om = (1.0 - th) * (1.0 + th);
      p.du = boost::math::cdf(t1, (y - th * x) * std::sqrt((s.df + 1.0) / ((s.df + x * x) * om)));
      p.dv = boost::math::cdf(t1, (x - th * y) * std::sqrt((s.df + 1.0) / ((s.df + y * y) * om)));
      // dT2/drho: the t kernel with exponent -df/2, not the density
      const double q = (x * x - 2.0 * th * x * y + y * y) / om;
      p.dtheta = std::pow(1.0 + q / s.df, -s.df / 2.0) / (2.0 * std::numbers::pi * std::sqrt(om));
      break;
    }
    case Family::Clayton: {
      const double log_a = clayton_log_a(u, v, th);
      const double lu = std::log(u);
      const double lv = std::log(v);
      p.du = std::exp((-th - 1.0) * lu - (1.0 / th + 1.0) * log_a);
      p.dv = std::exp((-th - 1.0) * lv - (1.0 / th + 1.0) * log_a);
      // dA/dtheta / A with A = u^-th + v^-th - 1, scaled to avoid overflow
      const double eu = std::exp(-th * lu - log_a);
      const double ev = std::exp(-th * lv - log_a);
      const double da_over_a = -(eu * lu + ev * lv);
      const double c = std::exp(-log_a / th);
      p.dtheta = c * (log_a / (th * th) - da_over_a / th);
      break;
    }
    case Family::Joe: {
      const double lub = std::log1p(-u);
      const double lvb = std::log1p(-v);
      const double a = std::exp(th * lub);
      const double b = std::exp(th * lvb);
      const double oma = -std::expm1(th * lub);
      const double omb = -std::expm1(th * lvb);
      const double log_s = joe_log_s(th * lub, th * lvb, oma, omb);
      const double s1 = std::exp(log_s / th);  // S^(1/theta)
      const double s_pow = std::exp((1.0 / th - 1.0) * log_s);
      p.du = s_pow * std::exp((th - 1.0) * lub) * omb;
      p.dv = s_pow * std::exp((th - 1.0) * lvb) * oma;
      const double ds = a * lub * omb + b * lvb * oma;
      p.dtheta = -s1 * (-log_s / (th * th) + ds / (th * std::exp(log_s)));
      break;
    }
    case Family::Frank: {
      if (std::abs(th) < kFrankSeries) {
        const double g = u * v * (1 - u) * (1 - v);
        const double h = (1 - 2 * u) * (1 - 2 * v);
        const double du_uu = 1 - 6 * u + 6 * u * u;  // d/du [u(1-u)(1-2u)]
        const double dv_vv = 1 - 6 * v + 6 * v * v;
        p.du = v + th / 2.0 * v * (1 - v) * (1 - 2 * u) + th * th / 12.0 * v * (1 - v) * (1 - 2 * v) * du_uu;
        p.dv = u + th / 2.0 * u * (1 - u) * (1 - 2 * v) + th * th / 12.0 * u * (1 - u) * (1 - 2 * u) * dv_vv;
        p.dtheta = g / 2.0 + th / 6.0 * g * h;
        break;
      }
      if (th > 0.0) {
        const FrankTerms f = frank_terms(u, v, th);
        const double log_d = std::log(-std::expm1(-th));
        p.du = std::exp(f.t_u - f.log_n);
        p.dv = std::exp(f.t_v - f.log_n);
        // dN/dtheta / N = -u e^{-th u}(1 - e^{-th v})/N - v e^{-th v}(1 - e^{-th u})/N + e^{-th}/N
        const double dn = -u * p.du - v * p.dv + std::exp(-th - f.log_n);
        const double dl = dn - std::exp(-th - log_d);
        const double l = f.log_n - log_d;
        p.dtheta = l / (th * th) - dl / th;
        break;
      }
      const double a = std::expm1(-th * u);
      const double b = std::expm1(-th * v);
      const double d = std::expm1(-th);
      const double denom = d + a * b;
      p.du = std::exp(-th * u) * b / denom;
      p.dv = std::exp(-th * v) * a / denom;
      const double ap = -u * std::exp(-th * u);
      const double bp = -v * std::exp(-th * v);
      const double dp = -std::exp(-th);
      const double r = a * b / d;
      const double dr = (ap * b + a * bp) / d - a * b * dp / (d * d);
      p.dtheta = std::log1p(r) / (th * th) - dr / (th * (1.0 + r));
      break;
    }
  }
  return p;
}

void check_prob(double u, const char* name) {
  if (!std::isfinite(u)) throw DomainError(std::string("copula: non-finite ") + name);
  if (u < 0.0 || u > 1.0) throw DomainError(std::string("copula: ") + name + " outside [0, 1]");
}

}  // namespace

double copula_cdf(double u, double v, const CopulaSpec& spec) {
  check_prob(u, "u");
  check_prob(v, "v");
  spec.validate();
  if (u == 0.0 || v == 0.0) return 0.0;
  if (u == 1.0) return v;
  if (v == 1.0) return u;
  double c = 0.0;
  if (spec.rotation == Rotation::R0) {
    c = base_cdf(u, v, spec);
  } else {
    c = u + v - 1.0 + base_cdf(1.0 - u, 1.0 - v, spec);
  }
  return std::clamp(c, std::max(0.0, u + v - 1.0), std::min(u, v));
}

CopulaPartials copula_partials(double u, double v, const CopulaSpec& spec) {
  check_prob(u, "u");
  check_prob(v, "v");
  if (u <= 0.0 || u >= 1.0 || v <= 0.0 || v >= 1.0)
    throw BoundaryError("copula_partials: u and v must lie strictly inside (0, 1)");
  spec.validate();
  if (spec.rotation == Rotation::R0) return base_partials(u, v, spec);
  const CopulaPartials b = base_partials(1.0 - u, 1.0 - v, spec);
  return {1.0 - b.du, 1.0 - b.dv, b.dtheta};
}

namespace {

double joe_tau(double theta) {
  // tau = 1 - 4 sum_k 1 / (k (theta k + 2) (theta (k - 1) + 2))
  constexpr int kTerms = 20000;
  double sum = 0.0;
  for (int k = kTerms; k >= 1; --k) {
    const double kk = k;
    sum += 1.0 / (kk * (theta * kk + 2.0) * (theta * (kk - 1.0) + 2.0));
  }
  const double tail_from = kTerms + 0.5;
  sum += 1.0 / (2.0 * theta * theta * tail_from * tail_from);
  return 1.0 - 4.0 * sum;
}

double debye1(double theta) {
  auto f = [](double t) { return t == 0.0 ? 1.0 : t / std::expm1(t); };
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, theta, 10, 1e-14);
  return integral / theta;
}

double frank_tau(double theta) {
  if (std::abs(theta) < 1e-6) return theta / 9.0;  // tau ~ theta / 9 near independence
  return 1.0 - 4.0 / theta * (1.0 - debye1(theta));
}

}  // namespace

double theta_to_tau(const CopulaSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case Family::Gaussian:
    case Family::StudentT:
      return 2.0 / std::numbers::pi * std::asin(spec.theta);
    case Family::Clayton:
      return spec.theta / (spec.theta + 2.0);
    case Family::Joe:
      return joe_tau(spec.theta);
    case Family::Frank:
      return frank_tau(spec.theta);
  }
  return 0.0;
}

double tau_to_theta(Family family, Rotation rotation, double tau, double df) {
  if (!std::isfinite(tau)) throw DomainError("tau_to_theta: tau must be finite");
  auto out_of_range = [&](const char* range) {
    std::ostringstream os;
    os << "tau_to_theta: tau = " << tau << " unattainable for " << to_string(family)
       << (rotation == Rotation::R180 ? "180" : "") << "; attainable tau range is " << range;
    return DomainError(os.str());
  };
  switch (family) {
    case Family::Gaussian:
    case Family::StudentT:
      if (!(std::abs(tau) < 1.0)) throw out_of_range("(-1, 1)");
      return std::sin(std::numbers::pi * tau / 2.0);
    case Family::Clayton:
      if (!(tau > 0.0 && tau < 1.0)) throw out_of_range("(0, 1)");
      return 2.0 * tau / (1.0 - tau);
    case Family::Joe: {
      if (!(tau > 0.0 && tau < 1.0)) throw out_of_range("(0, 1)");
      // Bracket: tau(1) = 0, tau grows to 1 as theta -> inf.
      double hi = 2.0;
      while (joe_tau(hi) < tau) hi *= 2.0;
      auto f = [&](double th) { return joe_tau(th) - tau; };
      boost::uintmax_t iters = 200;
      const auto r = boost::math::tools::toms748_solve(
          f, 1.0 + 1e-15, hi, -tau, joe_tau(hi) - tau, boost::math::tools::eps_tolerance<double>(50), iters);
      return 0.5 * (r.first + r.second);
    }
    case Family::Frank: {
      if (!(std::abs(tau) < 1.0)) throw out_of_range("(-1, 1)");
      if (tau == 0.0) return 0.0;
      const double sign = tau > 0 ? 1.0 : -1.0;
      double hi = 1.0;
      while (frank_tau(sign * hi) * sign < std::abs(tau)) hi *= 2.0;
      auto f = [&](double th) { return frank_tau(sign * th) * sign - std::abs(tau); };
      boost::uintmax_t iters = 200;
      const auto r = boost::math::tools::toms748_solve(
          f, 0.0, hi, -std::abs(tau), f(hi), boost::math::tools::eps_tolerance<double>(50), iters);
      return sign * 0.5 * (r.first + r.second);
    }
  }
  (void)df;
  return 0.0;
}

double ThetaMap::from_unconstrained(double ts) const {
  switch (family) {
    case Family::Gaussian:
    case Family::StudentT: return std::tanh(ts);
    case Family::Clayton: return std::exp(ts);
    case Family::Joe: return 1.0 + std::exp(ts);
    case Family::Frank: return ts;
  }
  return ts;
}

double ThetaMap::to_unconstrained(double th) const {
  switch (family) {
    case Family::Gaussian:
    case Family::StudentT: return std::atanh(th);
    case Family::Clayton: return std::log(th);
    case Family::Joe: return std::log(th - 1.0);
    case Family::Frank: return th;
  }
  return th;
}

double ThetaMap::derivative(double ts) const {
  switch (family) {
    case Family::Gaussian:
    case Family::StudentT: {
      const double t = std::tanh(ts);
      return 1.0 - t * t;
    }
    case Family::Clayton:
    case Family::Joe: return std::exp(ts);
    case Family::Frank: return 1.0;
  }
  return 1.0;
}

double ThetaMap::lower_bound() const {
  switch (family) {
    case Family::Gaussian:
    case Family::StudentT: return -4.5;
    case Family::Clayton:
    case Family::Joe: return -9.0;
    case Family::Frank: return -50.0;
  }
  return -1.0;
}

double ThetaMap::upper_bound() const {
  switch (family) {
    case Family::Gaussian:
    case Family::StudentT: return 4.5;
    case Family::Clayton:
    case Family::Joe: return 4.5;
    case Family::Frank: return 50.0;
  }
  return 1.0;
}

double ThetaMap::independence() const {
  switch (family) {
    case Family::Clayton:
    case Family::Joe: return lower_bound();
    default: return 0.0;
  }
}

ThetaMap theta_reparam(Family family) { return ThetaMap{family}; }

}  // namespace copjoint
