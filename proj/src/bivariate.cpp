// Bivariate normal and Student-t orthant probabilities.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "copjoint/copula.hpp"
#include "copjoint/errors.hpp"

namespace copjoint {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Gauss-Legendre half-rules (6, 12 and 20 points) from Genz's BVND.
constexpr double kW[3][10] = {
    {0.1713244923791705, 0.3607615730481384, 0.4679139345726904},
    {0.04717533638651177, 0.1069393259953183, 0.1600783285433464, 0.2031674267230659,
     0.2334925365383547, 0.2491470458134029},
    {0.01761400713915212, 0.04060142980038694, 0.06267204833410906, 0.08327674157670475,
     0.1019301198172404, 0.1181945319615184, 0.1316886384491766, 0.1420961093183821,
     0.1491729864726037, 0.1527533871307259}};
constexpr double kX[3][10] = {
    {-0.9324695142031522, -0.6612093864662647, -0.2386191860831970},
    {-0.9815606342467191, -0.9041172563704750, -0.7699026741943050, -0.5873179542866171,
     -0.3678314989981802, -0.1252334085114692},
    {-0.9931285991850949, -0.9639719272779138, -0.9122344282513259, -0.8391169718222188,
     -0.7463319064601508, -0.6360536807265150, -0.5108670019508271, -0.3737060887154196,
     -0.2277858511416451, -0.07652652113349733}};

// Upper orthant P(X > dh, Y > dk) for correlation r.
double bvn_upper(double dh, double dk, double r) {
  int ng = 0;
  int lg = 3;
  if (std::abs(r) < 0.3) {
    ng = 0;
    lg = 3;
  } else if (std::abs(r) < 0.75) {
    ng = 1;
    lg = 6;
  } else {
    ng = 2;
    lg = 10;
  }

  double h = dh;
  double k = dk;
  double hk = h * k;
  double bvn = 0.0;

  if (std::abs(r) < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r);
    for (int i = 0; i < lg; ++i) {
      for (int sgn : {-1, 1}) {
        const double sn = std::sin(asr * (sgn * kX[ng][i] + 1.0) / 2.0);
        bvn += kW[ng][i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    bvn = bvn * asr / (2.0 * kTwoPi) + norm_cdf(-h) * norm_cdf(-k);
    return bvn;
  }

  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 16.0;
    bvn = a * std::exp(-(bs / as + hk) / 2.0) *
          (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    if (hk > -160.0) {
      const double b = std::sqrt(bs);
      bvn -= std::exp(-hk / 2.0) * std::sqrt(kTwoPi) * norm_cdf(-b / a) * b *
             (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a /= 2.0;
    for (int i = 0; i < lg; ++i) {
      for (int sgn : {-1, 1}) {
        const double xs = std::pow(a * (sgn * kX[ng][i] + 1.0), 2);
        const double rs = std::sqrt(1.0 - xs);
        const double asr = -(bs / xs + hk) / 2.0;
        if (asr > -100.0) {
          bvn += a * kW[ng][i] * std::exp(asr) *
                 (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                  (1.0 + c * xs * (1.0 + d * xs)));
        }
      }
    }
    bvn = -bvn / kTwoPi;
  }
  if (r > 0.0) {
    bvn += norm_cdf(-std::max(h, k));
  } else {
    bvn = -bvn;
    if (k > h) {
      if (h < 0.0) {
        bvn += norm_cdf(k) - norm_cdf(h);
      } else {
        bvn += norm_cdf(-h) - norm_cdf(-k);
      }
    }
  }
  return bvn;
}

}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi);
}

double norm_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return boost::math::quantile(boost::math::normal(), p);
}

double bivariate_normal_cdf(double x, double y, double rho) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("bivariate_normal_cdf: |rho| must be < 1");
  if (std::isnan(x) || std::isnan(y)) throw DomainError("bivariate_normal_cdf: NaN argument");
  if (x == -std::numeric_limits<double>::infinity() || y == -std::numeric_limits<double>::infinity())
    return 0.0;
  if (x == std::numeric_limits<double>::infinity()) return norm_cdf(y);
  if (y == std::numeric_limits<double>::infinity()) return norm_cdf(x);
  const double p = bvn_upper(-x, -y, rho);
  return std::clamp(p, 0.0, std::min(norm_cdf(x), norm_cdf(y)));
}

double bivariate_normal_pdf(double x, double y, double rho) {
  const double om = (1.0 - rho) * (1.0 + rho);
  return std::exp(-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * om)) / (kTwoPi * std::sqrt(om));
}

namespace {

// Dunnett-Sobel closed form for integer df, after Genz's BVTL.
double bvt_integer(int nu, double dh, double dk, double r) {
  const double pi = std::numbers::pi;
  const double ors = 1.0 - r * r;
  const double hrk = dh - r * dk;
  const double krh = dk - r * dh;
  double xnhk = 0.0, xnkh = 0.0;
  if (std::abs(hrk) + ors > 0.0) {
    xnhk = hrk * hrk / (hrk * hrk + ors * (nu + dk * dk));
    xnkh = krh * krh / (krh * krh + ors * (nu + dh * dh));
  }
  const double hs = hrk < 0.0 ? -1.0 : 1.0;
  const double ks = krh < 0.0 ? -1.0 : 1.0;
  double bvt = 0.0;
  if (nu % 2 == 0) {
    bvt = std::atan2(std::sqrt(ors), -r) / kTwoPi;
    double gmph = dh / std::sqrt(16.0 * (nu + dh * dh));
    double gmpk = dk / std::sqrt(16.0 * (nu + dk * dk));
    double btnckh = 2.0 * std::atan2(std::sqrt(xnkh), std::sqrt(1.0 - xnkh)) / pi;
    double btpdkh = 2.0 * std::sqrt(xnkh * (1.0 - xnkh)) / pi;
    double btnchk = 2.0 * std::atan2(std::sqrt(xnhk), std::sqrt(1.0 - xnhk)) / pi;
    double btpdhk = 2.0 * std::sqrt(xnhk * (1.0 - xnhk)) / pi;
    for (int j = 1; j <= nu / 2; ++j) {
      bvt += gmph * (1.0 + ks * btnckh);
      bvt += gmpk * (1.0 + hs * btnchk);
      btnckh += btpdkh;
      btpdkh = 2.0 * j * btpdkh * (1.0 - xnkh) / (2.0 * j + 1.0);
      btnchk += btpdhk;
      btpdhk = 2.0 * j * btpdhk * (1.0 - xnhk) / (2.0 * j + 1.0);
      gmph = gmph * (2.0 * j - 1.0) / (2.0 * j * (1.0 + dh * dh / nu));
      gmpk = gmpk * (2.0 * j - 1.0) / (2.0 * j * (1.0 + dk * dk / nu));
    }
  } else {
    const double snu = std::sqrt(static_cast<double>(nu));
    const double qhrk = std::sqrt(dh * dh + dk * dk - 2.0 * r * dh * dk + nu * ors);
    const double hkrn = dh * dk + r * nu;
    const double hkn = dh * dk - nu;
    const double hpk = dh + dk;
    bvt = std::atan2(-snu * (hkn * qhrk + hpk * hkrn), hkn * hkrn - nu * hpk * qhrk) / kTwoPi;
    if (bvt < -1e-15) bvt += 1.0;
    double gmph = dh / (kTwoPi * snu * (1.0 + dh * dh / nu));
    double gmpk = dk / (kTwoPi * snu * (1.0 + dk * dk / nu));
    double btnckh = std::sqrt(xnkh);
    double btpdkh = btnckh;
    double btnchk = std::sqrt(xnhk);
    double btpdhk = btnchk;
    for (int j = 1; j <= (nu - 1) / 2; ++j) {
      bvt += gmph * (1.0 + ks * btnckh);
      bvt += gmpk * (1.0 + hs * btnchk);
      btpdkh = (2.0 * j - 1.0) * btpdkh * (1.0 - xnkh) / (2.0 * j);
      btnckh += btpdkh;
      btpdhk = (2.0 * j - 1.0) * btpdhk * (1.0 - xnhk) / (2.0 * j);
      btnchk += btpdhk;
      gmph = gmph * 2.0 * j / ((2.0 * j + 1.0) * (1.0 + dh * dh / nu));
      gmpk = gmpk * 2.0 * j / ((2.0 * j + 1.0) * (1.0 + dk * dk / nu));
    }
  }
  return bvt;
}

}  // namespace

// Integer df: closed form. Otherwise
// T2(x, y) = int_0^{T_df(x)} T_{df+1}((y - rho s) sqrt((df+1) / ((df+s^2)(1-rho^2)))) dw,
// s = T_df^{-1}(w), split where the conditional argument changes sign.
double bivariate_t_cdf(double x, double y, double rho, double df) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("bivariate_t_cdf: |rho| must be < 1");
  if (!(df > 2.0)) throw DomainError("bivariate_t_cdf: df must exceed 2");
  if (std::isnan(x) || std::isnan(y)) throw DomainError("bivariate_t_cdf: NaN argument");
  const boost::math::students_t tdist(df);
  if (x == -std::numeric_limits<double>::infinity() || y == -std::numeric_limits<double>::infinity())
    return 0.0;
  if (x == std::numeric_limits<double>::infinity()) return boost::math::cdf(tdist, y);
  if (y == std::numeric_limits<double>::infinity()) return boost::math::cdf(tdist, x);
  const double upper = boost::math::cdf(tdist, x);
  if (upper <= 0.0) return 0.0;
  const double bound = std::min(upper, boost::math::cdf(tdist, y));

  if (df == std::round(df) && df < 1e6) {
    return std::clamp(bvt_integer(static_cast<int>(df), x, y, rho), 0.0, bound);
  }

  // P = int_{-inf}^x t_df(s) T_{df+1}((y - rho s) sqrt((df+1)/((df+s^2)(1-rho^2)))) ds
  const boost::math::students_t tcond(df + 1.0);
  const double om = (1.0 - rho) * (1.0 + rho);
  auto integrand = [&](double s) {
    const double z = (y - rho * s) * std::sqrt((df + 1.0) / ((df + s * s) * om));
    return boost::math::pdf(tdist, s) * boost::math::cdf(tcond, z);
  };
  thread_local boost::math::quadrature::tanh_sinh<double> ts(12);
  double val = 0.0, err_total = 0.0, err = 0.0;
  double split = x;
  if (rho != 0.0 && y / rho < x) split = y / rho;
  val += ts.integrate(integrand, -std::numeric_limits<double>::infinity(), split, 1e-12, &err);
  err_total += err;
  if (split < x) {
    val += ts.integrate(integrand, split, x, 1e-12, &err);
    err_total += err;
  }
  if (err_total > 1e-8) throw QuadratureError("bivariate_t_cdf: adaptive quadrature did not converge", err_total);
  return std::clamp(val, 0.0, bound);
}

double bivariate_t_pdf(double x, double y, double rho, double df) {
  const double om = (1.0 - rho) * (1.0 + rho);
  const double q = (x * x - 2.0 * rho * x * y + y * y) / om;
  return std::pow(1.0 + q / df, -(df + 2.0) / 2.0) / (kTwoPi * std::sqrt(om));
}

}  // namespace copjoint
