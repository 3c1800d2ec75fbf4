#include <doctest.h>

#include <cmath>
#include <vector>

#include "copjoint/copula.hpp"
#include "copjoint/errors.hpp"
#include "copjoint/joint_model.hpp"
#include "oracles.hpp"

using namespace copjoint;

namespace {

CopulaSpec make(Family f, double th, Rotation r = Rotation::R0, double df = 5.0) {
  CopulaSpec s;
  s.family = f;
  s.theta = th;
  s.rotation = r;
  s.df = df;
  return s;
}

std::vector<CopulaSpec> family_grid() {
  std::vector<CopulaSpec> out;
  for (auto r : {Rotation::R0, Rotation::R180}) {
    for (double th : {-0.8, -0.3, 0.0, 0.4, 0.9}) {
      out.push_back(make(Family::Gaussian, th, r));
      out.push_back(make(Family::StudentT, th, r));
    }
    for (double th : {0.1, 1.0, 4.0, 12.0}) out.push_back(make(Family::Clayton, th, r));
    for (double th : {1.05, 2.0, 5.0, 15.0}) out.push_back(make(Family::Joe, th, r));
    for (double th : {-20.0, -2.0, 0.5, 8.0, 35.0}) out.push_back(make(Family::Frank, th, r));
  }
  return out;
}

const double kGrid[] = {0.001, 0.05, 0.2, 0.5, 0.77, 0.95, 0.999};

}  // namespace

TEST_CASE("tau fixtures") {
  CHECK(std::abs(theta_to_tau(make(Family::Gaussian, 0.7071)) - 0.5) < 1e-4);
  CHECK(theta_to_tau(make(Family::Clayton, 2.0)) == 0.5);
  CHECK(std::abs(theta_to_tau(make(Family::Joe, 2.8562)) - 0.5) < 1e-3);
  CHECK(theta_to_tau(make(Family::StudentT, 0.0)) == 0.0);
}

TEST_CASE("Joe and Frank tau against quadrature oracles") {
  for (double th : {1.1, 1.5, 2.5, 2.8562, 4.0, 9.0, 30.0}) {
    CHECK(std::abs(theta_to_tau(make(Family::Joe, th)) - oracle::joe_tau(th)) < 1e-10);
  }
  for (double th : {-30.0, -5.0, -0.5, 0.5, 3.0, 10.0, 45.0}) {
    CHECK(std::abs(theta_to_tau(make(Family::Frank, th)) - oracle::frank_tau(th)) < 1e-10);
  }
  // rotation leaves tau unchanged
  CHECK(theta_to_tau(make(Family::Joe, 3.0, Rotation::R180)) == theta_to_tau(make(Family::Joe, 3.0)));
}

TEST_CASE("tau to theta round trip and attainable range") {
  for (double tau : {0.05, 0.3, 0.5, 0.8}) {
    for (Family f : {Family::Gaussian, Family::StudentT, Family::Clayton, Family::Joe, Family::Frank}) {
      const double th = tau_to_theta(f, Rotation::R0, tau);
      CHECK(theta_to_tau(make(f, th)) == doctest::Approx(tau).epsilon(1e-9));
    }
  }
  CHECK(tau_to_theta(Family::Frank, Rotation::R0, -0.4) < 0.0);
  CHECK(tau_to_theta(Family::Frank, Rotation::R0, 0.0) == 0.0);
  CHECK_THROWS_AS(tau_to_theta(Family::Clayton, Rotation::R0, -0.2), DomainError);
  CHECK_THROWS_AS(tau_to_theta(Family::Joe, Rotation::R180, -0.1), DomainError);
  try {
    tau_to_theta(Family::Clayton, Rotation::R0, -0.2);
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("(0, 1)") != std::string::npos);
  }
}

TEST_CASE("bivariate normal against quadrature") {
  CHECK(bivariate_normal_cdf(0.0, 0.0, 0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  for (double rho : {-0.95, -0.5, 0.0, 0.3, 0.7071, 0.99}) {
    for (double x : {-3.0, -0.7, 0.0, 1.2, 2.5}) {
      for (double y : {-2.0, 0.4, 3.1}) {
        CHECK(std::abs(bivariate_normal_cdf(x, y, rho) - oracle::phi2(x, y, rho)) < 1e-12);
      }
    }
  }
}

TEST_CASE("bivariate t against quadrature") {
  for (double df : {3.0, 4.0, 5.0, 7.5, 10.0}) {
    for (double rho : {-0.8, 0.0, 0.6, 0.95}) {
      for (double x : {-2.5, 0.0, 1.3}) {
        for (double y : {-1.0, 0.7, 4.0}) {
          CHECK(std::abs(bivariate_t_cdf(x, y, rho, df) - oracle::t2(x, y, rho, df)) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("copula cdf against closed forms") {
  for (const auto& s : family_grid()) {
    for (double u : kGrid) {
      for (double v : kGrid) {
        CAPTURE(s.label());
        CAPTURE(s.theta);
        CAPTURE(u);
        CAPTURE(v);
        CHECK(std::abs(copula_cdf(u, v, s) - oracle::copula(s, u, v)) < 1e-9);
      }
    }
  }
}

TEST_CASE("Frechet bounds and margins") {
  for (const auto& s : family_grid()) {
    for (double u : kGrid) {
      for (double v : kGrid) {
        const double c = copula_cdf(u, v, s);
        CHECK(c >= std::max(0.0, u + v - 1.0) - 1e-14);
        CHECK(c <= std::min(u, v) + 1e-14);
      }
      CHECK(copula_cdf(u, 1.0, s) == doctest::Approx(u).epsilon(1e-12));
      CHECK(copula_cdf(0.0, u, s) == 0.0);
    }
  }
}

TEST_CASE("rotation identity") {
  for (const auto& s : family_grid()) {
    if (s.rotation != Rotation::R180) continue;
    CopulaSpec base = s;
    base.rotation = Rotation::R0;
    for (double u : kGrid) {
      for (double v : kGrid) {
        CHECK(std::abs(copula_cdf(u, v, s) - (u + v - 1.0 + copula_cdf(1.0 - u, 1.0 - v, base))) < 1e-13);
      }
    }
  }
}

TEST_CASE("partials against finite differences") {
  const double h = 1e-6;
  for (const auto& s : family_grid()) {
    for (double u : {0.1, 0.35, 0.6, 0.9}) {
      for (double v : {0.15, 0.5, 0.85}) {
        const auto p = copula_partials(u, v, s);
        const double fu = (copula_cdf(u + h, v, s) - copula_cdf(u - h, v, s)) / (2 * h);
        const double fv = (copula_cdf(u, v + h, s) - copula_cdf(u, v - h, s)) / (2 * h);
        CopulaSpec sp = s, sm = s;
        sp.theta += h;
        sm.theta -= h;
        const double ft = (copula_cdf(u, v, sp) - copula_cdf(u, v, sm)) / (2 * h);
        CAPTURE(s.label());
        CAPTURE(s.theta);
        CHECK(p.du == doctest::Approx(fu).epsilon(1e-6));
        CHECK(p.dv == doctest::Approx(fv).epsilon(1e-6));
        CHECK(std::abs(p.dtheta - ft) < 1e-6 * std::max(1.0, std::abs(ft)));
      }
    }
  }
}

TEST_CASE("partials reject the boundary") {
  CHECK_THROWS_AS(copula_partials(0.0, 0.5, make(Family::Clayton, 1.0)), BoundaryError);
  CHECK_THROWS_AS(copula_partials(0.5, 1.0, make(Family::Gaussian, 0.2)), BoundaryError);
}

TEST_CASE("invalid parameters") {
  CHECK_THROWS_AS(make(Family::Gaussian, 1.0).validate(), DomainError);
  CHECK_THROWS_AS(make(Family::Clayton, 0.0).validate(), DomainError);
  CHECK_THROWS_AS(make(Family::Joe, 1.0).validate(), DomainError);
  CHECK_THROWS_AS(make(Family::StudentT, 0.2, Rotation::R0, 2.0).validate(), DomainError);
  CHECK_NOTHROW(make(Family::Frank, 0.0).validate());
  CHECK_THROWS_AS(parse_family("gumbel"), DomainError);
}

TEST_CASE("theta maps") {
  for (Family f : {Family::Gaussian, Family::StudentT, Family::Clayton, Family::Joe, Family::Frank}) {
    const ThetaMap m = theta_reparam(f);
    for (double ts : {-3.0, -0.5, 0.0, 1.2, 4.0}) {
      CHECK(m.to_unconstrained(m.from_unconstrained(ts)) == doctest::Approx(ts).epsilon(1e-10));
      const double h = 1e-6;
      CHECK(m.derivative(ts) ==
            doctest::Approx((m.from_unconstrained(ts + h) - m.from_unconstrained(ts - h)) / (2 * h)).epsilon(1e-6));
    }
  }
  CHECK(theta_reparam(Family::Gaussian).from_unconstrained(theta_reparam(Family::Gaussian).independence()) == 0.0);
  CHECK(theta_reparam(Family::Frank).independence() == 0.0);
}

TEST_CASE("joint configuration probabilities") {
  for (const auto& s : family_grid()) {
    for (double p1 : kGrid) {
      for (double p2 : kGrid) {
        const auto k = joint_config_probs(p1, p2, s);
        CHECK(std::abs(k.k11 + k.k10 + k.k01 + k.k00 - 1.0) < 1e-12);
        CHECK(k.k11 >= 0.0);
        CHECK(k.k10 >= 0.0);
        CHECK(k.k01 >= 0.0);
        CHECK(k.k00 >= 0.0);
        CHECK(k.k11 + k.k10 == doctest::Approx(p1).epsilon(1e-12));
      }
    }
  }
  // independence factorizes
  const auto k = joint_config_probs(0.3, 0.6, make(Family::Gaussian, 0.0));
  CHECK(k.k11 == doctest::Approx(0.18).epsilon(1e-14));
  CHECK(k.k00 == doctest::Approx(0.28).epsilon(1e-14));
}
