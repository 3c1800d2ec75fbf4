#include <doctest.h>

#include <cmath>
#include <memory>

#include "copjoint/effects.hpp"
#include "copjoint/errors.hpp"
#include "oracles.hpp"

using namespace copjoint;

namespace {

FittedJointModel fitted(double rho, double gamma, int n, std::uint64_t seed, FitOptions fo = {}) {
  const auto s = oracle::recursive_probit(n, rho, gamma, seed);
  auto d = std::make_shared<const JointDesign>(make_design(s.x1, s.x2, s.y1, s.y2, Link::Probit, Link::Probit, 1));
  return fit_design(d, CopulaSpec{}, fo);
}

}  // namespace

TEST_CASE("SATE variants agree at independence") {
  const FittedJointModel m = fitted(0.3, 0.6, 400, 1);
  Eigen::VectorXd b = m.coefficients;
  b(b.size() - 1) = 0.0;  // tanh(0) = 0
  const double a = sate_at(*m.design, CopulaSpec{}, true, b, SateVariant::MarginalToggle);
  const double c = sate_at(*m.design, CopulaSpec{}, true, b, SateVariant::ConditionalOnTreatment);
  CHECK(std::abs(a - c) < 1e-10);
  for (Family f : {Family::Frank}) {
    CopulaSpec cop;
    cop.family = f;
    CHECK(std::abs(sate_at(*m.design, cop, true, b, SateVariant::MarginalToggle) -
                   sate_at(*m.design, cop, true, b, SateVariant::ConditionalOnTreatment)) < 1e-10);
  }
}

TEST_CASE("SATE is zero without a treatment coefficient") {
  const FittedJointModel m = fitted(0.3, 0.6, 300, 2);
  Eigen::VectorXd b = m.coefficients;
  b(m.p1() + 1) = 0.0;
  CHECK(sate_at(*m.design, m.copula, true, b, SateVariant::MarginalToggle) == 0.0);
}

TEST_CASE("SATE matches a direct average") {
  const FittedJointModel m = fitted(0.5, 0.8, 300, 3);
  const auto& d = *m.design;
  double ref = 0.0;
  const Eigen::VectorXd b2 = m.coefficients.segment(m.p1(), m.p2());
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    Eigen::VectorXd r1 = d.outcome.x.row(i), r0 = r1;
    r1(1) = 1.0;
    r0(1) = 0.0;
    ref += oracle::Phi(r1.dot(b2)) - oracle::Phi(r0.dot(b2));
  }
  CHECK(sate(m) == doctest::Approx(ref / static_cast<double>(d.n())).epsilon(1e-12));
}

TEST_CASE("SATE interval properties") {
  const FittedJointModel m = fitted(0.5, 0.8, 400, 4);
  const SateEstimate a = sate_ci(m, SateVariant::MarginalToggle, 500, 0.95, 9, 1);
  const SateEstimate b = sate_ci(m, SateVariant::MarginalToggle, 500, 0.95, 9, 3);
  CHECK(a.value == b.value);
  CHECK(a.ci_low == b.ci_low);
  CHECK(a.ci_high == b.ci_high);
  CHECK(a.ci_low <= a.value);
  CHECK(a.value <= a.ci_high);
  const SateEstimate w = sate_ci(m, SateVariant::MarginalToggle, 500, 0.99, 9, 1);
  CHECK(w.ci_low < a.ci_low);
  CHECK(w.ci_high > a.ci_high);
  const SateEstimate other = sate_ci(m, SateVariant::MarginalToggle, 500, 0.95, 10, 1);
  CHECK(other.ci_low != a.ci_low);
}

TEST_CASE("Kendall tau interval") {
  const FittedJointModel m = fitted(0.5, 0.8, 600, 5);
  const DependenceSummary s = kendall_tau_ci(m, 800, 0.95, 3);
  CHECK(s.tau == doctest::Approx(2.0 / std::numbers::pi * std::asin(m.copula.theta)));
  CHECK(s.ci_low < s.tau);
  CHECK(s.tau < s.ci_high);
  const DependenceSummary o = kendall_tau_ci(m, 800, 0.95, 3, TauCiMethod::ObservedInformation);
  CHECK(o.ci_low < o.tau);
  CHECK(o.ci_high > o.tau);
  FitOptions fo;
  fo.fixed_theta_star = 0.3;
  const FittedJointModel fixed = fitted(0.5, 0.8, 300, 6, fo);
  const DependenceSummary z = kendall_tau_ci(fixed, 100);
  CHECK(z.ci_low == z.tau);
  CHECK(z.ci_high == z.tau);
}

TEST_CASE("type-1 quantile") {
  std::vector<double> v{5, 1, 4, 2, 3};
  CHECK(empirical_quantile(v, 0.2) == 1.0);
  CHECK(empirical_quantile(v, 0.21) == 2.0);
  CHECK(empirical_quantile(v, 1.0) == 5.0);
  CHECK(empirical_quantile(v, 0.0) == 1.0);
  // commutes with monotone transforms
  std::vector<double> e;
  for (double x : v) e.push_back(std::exp(x));
  CHECK(empirical_quantile(e, 0.6) == std::exp(empirical_quantile(v, 0.6)));
}

TEST_CASE("model grid ranking, duplicates and worker invariance") {
  const auto s = oracle::recursive_probit(300, 0.5, 0.8, 7);
  ModelSpec spec;
  spec.treatment = {"y1", Link::Probit, {"a", "b"}, {}, {}, false};
  spec.outcome = {"y2", Link::Probit, {"c"}, {}, {}, true};
  std::vector<GridRequest> req{{Family::Gaussian, Rotation::R0, Link::Probit, Link::Probit},
                               {Family::Clayton, Rotation::R0, Link::Probit, Link::Probit},
                               {Family::Frank, Rotation::R0, Link::Probit, Link::Logit},
                               {Family::Gaussian, Rotation::R0, Link::Probit, Link::Probit}};
  GridOptions go;
  go.n_draws = 100;
  std::vector<std::string> warn;
  const auto a = model_grid(s.data, req, spec, go, &warn);
  CHECK(a.size() == 3);
  CHECK(!warn.empty());
  for (std::size_t i = 1; i < a.size(); ++i) {
    if (a[i].converged && a[i - 1].converged) CHECK(a[i - 1].aic <= a[i].aic);
  }
  go.jobs = 3;
  const auto b = model_grid(s.data, req, spec, go);
  REQUIRE(b.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].request == b[i].request);
    CHECK(a[i].aic == b[i].aic);
    CHECK(a[i].sate.ci_low == b[i].sate.ci_low);
    CHECK(a[i].tau.ci_high == b[i].tau.ci_high);
  }
}

TEST_CASE("model grid keeps failures") {
  const auto s = oracle::recursive_probit(200, 0.5, 0.8, 8);
  ModelSpec spec;
  spec.treatment = {"y1", Link::Probit, {"a"}, {}, {}, false};
  spec.outcome = {"y2", Link::Probit, {"c"}, {}, {}, true};
  Dataset d = s.data;
  d.add_column("const", Eigen::VectorXd::Constant(200, 2.0));
  ModelSpec with_smooth = spec;
  with_smooth.outcome.smooth_terms = {"const"};
  GridOptions go;
  go.n_draws = 50;
  // a constant smooth covariate is a schema problem and propagates
  CHECK_THROWS_AS(model_grid(d, {GridRequest{}}, with_smooth, go), DataError);
}
