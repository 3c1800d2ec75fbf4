#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "copjoint/comparators.hpp"
#include "copjoint/errors.hpp"
#include "copjoint/joint_model.hpp"
#include "oracles.hpp"

using namespace copjoint;

namespace {

std::shared_ptr<const JointDesign> small_design(int n, Link l1, Link l2, std::uint64_t seed) {
  const auto s = oracle::recursive_probit(n, 0.4, 0.7, seed);
  return std::make_shared<const JointDesign>(make_design(s.x1, s.x2, s.y1, s.y2, l1, l2, 1));
}

double naive_loglik(const JointDesign& d, const CopulaSpec& cop, const Eigen::VectorXd& b) {
  double ll = 0.0;
  const Eigen::VectorXd b1 = b.head(d.p1());
  const Eigen::VectorXd b2 = b.segment(d.p1(), d.p2());
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const double p1 = oracle::inv_link(d.treatment.link, d.treatment.x.row(i).dot(b1));
    const double p2 = oracle::inv_link(d.outcome.link, d.outcome.x.row(i).dot(b2));
    const double c = oracle::copula(cop, p1, p2);
    const bool a = d.y1(i) == 1.0, e = d.y2(i) == 1.0;
    const double k = a && e ? c : a ? p1 - c : e ? p2 - c : 1.0 - p1 - p2 + c;
    ll += std::log(k);
  }
  return ll;
}

}  // namespace

TEST_CASE("log-likelihood equals a naive per-row oracle") {
  const auto d = small_design(20, Link::Probit, Link::Logit, 11);
  Eigen::VectorXd b(7);
  b << 0.1, 0.5, -0.3, -0.2, 0.6, 0.4, 0.0;
  struct Case {
    Family f;
    Rotation r;
    double theta_star;
  };
  for (const Case c : {Case{Family::Gaussian, Rotation::R0, 0.6}, Case{Family::StudentT, Rotation::R0, -0.4},
                       Case{Family::Clayton, Rotation::R0, 0.3}, Case{Family::Clayton, Rotation::R180, 1.1},
                       Case{Family::Joe, Rotation::R0, 0.2}, Case{Family::Joe, Rotation::R180, -0.5},
                       Case{Family::Frank, Rotation::R0, 3.0}}) {
    CopulaSpec cop;
    cop.family = c.f;
    cop.rotation = c.r;
    cop.theta = theta_reparam(c.f).from_unconstrained(c.theta_star);
    JointLikelihood lik(d, cop);
    b(6) = c.theta_star;
    CAPTURE(cop.label());
    const double tol = c.f == Family::StudentT ? 1e-10 : 1e-12;
    CHECK(std::abs(lik.loglik(b) - naive_loglik(*d, cop, b)) < tol);
    CHECK(std::abs(lik.loglik_terms(b).sum() - lik.loglik(b)) < 1e-12);
  }
}

TEST_CASE("gradient against central differences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (Family f : {Family::Gaussian, Family::Clayton, Family::Joe, Family::Frank}) {
    for (Link l2 : {Link::Probit, Link::Cloglog}) {
      const auto d = small_design(60, Link::Logit, l2, 5);
      CopulaSpec cop;
      cop.family = f;
      JointLikelihood lik(d, cop);
      for (int rep = 0; rep < 5; ++rep) {
        Eigen::VectorXd b(7);
        for (int j = 0; j < 7; ++j) b(j) = u(rng);
        const Eigen::VectorXd g = lik.gradient(b);
        for (int j = 0; j < 7; ++j) {
          Eigen::VectorXd bp = b, bm = b;
          bp(j) += 1e-6;
          bm(j) -= 1e-6;
          const double fd = (lik.loglik(bp) - lik.loglik(bm)) / 2e-6;
          CHECK(std::abs(g(j) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
        }
      }
    }
  }
}

TEST_CASE("fixed theta drops the copula parameter") {
  const auto d = small_design(50, Link::Probit, Link::Probit, 2);
  JointLikelihood lik(d, CopulaSpec{}, 0.0);
  CHECK(!lik.theta_free());
  CHECK(lik.n_params() == 6);
  CHECK(lik.gradient(Eigen::VectorXd::Zero(6)).size() == 6);
}

TEST_CASE("independence fit reproduces univariate GLMs") {
  const auto s = oracle::recursive_probit(500, 0.0, 0.5, 21);
  for (Link l : {Link::Probit, Link::Logit}) {
    auto d = std::make_shared<const JointDesign>(make_design(s.x1, s.x2, s.y1, s.y2, l, l, 1));
    FitOptions fo;
    fo.fixed_theta_star = 0.0;
    fo.grad_tol = 1e-9;
    const FittedJointModel m = fit_design(d, CopulaSpec{}, fo);
    CHECK(m.converged);
    const GlmFit g1 = fit_glm_binary(s.y1, s.x1, l);
    const GlmFit g2 = fit_glm_binary(s.y2, s.x2, l);
    CHECK((m.coefficients.head(3) - g1.coefficients).cwiseAbs().maxCoeff() < 1e-4);
    CHECK((m.coefficients.segment(3, 3) - g2.coefficients).cwiseAbs().maxCoeff() < 1e-4);
    CHECK(m.loglik == doctest::Approx(g1.loglik + g2.loglik).epsilon(1e-8));
  }
}

TEST_CASE("fit recovers the data-generating parameters") {
  const auto s = oracle::recursive_probit(3000, 0.5, 0.7, 8);
  auto d = std::make_shared<const JointDesign>(make_design(s.x1, s.x2, s.y1, s.y2, Link::Probit, Link::Probit, 1));
  const FittedJointModel m = fit_design(d, CopulaSpec{});
  CHECK(m.converged);
  const Eigen::VectorXd se = m.standard_errors();
  CHECK(std::abs(m.gamma() - 0.7) < 4.0 * se(4));
  CHECK(std::abs(m.copula.theta - 0.5) < 0.15);
  CHECK(m.edf_total == doctest::Approx(7.0).epsilon(1e-4));
  CHECK(m.aic == doctest::Approx(-2.0 * m.loglik + 2.0 * m.edf_total));
  const auto ic = information_criteria(m);
  CHECK(ic.bic == doctest::Approx(-2.0 * m.loglik + std::log(3000.0) * m.edf_total));
  // objective never decreases across accepted steps
  for (std::size_t i = 1; i < m.objective_trace.size(); ++i) CHECK(m.objective_trace[i] >= m.objective_trace[i - 1] - 1e-9);
}

TEST_CASE("assembled design with factors and smooths") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  const int n = 600;
  Eigen::VectorXd y1(n), y2(n), age(n), grp(n), w(n);
  for (int i = 0; i < n; ++i) {
    age(i) = 30.0 + 40.0 * (i % 97) / 96.0;
    grp(i) = i % 3;
    w(i) = z(rng);
    const double e1 = z(rng), e2 = 0.3 * e1 + std::sqrt(0.91) * z(rng);
    y1(i) = 0.5 * w(i) + std::sin((age(i) - 50.0) / 10.0) + (grp(i) == 2 ? 0.5 : 0.0) + e1 > 0;
    y2(i) = -0.3 + 0.6 * y1(i) + 0.4 * w(i) + e2 > 0;
  }
  Dataset data;
  data.add_column("t", y1);
  data.add_column("y", y2);
  data.add_column("age", age);
  data.add_column("grp", grp);
  data.add_column("w", w);
  ModelSpec spec;
  spec.treatment = {"t", Link::Probit, {"w"}, {"grp"}, {"age"}, false};
  spec.outcome = {"y", Link::Probit, {"w"}, {}, {}, true};
  spec.basis_dim = 8;
  const JointDesign d = assemble_design(data, spec);
  CHECK(d.p1() == 1 + 1 + 2 + 7);
  CHECK(d.p2() == 3);
  CHECK(d.outcome.column_names[static_cast<std::size_t>(d.outcome.treatment_col)] == "t");
  CHECK(d.treatment.column_names[2] == "grp[1]");
  const FittedJointModel m = fit(spec, data);
  CHECK(m.converged);
  CHECK(m.lambda.size() == 1);
  CHECK(m.edf_per_smooth.size() == 1);
  CHECK(m.edf_per_smooth[0].second > 1.5);
  CHECK(m.edf_per_smooth[0].second < 7.0);
  ModelSpec bad = spec;
  bad.outcome.parametric_terms.push_back("nope");
  CHECK_THROWS_AS(assemble_design(data, bad), DataError);
}

TEST_CASE("separation guard") {
  const int n = 200;
  Eigen::MatrixXd x1(n, 2), x2(n, 2);
  Eigen::VectorXd y1(n), y2(n);
  for (int i = 0; i < n; ++i) {
    const double v = (i - 100) / 50.0;
    x1.row(i) << 1.0, v;
    y1(i) = v > 0 ? 1.0 : 0.0;  // perfectly separated
    y2(i) = (i % 3 == 0) ? 1.0 : 0.0;
    x2.row(i) << 1.0, y1(i);
  }
  auto d = std::make_shared<const JointDesign>(make_design(x1, x2, y1, y2, Link::Probit, Link::Probit, 1));
  const FittedJointModel m = fit_design(d, CopulaSpec{});
  CHECK(m.coefficients.cwiseAbs().maxCoeff() <= 15.0 + 1e-12);
  bool warned = false;
  for (const auto& w : m.warnings) warned |= w.find("separation") != std::string::npos;
  CHECK(warned);
}
