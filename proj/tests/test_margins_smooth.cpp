#include <doctest.h>

#include <cmath>
#include <random>

#include "copjoint/errors.hpp"
#include "copjoint/margins.hpp"
#include "copjoint/smooth.hpp"
#include "oracles.hpp"

using namespace copjoint;

TEST_CASE("inverse links") {
  for (Link l : {Link::Probit, Link::Logit, Link::Cloglog}) {
    for (double eta : {-6.0, -1.3, 0.0, 0.4, 2.2, 5.0}) {
      CHECK(link_cdf(l, eta) == doctest::Approx(oracle::inv_link(l, eta)).epsilon(1e-13));
      CHECK(marginal_prob(l, eta) == doctest::Approx(oracle::inv_link(l, eta)).epsilon(1e-13));
      const double h = 1e-6;
      CHECK(link_density(l, eta) ==
            doctest::Approx((link_cdf(l, eta + h) - link_cdf(l, eta - h)) / (2 * h)).epsilon(1e-7));
    }
  }
  CHECK(link_cdf(Link::Cloglog, 0.0) == doctest::Approx(1.0 - std::exp(-1.0)));
  // latent error CDF: cloglog errors are Gumbel-max
  CHECK(latent_error_cdf(Link::Cloglog, 0.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(latent_error_cdf(Link::Logit, 0.7) == doctest::Approx(link_cdf(Link::Logit, 0.7)));
}

TEST_CASE("link parsing and design rows") {
  CHECK(parse_link("p") == Link::Probit);
  CHECK(parse_link("logit") == Link::Logit);
  CHECK(link_code(Link::Cloglog) == 'c');
  CHECK_THROWS_AS(parse_link("identity"), DomainError);
  Eigen::VectorXd b(2), row(2);
  b << 0.5, -1.0;
  row << 1.0, 0.25;
  CHECK(marginal_prob(Link::Probit, b, row) == doctest::Approx(oracle::Phi(0.25)));
  Eigen::VectorXd bad(3);
  CHECK_THROWS_AS(marginal_prob(Link::Probit, bad, row), DomainError);
}

namespace {

Eigen::VectorXd uniform_x(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = u(rng);
  return x;
}

}  // namespace

TEST_CASE("spline basis structure") {
  const Eigen::VectorXd x = uniform_x(300, 4);
  const SmoothTerm t = build_basis(x, 10, "x");
  CHECK(t.n_coef() == 9);
  CHECK(t.basis_matrix.rows() == 300);
  CHECK(t.basis_matrix.cols() == 9);
  // centered over the training points
  CHECK(t.basis_matrix.colwise().sum().cwiseAbs().maxCoeff() < 1e-9);
  // raw B-splines form a partition of unity
  for (double v : {-1.9, 0.0, 1.7, 2.99}) CHECK(raw_basis_row(t, v).sum() == doctest::Approx(1.0).epsilon(1e-12));
  // penalty: symmetric PSD with a one-dimensional null space after centering (the linear trend)
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t.penalty);
  CHECK((t.penalty - t.penalty.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(es.eigenvalues().minCoeff() > -1e-8 * es.eigenvalues().maxCoeff());
  int null_dim = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) null_dim += es.eigenvalues()(i) < 1e-8 * es.eigenvalues().maxCoeff();
  CHECK(null_dim == 1);
}

TEST_CASE("spline smoothing extremes") {
  const Eigen::VectorXd x = uniform_x(400, 5);
  const SmoothTerm t = build_basis(x, 10, "x");
  Eigen::VectorXd lin = 2.0 * x.array() + 1.0;
  // a linear function fits exactly even under heavy penalty
  const auto heavy = penalized_least_squares(t, lin, 1e8);
  const Eigen::VectorXd fit = (t.basis_matrix * heavy.coefficients).array() + heavy.intercept;
  CHECK((fit - lin).cwiseAbs().maxCoeff() < 1e-4);
  CHECK(heavy.edf == doctest::Approx(1.0).epsilon(1e-3));
  Eigen::VectorXd wig = (2.0 * x.array()).sin();
  const auto light = penalized_least_squares(t, wig, 1e-8);
  CHECK(light.edf > 8.5);
  CHECK(light.edf <= 9.0 + 1e-9);
}

TEST_CASE("spline evaluation and extrapolation") {
  const Eigen::VectorXd x = uniform_x(200, 6);
  const SmoothTerm t = build_basis(x, 8, "age");
  int n_ex = 0;
  Eigen::VectorXd xn(3);
  xn << t.lower() - 1.0, 0.5 * (t.lower() + t.upper()), t.upper() + 2.0;
  const Eigen::MatrixXd b = smooth_design(t, xn, &n_ex);
  CHECK(n_ex == 2);
  CHECK(b.rows() == 3);
  // training points reproduce the stored basis
  const Eigen::MatrixXd b0 = smooth_design(t, x);
  CHECK((b0 - t.basis_matrix).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("spline input errors") {
  CHECK_THROWS_AS(build_basis(Eigen::VectorXd::Constant(20, 1.0), 10), DataError);
  Eigen::VectorXd few(6);
  few << 1, 2, 3, 1, 2, 3;
  const SmoothTerm t = build_basis(few, 10);
  CHECK(t.basis_dim <= 3);
  CHECK(!t.warnings.empty());
  Eigen::VectorXd bad = uniform_x(10, 1);
  bad(3) = std::nan("");
  CHECK_THROWS_AS(build_basis(bad, 5), DataError);
}
