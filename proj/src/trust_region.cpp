#include "copjoint/trust_region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace copjoint {

Eigen::VectorXd trust_region_step(const Eigen::VectorXd& g, const Eigen::MatrixXd& b, double radius) {
  const auto n = g.size();
  if (n == 0) return Eigen::VectorXd();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (b + b.transpose()));
  const Eigen::VectorXd lam = es.eigenvalues();  // ascending
  const Eigen::MatrixXd& q = es.eigenvectors();
  const Eigen::VectorXd a = q.transpose() * g;
  const double lmin = lam(0);
  const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());

  auto step_norm = [&](double mu) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += a(i) * a(i) / ((lam(i) + mu) * (lam(i) + mu));
    return std::sqrt(s);
  };
  auto step = [&](double mu) {
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) c(i) = -a(i) / (lam(i) + mu);
    return Eigen::VectorXd(q * c);
  };

  if (lmin > 1e-12 * scale && step_norm(0.0) <= radius) return step(0.0);

  const double mu_lo = std::max(0.0, -lmin);
  const double eps = 1e-10 * scale;
  // Hard case: gradient (nearly) orthogonal to the leftmost eigenspace.
  double deg_norm = 0.0;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lam(i) - lmin > eps) {
      c(i) = -a(i) / (lam(i) + mu_lo);
      deg_norm += c(i) * c(i);
    } else if (std::abs(a(i)) > 1e-12 * std::max(1.0, g.norm())) {
      deg_norm = std::numeric_limits<double>::infinity();
    }
  }
  if (std::isfinite(deg_norm) && std::sqrt(deg_norm) < radius) {
    const double tau = std::sqrt(radius * radius - deg_norm);
    c(0) += tau;
    return q * c;
  }

  double lo = mu_lo;
  double hi = mu_lo + g.norm() / radius + scale;
  while (step_norm(hi) > radius) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (step_norm(mid) > radius) {
      lo = mid;
    } else {
      hi = mid;
    }
    if ((hi - lo) <= 1e-14 * std::max(1.0, hi)) break;
  }
  return step(hi);
}

Eigen::MatrixXd fd_hessian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                           const Eigen::VectorXd& x, double rel_step) {
  const auto n = x.size();
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = rel_step * std::max(1.0, std::abs(x(j)));
    xp(j) = x(j) + step;
    const Eigen::VectorXd gp = grad(xp);
    xp(j) = x(j) - step;
    const Eigen::VectorXd gm = grad(xp);
    xp(j) = x(j);
    h.col(j) = (gp - gm) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const TrustRegionOptions& opt) {
  Eigen::VectorXd y = x;
  if (opt.lower.size() == x.size()) y = y.cwiseMax(opt.lower);
  if (opt.upper.size() == x.size()) y = y.cwiseMin(opt.upper);
  return y;
}

// Indices free to move: not pinned at a bound by a gradient pushing outward.
std::vector<int> free_set(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const TrustRegionOptions& opt) {
  std::vector<int> idx;
  const bool has_lo = opt.lower.size() == x.size();
  const bool has_hi = opt.upper.size() == x.size();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (has_lo && x(i) <= opt.lower(i) && g(i) > 0) continue;
    if (has_hi && x(i) >= opt.upper(i) && g(i) < 0) continue;
    idx.push_back(static_cast<int>(i));
  }
  return idx;
}

}  // namespace

TrustRegionResult TrustRegionNewton::minimize(Eigen::VectorXd x0, const TrustRegionOptions& opt) const {
  TrustRegionResult res;
  Eigen::VectorXd x = project(x0, opt);
  double fx = f_(x);
  Eigen::VectorXd gx = g_(x);
  Eigen::MatrixXd hx = h_(x, gx);
  double radius = opt.initial_radius;
  double last_rel_change = std::numeric_limits<double>::infinity();

  int iter = 0;
  for (; iter < opt.max_iter; ++iter) {
    const auto fs = free_set(x, gx, opt);
    const auto nf = static_cast<Eigen::Index>(fs.size());
    Eigen::VectorXd gf(nf);
    Eigen::MatrixXd hf(nf, nf);
    for (Eigen::Index i = 0; i < nf; ++i) {
      gf(i) = gx(fs[i]);
      for (Eigen::Index j = 0; j < nf; ++j) hf(i, j) = hx(fs[i], fs[j]);
    }
    const double pg = nf > 0 ? gf.cwiseAbs().maxCoeff() : 0.0;
    res.projected_grad_norm = pg;

    if (pg < opt.grad_tol) {
      bool small_change = last_rel_change < opt.rel_tol;
      if (!small_change) {
        // Newton decrement as the predicted remaining change.
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hf);
        double dec = std::numeric_limits<double>::infinity();
        if (nf == 0) {
          dec = 0.0;
        } else if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
          dec = 0.5 * gf.dot(ldlt.solve(gf));
        }
        small_change = dec < opt.rel_tol * std::max(1.0, std::abs(fx));
      }
      if (small_change) {
        res.converged = true;
        break;
      }
    }
    if (nf == 0) {
      res.converged = true;
      break;
    }
    if (radius < 1e-13 * std::max(1.0, x.norm())) {
      res.converged = pg < opt.grad_tol;
      break;
    }

    const Eigen::VectorXd sf = trust_region_step(gf, hf, radius);
    Eigen::VectorXd cand = x;
    for (Eigen::Index i = 0; i < nf; ++i) cand(fs[i]) += sf(i);
    cand = project(cand, opt);
    const Eigen::VectorXd d = cand - x;
    const double pred = -(gx.dot(d) + 0.5 * d.dot(hx * d));
    const double dnorm = d.norm();
    if (!(pred > 0.0) || dnorm == 0.0) {
      radius = 0.25 * std::max(dnorm, 1e-3 * radius);
      continue;
    }
    const double fc = f_(cand);
    const double actual = fx - fc;
    double ratio = std::isfinite(fc) ? actual / pred : -1.0;
    // below objective roundoff the ratio is noise; judge by the gradient
    const double noise = 1e-13 * std::max(1.0, std::abs(fx));
    Eigen::VectorXd gc;
    if (std::isfinite(fc) && pred < noise && std::abs(actual) < 10.0 * noise) {
      gc = g_(cand);
      double pgc = 0.0;
      for (int i : free_set(cand, gc, opt)) pgc = std::max(pgc, std::abs(gc(i)));
      ratio = pgc < pg ? 1.0 : -1.0;
    }

    if (ratio < 0.25) {
      radius = 0.25 * dnorm;
    } else if (ratio > 0.75 && dnorm >= 0.99 * radius) {
      radius = std::min(2.0 * radius, opt.max_radius);
    }
    if (ratio > opt.accept_ratio && (fc <= fx || gc.size() > 0)) {
      last_rel_change = std::abs(actual) / std::max(1.0, std::abs(fx));
      x = cand;
      fx = fc;
      gx = gc.size() > 0 ? gc : g_(x);
      hx = h_(x, gx);
      res.accepted_values.push_back(fx);
    }
  }
  res.iterations = iter;
  res.x = x;
  res.value = fx;
  res.gradient = gx;
  res.hessian = hx;
  res.projected_grad_norm = 0.0;
  for (int i : free_set(x, gx, opt)) res.projected_grad_norm = std::max(res.projected_grad_norm, std::abs(gx(i)));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((opt.lower.size() == x.size() && x(i) <= opt.lower(i)) ||
        (opt.upper.size() == x.size() && x(i) >= opt.upper(i)))
      res.at_bound.push_back(static_cast<int>(i));
  }
  return res;
}

}  // namespace copjoint
