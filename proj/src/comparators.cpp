#include "copjoint/comparators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "copjoint/errors.hpp"

namespace copjoint {

namespace {

constexpr double kProbFloor = 1e-15;

// Greedy left-to-right selection of linearly independent columns.
std::vector<int> independent_columns(const Eigen::MatrixXd& x) {
  std::vector<int> keep;
  const double tol = 1e-9;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Eigen::MatrixXd trial(x.rows(), static_cast<Eigen::Index>(keep.size()) + 1);
    for (std::size_t k = 0; k < keep.size(); ++k) trial.col(static_cast<Eigen::Index>(k)) = x.col(keep[k]);
    trial.col(trial.cols() - 1) = x.col(j);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(trial);
    qr.setThreshold(tol);
    if (qr.rank() == trial.cols()) keep.push_back(static_cast<int>(j));
  }
  return keep;
}

double bernoulli_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double m = std::clamp(mu(i), kProbFloor, 1.0 - kProbFloor);
    ll += y(i) > 0.5 ? std::log(m) : std::log1p(-m);
  }
  return ll;
}

}  // namespace

Eigen::VectorXd GlmFit::fitted(const Eigen::MatrixXd& x) const {
  const Eigen::VectorXd eta = x * coefficients;
  Eigen::VectorXd mu(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) mu(i) = marginal_prob(link, eta(i));
  return mu;
}

GlmFit fit_glm_binary(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, Link link, const GlmOptions& opt) {
  if (y.size() != x.rows()) throw DataError("fit_glm_binary: response and design row counts differ");
  double ones = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) throw DataError("fit_glm_binary: response must be coded 0/1");
    ones += y(i);
  }
  if (ones == 0.0 || ones == static_cast<double>(y.size()))
    throw DataError("fit_glm_binary: both response classes must be present");

  GlmFit fit;
  fit.link = link;
  const auto p = x.cols();
  const bool penalized = opt.penalty.rows() == p && p > 0;
  const std::vector<int> keep = penalized ? [&] {
    std::vector<int> all(static_cast<std::size_t>(p));
    std::iota(all.begin(), all.end(), 0);
    return all;
  }()
                                          : independent_columns(x);
  for (Eigen::Index j = 0, k = 0; j < p; ++j) {
    if (k < static_cast<Eigen::Index>(keep.size()) && keep[static_cast<std::size_t>(k)] == j) {
      ++k;
    } else {
      fit.dropped_columns.push_back(static_cast<int>(j));
      fit.warnings.push_back("column " + std::to_string(j) + " is aliased and was dropped");
    }
  }
  const auto q = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd xk(x.rows(), q);
  Eigen::MatrixXd pk = Eigen::MatrixXd::Zero(q, q);
  for (Eigen::Index k = 0; k < q; ++k) {
    xk.col(k) = x.col(keep[static_cast<std::size_t>(k)]);
    if (penalized) {
      for (Eigen::Index l = 0; l < q; ++l) pk(k, l) = opt.penalty(keep[static_cast<std::size_t>(k)], keep[static_cast<std::size_t>(l)]);
    }
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
  if (opt.start.size() == p) {
    for (Eigen::Index k = 0; k < q; ++k) beta(k) = opt.start(keep[static_cast<std::size_t>(k)]);
  } else {
    // Intercept-like start: the marginal rate on the link scale, placed on a constant column.
    for (Eigen::Index k = 0; k < q; ++k) {
      const auto col = xk.col(k);
      if ((col.array() == col(0)).all() && col(0) != 0.0) {
        const double rate = std::clamp(ones / static_cast<double>(y.size()), 0.01, 0.99);
        double lo = -20, hi = 20;
        for (int it = 0; it < 100; ++it) {
          const double mid = 0.5 * (lo + hi);
          (marginal_prob(link, mid) < rate ? lo : hi) = mid;
        }
        beta(k) = 0.5 * (lo + hi) / col(0);
        break;
      }
    }
  }

  auto objective = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = xk * b;
    Eigen::VectorXd mu(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) mu(i) = marginal_prob(link, eta(i));
    return -2.0 * bernoulli_loglik(y, mu) + b.dot(pk * b);
  };

  auto score_and_info = [&](const Eigen::VectorXd& b, Eigen::VectorXd& score, Eigen::MatrixXd& info) {
    const Eigen::VectorXd eta = xk * b;
    Eigen::VectorXd w(eta.size());
    Eigen::VectorXd r(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double mu = std::clamp(marginal_prob(link, eta(i)), kProbFloor, 1.0 - kProbFloor);
      const double d = link_density(link, eta(i));
      const double v = mu * (1.0 - mu);
      w(i) = d * d / v;
      r(i) = (y(i) - mu) * d / v;
    }
    score = xk.transpose() * r - pk * b;
    info = xk.transpose() * w.asDiagonal() * xk + pk;
  };

  double dev = objective(beta);
  fit.deviance_trace.push_back(dev);
  Eigen::VectorXd score;
  Eigen::MatrixXd info;
  bool capped = false;
  for (int it = 0; it < opt.max_iter; ++it) {
    score_and_info(beta, score, info);
    Eigen::VectorXd delta = info.ldlt().solve(score);
    if (!delta.allFinite()) delta = info.completeOrthogonalDecomposition().solve(score);
    double step = 1.0;
    Eigen::VectorXd cand;
    double cand_dev = dev;
    bool improved = false;
    for (int half = 0; half < 40; ++half) {
      cand = (beta + step * delta).cwiseMax(-opt.coef_cap).cwiseMin(opt.coef_cap);
      cand_dev = objective(cand);
      if (std::isfinite(cand_dev) && cand_dev <= dev + 1e-12 * std::abs(dev)) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    fit.iterations = it + 1;
    if (!improved) {
      fit.converged = score.cwiseAbs().maxCoeff() < 1e-6;
      break;
    }
    const double change = std::abs(dev - cand_dev) / (std::abs(cand_dev) + 0.1);
    beta = cand;
    dev = cand_dev;
    fit.deviance_trace.push_back(dev);
    if ((beta.array().abs() >= opt.coef_cap).any()) capped = true;
    if (change < opt.tol && (step * delta).cwiseAbs().maxCoeff() < 1e-8) {
      fit.converged = true;
      break;
    }
  }
  score_and_info(beta, score, info);
  Eigen::VectorXd free_score = score;
  for (Eigen::Index k = 0; k < q; ++k) {
    if (std::abs(beta(k)) >= opt.coef_cap) free_score(k) = 0.0;
  }
  fit.score_norm = q > 0 ? free_score.cwiseAbs().maxCoeff() : 0.0;
  if (capped || (beta.array().abs() >= opt.coef_cap).any())
    fit.warnings.push_back("possible separation: coefficients capped at +/-" + std::to_string(opt.coef_cap));

  fit.coefficients = Eigen::VectorXd::Zero(p);
  fit.covariance = Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
  const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(q, q));
  for (Eigen::Index k = 0; k < q; ++k) {
    fit.coefficients(keep[static_cast<std::size_t>(k)]) = beta(k);
    for (Eigen::Index l = 0; l < q; ++l)
      fit.covariance(keep[static_cast<std::size_t>(k)], keep[static_cast<std::size_t>(l)]) = cov(k, l);
  }
  {
    const Eigen::VectorXd eta = xk * beta;
    Eigen::VectorXd mu(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) mu(i) = marginal_prob(link, eta(i));
    fit.loglik = bernoulli_loglik(y, mu);
  }
  return fit;
}

namespace {

struct CoxTerms {
  double loglik = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd info;
};

// Breslow partial likelihood, score and information. `order` sorts by
// decreasing time so risk sets accumulate in a single pass.
CoxTerms cox_terms(const Eigen::VectorXd& time, const Eigen::VectorXd& status, const Eigen::MatrixXd& x,
                   const Eigen::VectorXd& beta, const std::vector<Eigen::Index>& order, bool with_derivs) {
  const auto p = x.cols();
  CoxTerms t;
  t.score = Eigen::VectorXd::Zero(p);
  t.info = Eigen::MatrixXd::Zero(p, p);
  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
  const Eigen::VectorXd eta = x * beta;
  // shift for numerical safety; cancels in the partial likelihood
  const double shift = eta.size() > 0 ? eta.maxCoeff() : 0.0;
  const auto n = static_cast<Eigen::Index>(order.size());
  Eigen::Index i = 0;
  while (i < n) {
    // tie group [i, j)
    Eigen::Index j = i;
    const double tcur = time(order[static_cast<std::size_t>(i)]);
    while (j < n && time(order[static_cast<std::size_t>(j)]) == tcur) {
      const auto r = order[static_cast<std::size_t>(j)];
      const double w = std::exp(eta(r) - shift);
      s0 += w;
      if (with_derivs) {
        s1.noalias() += w * x.row(r).transpose();
        s2.noalias() += w * x.row(r).transpose() * x.row(r);
      }
      ++j;
    }
    for (Eigen::Index k = i; k < j; ++k) {
      const auto r = order[static_cast<std::size_t>(k)];
      if (status(r) <= 0.5) continue;
      t.loglik += eta(r) - shift - std::log(s0);
      if (with_derivs) {
        const Eigen::VectorXd mean = s1 / s0;
        t.score.noalias() += x.row(r).transpose() - mean;
        t.info.noalias() += s2 / s0 - mean * mean.transpose();
      }
    }
    i = j;
  }
  return t;
}

std::vector<Eigen::Index> decreasing_time_order(const Eigen::VectorXd& time) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(time.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return time(a) > time(b); });
  return order;
}

}  // namespace

double cox_partial_loglik(const Eigen::VectorXd& time, const Eigen::VectorXd& status, const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& beta) {
  return cox_terms(time, status, x, beta, decreasing_time_order(time), false).loglik;
}

CoxFit fit_cox_ph(const Eigen::VectorXd& time, const Eigen::VectorXd& status, const Eigen::MatrixXd& x) {
  const auto n = time.size();
  if (status.size() != n || x.rows() != n) throw DataError("fit_cox_ph: input lengths differ");
  if (n == 0) throw DataError("fit_cox_ph: no observations");
  if ((time.array() <= 0).any() || !time.allFinite()) throw DataError("fit_cox_ph: times must be positive");
  if (status.sum() < 1) throw DataError("fit_cox_ph: at least one event required");

  CoxFit fit;
  const auto p = x.cols();
  std::vector<int> informative;
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto col = x.col(j);
    if ((col.array() == col(0)).all()) {
      fit.uninformative_columns.push_back(static_cast<int>(j));
      fit.warnings.push_back("column " + std::to_string(j) + " is constant; coefficient fixed at 0");
    } else {
      informative.push_back(static_cast<int>(j));
    }
  }
  const auto q = static_cast<Eigen::Index>(informative.size());
  Eigen::MatrixXd xk(n, q);
  for (Eigen::Index k = 0; k < q; ++k) xk.col(k) = x.col(informative[static_cast<std::size_t>(k)]);
  // centering does not change the estimates and keeps exp() well scaled
  const Eigen::RowVectorXd means = xk.colwise().mean();
  xk.rowwise() -= means;

  const auto order = decreasing_time_order(time);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
  CoxTerms cur = cox_terms(time, status, xk, beta, order, true);
  for (int it = 0; it < 100 && q > 0; ++it) {
    fit.iterations = it + 1;
    Eigen::VectorXd delta = cur.info.ldlt().solve(cur.score);
    if (!delta.allFinite()) delta = cur.info.completeOrthogonalDecomposition().solve(cur.score);
    double step = 1.0;
    bool improved = false;
    CoxTerms cand;
    Eigen::VectorXd bcand;
    for (int half = 0; half < 40; ++half) {
      bcand = beta + step * delta;
      cand = cox_terms(time, status, xk, bcand, order, true);
      if (std::isfinite(cand.loglik) && cand.loglik >= cur.loglik - 1e-12 * std::abs(cur.loglik)) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
    const double change = std::abs(cand.loglik - cur.loglik);
    beta = bcand;
    cur = std::move(cand);
    if (cur.score.cwiseAbs().maxCoeff() < 1e-9 || (change < 1e-14 * std::abs(cur.loglik) && it > 2)) {
      fit.converged = true;
      break;
    }
  }
  if (q == 0) fit.converged = true;
  fit.score_norm = q > 0 ? cur.score.cwiseAbs().maxCoeff() : 0.0;
  if (q > 0 && !fit.converged && fit.score_norm < 1e-6) fit.converged = true;
  if ((beta.array().abs() > 20).any())
    fit.warnings.push_back("monotone likelihood suspected: |coefficient| > 20");

  fit.partial_loglik = cur.loglik;
  fit.coefficients = Eigen::VectorXd::Zero(p);
  fit.covariance = Eigen::MatrixXd::Zero(p, p);
  const Eigen::MatrixXd cov = q > 0 ? Eigen::MatrixXd(cur.info.ldlt().solve(Eigen::MatrixXd::Identity(q, q)))
                                    : Eigen::MatrixXd();
  for (Eigen::Index k = 0; k < q; ++k) {
    fit.coefficients(informative[static_cast<std::size_t>(k)]) = beta(k);
    for (Eigen::Index l = 0; l < q; ++l)
      fit.covariance(informative[static_cast<std::size_t>(k)], informative[static_cast<std::size_t>(l)]) = cov(k, l);
  }
  for (int j : fit.uninformative_columns) fit.covariance(j, j) = std::numeric_limits<double>::infinity();
  return fit;
}

TwoStageFit fit_2sps(const Eigen::VectorXd& y2, const Eigen::VectorXd& y1, const Eigen::MatrixXd& x_stage1,
                     const Eigen::MatrixXd& x_stage2) {
  TwoStageFit res;
  res.stage1 = fit_glm_binary(y1, x_stage1, Link::Logit);
  res.fitted_treatment = res.stage1.fitted(x_stage1);
  const double lo = res.fitted_treatment.minCoeff();
  const double hi = res.fitted_treatment.maxCoeff();
  if (lo < 1e-6 || hi > 1.0 - 1e-6 || !res.stage1.warnings.empty())
    res.warnings.push_back("first stage fits the treatment (near) perfectly; fitted values reach 0 or 1");
  if (hi - lo < 1e-3) res.warnings.push_back("first-stage fitted values are nearly constant; weak instruments");

  Eigen::MatrixXd x2(x_stage2.rows(), x_stage2.cols() + 1);
  x2.col(0) = res.fitted_treatment;
  x2.rightCols(x_stage2.cols()) = x_stage2;
  res.stage2 = fit_glm_binary(y2, x2, Link::Logit);
  res.treatment_coefficient = res.stage2.coefficients(0);
  res.treatment_variance = res.stage2.covariance(0, 0);
  for (const auto& w : res.stage2.warnings) res.warnings.push_back("stage 2: " + w);
  return res;
}

}  // namespace copjoint
