#include <algorithm>
#include <cmath>
#include <limits>

#include "copjoint/comparators.hpp"
#include "copjoint/errors.hpp"
#include "copjoint/joint_model.hpp"
#include "copjoint/trust_region.hpp"

namespace copjoint {

double FittedJointModel::theta_star() const {
  if (theta_free) return coefficients(coefficients.size() - 1);
  return theta_reparam(copula.family).to_unconstrained(copula.theta);
}

Eigen::VectorXd FittedJointModel::standard_errors() const { return covariance.diagonal().cwiseMax(0.0).cwiseSqrt(); }

InformationCriteria information_criteria(const FittedJointModel& model) {
  return {model.aic, model.bic, model.edf_total};
}

namespace {

double start_theta_star(Family f) {
  switch (f) {
    case Family::Clayton: return std::log(0.2);
    case Family::Joe: return std::log(0.2);
    default: return 0.0;
  }
}

Eigen::VectorXd starting_values(const JointDesign& d, const Eigen::MatrixXd& s_full, bool theta_free, Family family) {
  const int p1 = d.p1();
  const int p2 = d.p2();
  GlmOptions o1;
  o1.penalty = s_full.block(0, 0, p1, p1);
  GlmOptions o2;
  o2.penalty = s_full.block(p1, p1, p2, p2);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(p1 + p2 + (theta_free ? 1 : 0));
  try {
    x0.head(p1) = fit_glm_binary(d.y1, d.treatment.x, d.treatment.link, o1).coefficients;
  } catch (const std::exception&) {
  }
  try {
    x0.segment(p1, p2) = fit_glm_binary(d.y2, d.outcome.x, d.outcome.link, o2).coefficients;
  } catch (const std::exception&) {
  }
  for (Eigen::Index i = 0; i < p1 + p2; ++i) {
    if (!std::isfinite(x0(i))) x0(i) = 0.0;
  }
  if (theta_free) x0(p1 + p2) = start_theta_star(family);
  return x0;
}

FittedJointModel fit_fixed_lambda(std::shared_ptr<const JointDesign> design, const CopulaSpec& copula,
                                  const FitOptions& opt, const std::vector<double>& lambdas,
                                  const std::optional<Eigen::VectorXd>& start) {
  const JointDesign& d = *design;
  JointLikelihood lik(design, copula, opt.fixed_theta_star);
  const bool theta_free = lik.theta_free();
  const int np = lik.n_params();
  const int p = d.p1() + d.p2();
  const Eigen::MatrixXd s = d.penalty(lambdas, theta_free ? 1 : 0);

  Eigen::VectorXd x0;
  if (start && start->size() == np) {
    x0 = *start;
  } else {
    x0 = starting_values(d, s, theta_free, copula.family);
  }

  TrustRegionOptions tro;
  tro.max_iter = opt.max_iter;
  tro.grad_tol = opt.grad_tol;
  tro.rel_tol = opt.rel_tol;
  tro.lower = Eigen::VectorXd::Constant(np, -opt.coef_cap);
  tro.upper = Eigen::VectorXd::Constant(np, opt.coef_cap);
  if (theta_free) {
    const ThetaMap& m = lik.theta_map();
    tro.lower(np - 1) = m.lower_bound();
    tro.upper(np - 1) = m.upper_bound();
  }
  x0 = x0.cwiseMax(tro.lower).cwiseMin(tro.upper);

  auto objective = [&](const Eigen::VectorXd& x) {
    const double ll = lik.loglik(x);
    return -(ll - 0.5 * x.dot(s * x));
  };
  auto obj_grad = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(-(lik.gradient(x) - s * x)); };
  auto obj_hess = [&](const Eigen::VectorXd& x, const Eigen::VectorXd&) { return fd_hessian(obj_grad, x); };

  TrustRegionNewton solver(objective, obj_grad, obj_hess);
  TrustRegionResult res = solver.minimize(x0, tro);

  FittedJointModel out;
  out.design = design;
  out.theta_free = theta_free;
  out.coefficients = res.x;
  out.copula = lik.copula_at(res.x);
  out.lambda = lambdas;
  out.loglik = lik.loglik(res.x, &out.diagnostics);
  out.penalized_loglik = -res.value;
  out.converged = res.converged;
  out.iterations = res.iterations;
  out.gradient_norm = res.projected_grad_norm;
  for (double v : res.accepted_values) out.objective_trace.push_back(-v);

  const Eigen::MatrixXd hp = fd_hessian(obj_grad, res.x);  // H + S
  out.hessian = hp - s;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (hp + hp.transpose()));
  Eigen::VectorXd ev = es.eigenvalues();
  bool floored = false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < 1e-10) {
      ev(i) = 1e-10;
      floored = true;
    }
  }
  out.covariance = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  if (floored) out.warnings.push_back("penalized information not positive definite; eigenvalues floored at 1e-10");

  const Eigen::MatrixXd f = out.covariance * out.hessian;
  // off a proper optimum (indefinite H) the trace can leave [0, np]
  out.edf_total = std::clamp(f.trace(), 0.0, static_cast<double>(np));
  const auto ranges = d.smooth_ranges();
  const auto names = d.smooth_names();
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    const auto [a, len] = ranges[k];
    out.edf_per_smooth.emplace_back(names[k], std::clamp(f.block(a, a, len, len).trace(), 0.0, static_cast<double>(len)));
  }
  const double n = static_cast<double>(d.n());
  out.aic = -2.0 * out.loglik + 2.0 * out.edf_total;
  out.bic = -2.0 * out.loglik + std::log(n) * out.edf_total;

  if (!res.converged) out.warnings.push_back("optimizer did not converge in " + std::to_string(res.iterations) + " iterations");
  for (int idx : res.at_bound) {
    if (idx < p) {
      out.warnings.push_back("coefficient " + std::to_string(idx) + " at the separation cap; possible quasi-separation");
    } else {
      out.warnings.push_back("copula parameter at the boundary of its range");
    }
  }
  if (out.diagnostics.clamped_cells > 0)
    out.warnings.push_back(std::to_string(out.diagnostics.clamped_cells) + " cell probabilities floored at 1e-300");
  return out;
}

}  // namespace

FittedJointModel fit_design(std::shared_ptr<const JointDesign> design, const CopulaSpec& copula,
                            const FitOptions& options) {
  if (!design) throw DomainError("fit: null design");
  copula.validate();
  const int m = design->n_smooths();
  if (!options.lambdas.empty() || m == 0) {
    std::vector<double> lam = options.lambdas;
    if (lam.empty()) lam.assign(static_cast<std::size_t>(m), 1.0);
    auto out = fit_fixed_lambda(design, copula, options, lam, options.start);
    for (const auto& w : design->warnings) out.warnings.insert(out.warnings.begin(), w);
    return out;
  }

  // smoothing selection by AIC, one coordinate at a time on log10 lambda
  std::vector<double> loglam(static_cast<std::size_t>(m), 0.0);
  auto to_lambda = [](const std::vector<double>& l) {
    std::vector<double> o;
    for (double v : l) o.push_back(std::pow(10.0, v));
    return o;
  };
  FittedJointModel best = fit_fixed_lambda(design, copula, options, to_lambda(loglam), options.start);
  Eigen::VectorXd warm = best.coefficients;
  auto eval = [&](std::size_t k, double v) {
    auto trial = loglam;
    trial[k] = v;
    FittedJointModel f = fit_fixed_lambda(design, copula, options, to_lambda(trial), warm);
    if (f.aic < best.aic) {
      best = f;
      loglam = trial;
    }
    return f.aic;
  };
  for (int sweep = 0; sweep < std::max(1, options.smoothing_sweeps); ++sweep) {
    for (std::size_t k = 0; k < loglam.size(); ++k) {
      for (int g = -4; g <= 4; ++g) {
        if (static_cast<double>(g) == loglam[k]) continue;
        eval(k, g);
      }
      const double best_v = loglam[k];
      warm = best.coefficients;
      // golden-section refinement around the grid winner
      double a = std::max(-4.0, best_v - 1.0);
      double b = std::min(4.0, best_v + 1.0);
      const double r = 0.5 * (std::sqrt(5.0) - 1.0);
      double c1 = b - r * (b - a);
      double c2 = a + r * (b - a);
      double f1 = eval(k, c1);
      double f2 = eval(k, c2);
      while (b - a > 0.05) {
        if (f1 < f2) {
          b = c2;
          c2 = c1;
          f2 = f1;
          c1 = b - r * (b - a);
          f1 = eval(k, c1);
        } else {
          a = c1;
          c1 = c2;
          f1 = f2;
          c2 = a + r * (b - a);
          f2 = eval(k, c2);
        }
      }
      warm = best.coefficients;
    }
  }
  for (const auto& w : design->warnings) best.warnings.insert(best.warnings.begin(), w);
  return best;
}

FittedJointModel fit(const ModelSpec& spec, const Dataset& data, const FitOptions& options) {
  auto design = std::make_shared<const JointDesign>(assemble_design(data, spec));
  return fit_design(design, spec.copula, options);
}

}  // namespace copjoint
