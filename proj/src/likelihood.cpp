#include <algorithm>
#include <cmath>

#include "copjoint/errors.hpp"
#include "copjoint/joint_model.hpp"

namespace copjoint {

JointConfigProbs joint_config_probs(double p1, double p2, const CopulaSpec& copula) {
  if (!(p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0))
    throw DomainError("joint_config_probs: marginal probabilities must lie in (0, 1)");
  JointConfigProbs k;
  const double c = copula_cdf(p1, p2, copula);
  k.k11 = c;
  k.k10 = p1 - c;
  k.k01 = p2 - c;
  k.k00 = 1.0 - p1 - p2 + c;
  for (double* cell : {&k.k11, &k.k10, &k.k01, &k.k00}) {
    if (*cell < 0.0) {
      *cell = 0.0;
      k.clamped = true;
    }
  }
  return k;
}

JointLikelihood::JointLikelihood(std::shared_ptr<const JointDesign> design, CopulaSpec copula,
                                 std::optional<double> fixed_theta_star)
    : design_(std::move(design)), copula_(copula), map_(theta_reparam(copula.family)),
      fixed_theta_star_(fixed_theta_star) {
  if (!design_) throw DomainError("JointLikelihood: null design");
}

double JointLikelihood::theta_star(const Eigen::VectorXd& params) const {
  return fixed_theta_star_ ? *fixed_theta_star_ : params(params.size() - 1);
}

CopulaSpec JointLikelihood::copula_at(const Eigen::VectorXd& params) const {
  CopulaSpec c = copula_;
  c.theta = map_.from_unconstrained(theta_star(params));
  return c;
}

namespace {

struct RowEval {
  double ll = 0.0;
  double dp1 = 0.0;     // d ll / d eta1
  double dp2 = 0.0;     // d ll / d eta2
  double dtheta = 0.0;  // d ll / d theta (natural scale)
  bool floored = false;
  bool frechet = false;
};

RowEval eval_row(double eta1, double eta2, double y1, double y2, Link l1, Link l2, const CopulaSpec& cop,
                 bool derivs) {
  RowEval r;
  double p1 = link_cdf(l1, eta1);
  double p2 = link_cdf(l2, eta2);
  double d1 = link_density(l1, eta1);
  double d2 = link_density(l2, eta2);
  if (p1 < kProbClamp || p1 > 1.0 - kProbClamp) {
    p1 = std::clamp(p1, kProbClamp, 1.0 - kProbClamp);
    d1 = 0.0;
  }
  if (p2 < kProbClamp || p2 > 1.0 - kProbClamp) {
    p2 = std::clamp(p2, kProbClamp, 1.0 - kProbClamp);
    d2 = 0.0;
  }
  const double c = copula_cdf(p1, p2, cop);
  const bool t1 = y1 > 0.5;
  const bool t2 = y2 > 0.5;
  double kappa = 0.0;
  double sign = 1.0;
  if (t1 && t2) {
    kappa = c;
  } else if (t1) {
    kappa = p1 - c;
    sign = -1.0;
  } else if (t2) {
    kappa = p2 - c;
    sign = -1.0;
  } else {
    kappa = 1.0 - p1 - p2 + c;
  }
  if (kappa < 0.0) r.frechet = true;
  if (!(kappa >= kCellFloor)) {
    r.ll = std::log(kCellFloor);
    r.floored = true;
    return r;
  }
  r.ll = std::log(kappa);
  if (!derivs) return r;
  const CopulaPartials pd = copula_partials(p1, p2, cop);
  double dl_dp1 = 0.0;
  double dl_dp2 = 0.0;
  if (t1 && t2) {
    dl_dp1 = pd.du;
    dl_dp2 = pd.dv;
  } else if (t1) {
    dl_dp1 = 1.0 - pd.du;
    dl_dp2 = -pd.dv;
  } else if (t2) {
    dl_dp1 = -pd.du;
    dl_dp2 = 1.0 - pd.dv;
  } else {
    dl_dp1 = pd.du - 1.0;
    dl_dp2 = pd.dv - 1.0;
  }
  r.dp1 = dl_dp1 / kappa * d1;
  r.dp2 = dl_dp2 / kappa * d2;
  r.dtheta = sign * pd.dtheta / kappa;
  return r;
}

}  // namespace

Eigen::VectorXd JointLikelihood::loglik_terms(const Eigen::VectorXd& params) const {
  if (params.size() != n_params())
    throw DomainError("joint_loglik: expected " + std::to_string(n_params()) + " parameters, got " +
                      std::to_string(params.size()));
  const auto& d = *design_;
  const Eigen::VectorXd eta1 = d.treatment.x * params.head(d.p1());
  const Eigen::VectorXd eta2 = d.outcome.x * params.segment(d.p1(), d.p2());
  const CopulaSpec cop = copula_at(params);
  Eigen::VectorXd out(d.n());
  for (Eigen::Index i = 0; i < d.n(); ++i)
    out(i) = eval_row(eta1(i), eta2(i), d.y1(i), d.y2(i), d.treatment.link, d.outcome.link, cop, false).ll;
  return out;
}

double JointLikelihood::loglik(const Eigen::VectorXd& params, LoglikDiagnostics* diag) const {
  if (params.size() != n_params())
    throw DomainError("joint_loglik: expected " + std::to_string(n_params()) + " parameters, got " +
                      std::to_string(params.size()));
  const auto& d = *design_;
  const Eigen::VectorXd eta1 = d.treatment.x * params.head(d.p1());
  const Eigen::VectorXd eta2 = d.outcome.x * params.segment(d.p1(), d.p2());
  const CopulaSpec cop = copula_at(params);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const RowEval r = eval_row(eta1(i), eta2(i), d.y1(i), d.y2(i), d.treatment.link, d.outcome.link, cop, false);
    ll += r.ll;
    if (diag) {
      diag->clamped_cells += r.floored;
      diag->frechet_clamps += r.frechet;
    }
  }
  return ll;
}

Eigen::VectorXd JointLikelihood::gradient(const Eigen::VectorXd& params) const {
  if (params.size() != n_params())
    throw DomainError("joint_loglik_grad: expected " + std::to_string(n_params()) + " parameters");
  const auto& d = *design_;
  const Eigen::VectorXd eta1 = d.treatment.x * params.head(d.p1());
  const Eigen::VectorXd eta2 = d.outcome.x * params.segment(d.p1(), d.p2());
  const CopulaSpec cop = copula_at(params);
  Eigen::VectorXd w1(d.n());
  Eigen::VectorXd w2(d.n());
  double gtheta = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const RowEval r = eval_row(eta1(i), eta2(i), d.y1(i), d.y2(i), d.treatment.link, d.outcome.link, cop, true);
    w1(i) = r.dp1;
    w2(i) = r.dp2;
    gtheta += r.dtheta;
  }
  Eigen::VectorXd g(n_params());
  g.head(d.p1()) = d.treatment.x.transpose() * w1;
  g.segment(d.p1(), d.p2()) = d.outcome.x.transpose() * w2;
  if (theta_free()) g(n_params() - 1) = gtheta * map_.derivative(theta_star(params));
  return g;
}

}  // namespace copjoint
