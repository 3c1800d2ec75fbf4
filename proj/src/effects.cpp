#include "copjoint/effects.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "copjoint/errors.hpp"
#include "copjoint/parallel.hpp"

namespace copjoint {

std::string to_string(SateVariant v) {
  return v == SateVariant::MarginalToggle ? "marginal_toggle" : "conditional_on_treatment";
}

SateVariant parse_sate_variant(const std::string& s) {
  if (s == "marginal_toggle") return SateVariant::MarginalToggle;
  if (s == "conditional_on_treatment") return SateVariant::ConditionalOnTreatment;
  throw ConfigError("unknown SATE variant '" + s + "' (expected marginal_toggle or conditional_on_treatment)");
}

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

}  // namespace

double sate_at(const JointDesign& d, const CopulaSpec& copula_template, bool theta_free, const Eigen::VectorXd& params,
               SateVariant variant) {
  const int p1 = d.p1();
  const int p2 = d.p2();
  const int tc = d.outcome.treatment_col;
  if (tc < 0) throw DomainError("sate: outcome equation has no treatment column");
  const Eigen::VectorXd b2 = params.segment(p1, p2);
  // eta2 with the treatment column removed
  const Eigen::VectorXd base = d.outcome.x * b2 - d.outcome.x.col(tc) * b2(tc);
  const double gamma = b2(tc);
  const Link l2 = d.outcome.link;
  double acc = 0.0;
  if (variant == SateVariant::MarginalToggle) {
    for (Eigen::Index i = 0; i < d.n(); ++i)
      acc += link_cdf(l2, base(i) + gamma) - link_cdf(l2, base(i));
    return acc / static_cast<double>(d.n());
  }
  CopulaSpec cop = copula_template;
  if (theta_free) cop.theta = theta_reparam(cop.family).from_unconstrained(params(p1 + p2));
  const Eigen::VectorXd eta1 = d.treatment.x * params.head(p1);
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const double q1 = clamp_prob(link_cdf(d.treatment.link, eta1(i)));
    const double q21 = clamp_prob(link_cdf(l2, base(i) + gamma));
    const double q20 = clamp_prob(link_cdf(l2, base(i)));
    const double treated = copula_cdf(q1, q21, cop) / q1;
    const double control = (q20 - copula_cdf(q1, q20, cop)) / (1.0 - q1);
    acc += treated - control;
  }
  return acc / static_cast<double>(d.n());
}

double sate(const FittedJointModel& model, SateVariant variant) {
  CopulaSpec tmpl = model.copula;
  return sate_at(*model.design, tmpl, model.theta_free, model.coefficients, variant);
}

Eigen::MatrixXd draw_coefficients(const FittedJointModel& model, int n_draws, std::uint64_t seed,
                                  std::vector<std::string>* warnings) {
  if (n_draws < 1) throw DomainError("n_draws must be positive");
  const Eigen::Index k = model.coefficients.size();
  if (model.covariance.rows() != k || model.covariance.cols() != k)
    throw DomainError("draw_coefficients: covariance has the wrong shape");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (model.covariance + model.covariance.transpose()));
  Eigen::VectorXd ev = es.eigenvalues();
  bool floored = false;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(ev(i) >= 1e-10)) {
      ev(i) = 1e-10;
      floored = true;
    }
  }
  if (floored && warnings) warnings->push_back("covariance not positive definite; eigenvalues floored at 1e-10");
  const Eigen::MatrixXd root = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
  Eigen::MatrixXd out(k, n_draws);
  for (int d = 0; d < n_draws; ++d) {
    auto rng = make_stream(seed, static_cast<std::uint64_t>(d), 0x5a7e);
    std::normal_distribution<double> z;
    Eigen::VectorXd e(k);
    for (Eigen::Index i = 0; i < k; ++i) e(i) = z(rng);
    out.col(d) = model.coefficients + root * e;
  }
  return out;
}

double empirical_quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw DomainError("empirical_quantile: no values");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  auto idx = static_cast<std::ptrdiff_t>(std::ceil(n * prob - 1e-12)) - 1;
  idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(values.size()) - 1);
  return values[static_cast<std::size_t>(idx)];
}

SateEstimate sate_ci(const FittedJointModel& model, SateVariant variant, int n_draws, double level, std::uint64_t seed,
                     int jobs) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("level must lie in (0, 1)");
  SateEstimate est;
  est.variant = variant;
  est.n_draws = n_draws;
  est.level = level;
  est.seed = seed;
  est.value = sate(model, variant);
  const Eigen::MatrixXd draws = draw_coefficients(model, n_draws, seed, &est.warnings);
  std::vector<double> vals(static_cast<std::size_t>(n_draws));
  parallel_for(vals.size(), jobs, [&](std::size_t d) {
    vals[d] = sate_at(*model.design, model.copula, model.theta_free, draws.col(static_cast<Eigen::Index>(d)), variant);
  });
  const double a = 0.5 * (1.0 - level);
  est.ci_low = std::min(est.value, empirical_quantile(vals, a));
  est.ci_high = std::max(est.value, empirical_quantile(vals, 1.0 - a));
  return est;
}

DependenceSummary kendall_tau_ci(const FittedJointModel& model, int n_draws, double level, std::uint64_t seed,
                                 TauCiMethod method) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("level must lie in (0, 1)");
  const ThetaMap map = theta_reparam(model.copula.family);
  DependenceSummary out;
  out.method = method;
  out.theta = model.copula.theta;
  out.tau = theta_to_tau(model.copula);
  auto tau_of = [&](double ts) {
    CopulaSpec c = model.copula;
    c.theta = map.from_unconstrained(ts);
    return theta_to_tau(c);
  };
  if (!model.theta_free) {
    out.ci_low = out.ci_high = out.tau;
    out.theta_ci_low = out.theta_ci_high = out.theta;
    return out;
  }
  const Eigen::Index last = model.coefficients.size() - 1;
  const double ts = model.coefficients(last);
  double lo_star = ts;
  double hi_star = ts;
  const double a = 0.5 * (1.0 - level);
  if (method == TauCiMethod::ObservedInformation) {
    const double se = std::sqrt(std::max(0.0, model.covariance(last, last)));
    const double z = norm_quantile(1.0 - a);
    lo_star = ts - z * se;
    hi_star = ts + z * se;
  } else {
    out.n_draws = n_draws;
    const Eigen::MatrixXd draws = draw_coefficients(model, n_draws, seed);
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(n_draws));
    for (int d = 0; d < n_draws; ++d) v.push_back(draws(last, d));
    lo_star = empirical_quantile(v, a);
    hi_star = empirical_quantile(v, 1.0 - a);
  }
  // the maps theta* -> theta -> tau are increasing, so endpoints transform directly
  out.theta_ci_low = map.from_unconstrained(lo_star);
  out.theta_ci_high = map.from_unconstrained(hi_star);
  out.ci_low = tau_of(lo_star);
  out.ci_high = tau_of(hi_star);
  return out;
}

std::string GridRequest::label() const {
  CopulaSpec c;
  c.family = family;
  c.rotation = rotation;
  return c.label() + " " + link_code(treatment_link) + link_code(outcome_link);
}

std::vector<ModelGridRow> model_grid(const Dataset& data, const std::vector<GridRequest>& requests,
                                     const ModelSpec& spec_template, const GridOptions& options,
                                     std::vector<std::string>* warnings) {
  std::vector<GridRequest> uniq;
  for (const auto& r : requests) {
    if (std::find(uniq.begin(), uniq.end(), r) != uniq.end()) {
      if (warnings) warnings->push_back("duplicate grid entry " + r.label() + " ignored");
      continue;
    }
    uniq.push_back(r);
  }
  std::vector<ModelGridRow> rows(uniq.size());
  parallel_for(uniq.size(), options.jobs, [&](std::size_t k) {
    ModelGridRow& row = rows[k];
    row.request = uniq[k];
    ModelSpec spec = spec_template;
    spec.copula.family = uniq[k].family;
    spec.copula.rotation = uniq[k].rotation;
    spec.copula.theta = theta_reparam(uniq[k].family).from_unconstrained(0.0);
    spec.treatment.link = uniq[k].treatment_link;
    spec.outcome.link = uniq[k].outcome_link;
    try {
      auto m = std::make_shared<const FittedJointModel>(fit(spec, data, options.fit));
      row.model = m;
      row.aic = m->aic;
      row.bic = m->bic;
      row.loglik = m->loglik;
      row.edf = m->edf_total;
      row.converged = m->converged;
      row.warnings = m->warnings;
      row.sate = sate_ci(*m, options.variant, options.n_draws, options.level, options.seed);
      row.tau = kendall_tau_ci(*m, options.n_draws, options.level, options.seed);
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& e) {
      row.failed = true;
      row.converged = false;
      row.error = e.what();
      row.aic = row.bic = std::numeric_limits<double>::quiet_NaN();
    }
  });
  std::stable_sort(rows.begin(), rows.end(), [](const ModelGridRow& a, const ModelGridRow& b) {
    auto tier = [](const ModelGridRow& r) { return r.failed ? 2 : (r.converged ? 0 : 1); };
    if (tier(a) != tier(b)) return tier(a) < tier(b);
    if (a.failed) return false;
    if (a.aic != b.aic) return a.aic < b.aic;
    return a.bic < b.bic;
  });
  return rows;
}

}  // namespace copjoint
