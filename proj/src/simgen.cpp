#include "copjoint/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "copjoint/copula.hpp"
#include "copjoint/errors.hpp"
#include "copjoint/parallel.hpp"

namespace copjoint {

std::string to_string(Specification s) { return s == Specification::Full ? "full" : "reduced"; }
std::string to_string(SurvivalModel s) { return s == SurvivalModel::Aft ? "aft" : "cox"; }

Eigen::VectorXd default_beta(Specification s) {
  Eigen::VectorXd b(6);
  if (s == Specification::Full) {
    b << 0.9, 1.0, 1.4, 0.7, -1.08, 0.6;
  } else {
    b << 0.0, 1.0, 1.4, 0.0, -1.08, 0.0;
  }
  return b;
}

Eigen::VectorXd default_gamma(Specification s) {
  Eigen::VectorXd g(6);
  if (s == Specification::Full) {
    g << -1.39, -1.31, -1.40, 1.12, 1.60, -1.23;
  } else {
    g << -1.39, -1.31, 0.0, 1.12, 0.0, 0.0;
  }
  return g;
}

void SimScenario::validate() const {
  if (n.empty()) throw ConfigError("scenario: n is empty");
  for (int v : n) {
    if (v < 10) throw ConfigError("scenario: n must be at least 10");
  }
  if (replicates < 1) throw ConfigError("scenario: replicates must be positive");
  if (!(rho > -1.0 && rho < 1.0)) throw ConfigError("scenario: rho must lie in (-1, 1)");
  if (censoring_target.empty()) throw ConfigError("scenario: censoring_target is empty");
  for (double c : censoring_target) {
    if (!(c >= 0.0 && c <= 0.9)) throw ConfigError("scenario: censoring_target must lie in [0, 0.9]");
  }
  if (beta.size() != 6) throw ConfigError("scenario: beta must have 6 entries");
  if (gamma.size() != 6) throw ConfigError("scenario: gamma must have 6 entries");
  if (cutoff_quantiles.empty()) throw ConfigError("scenario: cutoff_quantiles is empty");
  for (std::size_t i = 0; i < cutoff_quantiles.size(); ++i) {
    const double q = cutoff_quantiles[i];
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("scenario: cutoff quantiles must lie in (0, 1)");
    if (i > 0 && !(q > cutoff_quantiles[i - 1])) throw ConfigError("scenario: cutoff quantiles must increase");
  }
}

namespace {

template <class T>
std::vector<T> scalar_or_list(const YAML::Node& node, const std::string& key) {
  std::vector<T> out;
  try {
    if (node.IsSequence()) {
      for (const auto& v : node) out.push_back(v.as<T>());
    } else {
      out.push_back(node.as<T>());
    }
  } catch (const YAML::Exception&) {
    throw ConfigError("scenario: bad value for '" + key + "'");
  }
  return out;
}

Eigen::VectorXd as_vector(const YAML::Node& node, const std::string& key) {
  auto v = scalar_or_list<double>(node, key);
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

SimScenario parse_scenario(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("scenario: expected a mapping at the top level");
  static const std::set<std::string> known{"n", "replicates", "rho", "censoring_target", "beta", "gamma",
                                           "specification", "cutoff_quantiles", "seed", "survival_model"};
  std::vector<std::string> unknown;
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (!known.count(key)) unknown.push_back(key);
  }
  if (!unknown.empty()) {
    std::string msg = "scenario: unknown keys:";
    for (const auto& k : unknown) msg += " '" + k + "'";
    throw ConfigError(msg);
  }
  SimScenario s;
  try {
    if (root["specification"]) {
      const auto v = root["specification"].as<std::string>();
      if (v == "full") {
        s.specification = Specification::Full;
      } else if (v == "reduced") {
        s.specification = Specification::Reduced;
      } else {
        throw ConfigError("scenario: specification must be full or reduced");
      }
      s.beta = default_beta(s.specification);
      s.gamma = default_gamma(s.specification);
    }
    if (root["survival_model"]) {
      const auto v = root["survival_model"].as<std::string>();
      if (v == "aft") {
        s.survival_model = SurvivalModel::Aft;
      } else if (v == "cox") {
        s.survival_model = SurvivalModel::Cox;
      } else {
        throw ConfigError("scenario: survival_model must be aft or cox");
      }
    }
    if (root["n"]) s.n = scalar_or_list<int>(root["n"], "n");
    if (root["replicates"]) s.replicates = root["replicates"].as<int>();
    if (root["rho"]) s.rho = root["rho"].as<double>();
    if (root["censoring_target"]) s.censoring_target = scalar_or_list<double>(root["censoring_target"], "censoring_target");
    if (root["beta"]) s.beta = as_vector(root["beta"], "beta");
    if (root["gamma"]) s.gamma = as_vector(root["gamma"], "gamma");
    if (root["cutoff_quantiles"]) s.cutoff_quantiles = scalar_or_list<double>(root["cutoff_quantiles"], "cutoff_quantiles");
    if (root["seed"]) s.seed = root["seed"].as<std::uint64_t>();
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  s.validate();
  return s;
}

SimScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

double f1_transform(double x) { return std::cos(2.0 * M_PI * x) + std::sin(M_PI * x); }

Eigen::MatrixXd gen_covariates(int n, std::mt19937_64& rng) {
  if (n < 1) throw DomainError("gen_covariates: n must be positive");
  // equicorrelation 0.5: x_j = sqrt(0.5) w + sqrt(0.5) z_j
  std::normal_distribution<double> z;
  const double a = std::sqrt(0.5);
  Eigen::MatrixXd x(n, 10);
  for (int i = 0; i < n; ++i) {
    const double w = z(rng);
    for (int j = 0; j < 10; ++j) x(i, j) = a * w + a * z(rng);
  }
  for (int i = 0; i < n; ++i) x(i, kTransformedCol) = f1_transform(x(i, kTransformedCol));
  return x;
}

Eigen::MatrixXd gen_covariates(int n, std::uint64_t seed) {
  auto rng = make_stream(seed, 0, 1);
  return gen_covariates(n, rng);
}

JointErrors gen_joint_errors(int n, double rho, std::mt19937_64& rng) {
  if (!(rho > -1.0 && rho < 1.0)) throw DomainError("gen_joint_errors: rho must lie in (-1, 1)");
  std::normal_distribution<double> z;
  JointErrors e{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  const double s = std::sqrt(1.0 - rho * rho);
  for (int i = 0; i < n; ++i) {
    const double a = z(rng);
    const double b = z(rng);
    e.e1(i) = a;
    e.e2(i) = rho * a + s * b;
  }
  return e;
}

JointErrors gen_joint_errors(int n, double rho, std::uint64_t seed) {
  auto rng = make_stream(seed, 0, 2);
  return gen_joint_errors(n, rho, rng);
}

Eigen::VectorXd treatment_index(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta) {
  if (beta.size() != 6 || x.cols() < 10) throw DomainError("treatment_index: expects 6 coefficients and 10 covariates");
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(x.rows());
  for (int j = 0; j < 6; ++j) eta += beta(j) * x.col(kTreatmentCols[j]);
  return eta;
}

Eigen::VectorXd gen_treatment(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta, const Eigen::VectorXd& e1) {
  const Eigen::VectorXd eta = treatment_index(x, beta);
  Eigen::VectorXd y(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) y(i) = eta(i) + e1(i) > 0.0 ? 1.0 : 0.0;
  return y;
}

Eigen::VectorXd outcome_index(const Eigen::MatrixXd& x, const Eigen::VectorXd& y1, const Eigen::VectorXd& gamma) {
  if (gamma.size() != 6 || x.cols() < 10) throw DomainError("outcome_index: expects 6 coefficients and 10 covariates");
  Eigen::VectorXd eta = gamma(0) * y1;
  for (int j = 0; j < 5; ++j) eta += gamma(j + 1) * x.col(kOutcomeCols[j]);
  return eta;
}

Eigen::VectorXd gen_survival(const Eigen::MatrixXd& x, const Eigen::VectorXd& y1, const Eigen::VectorXd& gamma,
                             const Eigen::VectorXd& e2, SurvivalModel model) {
  const Eigen::VectorXd eta = outcome_index(x, y1, gamma);
  Eigen::VectorXd t(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (model == SurvivalModel::Aft) {
      t(i) = std::exp(eta(i) + e2(i));
    } else {
      // -log(1 - Phi(e2)) without cancellation
      const double s = norm_cdf(-e2(i));
      t(i) = std::exp(eta(i)) * -std::log(s);
    }
  }
  return t;
}

double calibrate_censoring(const Eigen::VectorXd& pilot_times, double target_rate) {
  if (!(target_rate >= 0.0 && target_rate <= 0.9)) throw DomainError("censoring target must lie in [0, 0.9]");
  if (target_rate == 0.0) return std::numeric_limits<double>::infinity();
  // expected censored fraction under Uniform(0, c): mean(min(t / c, 1))
  auto rate = [&](double c) { return (pilot_times.array() / c).min(1.0).mean(); };
  double lo = 1e-12;
  double hi = pilot_times.maxCoeff();
  while (rate(hi) > target_rate) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (rate(mid) > target_rate) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi / lo - 1.0 < 1e-12) break;
  }
  return 0.5 * (lo + hi);
}

CensoredTimes apply_censoring(const Eigen::VectorXd& true_time, double c_max, std::mt19937_64& rng) {
  CensoredTimes out{true_time, Eigen::VectorXd::Ones(true_time.size()), c_max};
  if (!std::isfinite(c_max)) return out;
  std::uniform_real_distribution<double> u(0.0, c_max);
  for (Eigen::Index i = 0; i < true_time.size(); ++i) {
    const double c = u(rng);
    if (c < true_time(i)) {
      out.time(i) = c;
      out.event(i) = 0.0;
    }
  }
  return out;
}

double empirical_cutoff(const Eigen::VectorXd& observed_time, double quantile) {
  if (!(quantile > 0.0 && quantile < 1.0)) throw DomainError("cutoff quantile must lie in (0, 1)");
  std::vector<double> v(observed_time.data(), observed_time.data() + observed_time.size());
  std::sort(v.begin(), v.end());
  // linear interpolation between order statistics
  const double h = (static_cast<double>(v.size()) - 1.0) * quantile;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Dichotomized dichotomize(const Eigen::VectorXd& time, const Eigen::VectorXd& event, double cutoff) {
  if (time.size() == 0) throw DomainError("dichotomize: no rows");
  if (!(cutoff >= time.minCoeff() && cutoff <= time.maxCoeff()))
    throw DomainError("dichotomize: cutoff outside the observed time range");
  Dichotomized d;
  d.cutoff = cutoff;
  d.y2.resize(time.size());
  for (Eigen::Index i = 0; i < time.size(); ++i) {
    if (time(i) > cutoff) {
      d.y2(i) = 1.0;
    } else if (event(i) > 0.5) {
      d.y2(i) = 0.0;
    } else {
      d.y2(i) = std::numeric_limits<double>::quiet_NaN();
      ++d.n_missing;
    }
  }
  return d;
}

SimDataset simulate(const SimScenario& s, int n, double c_max, std::uint64_t replicate, std::uint64_t cell) {
  auto rng = make_stream(s.seed, replicate, 1000 + cell);
  SimDataset d;
  d.x = gen_covariates(n, rng);
  d.errors = gen_joint_errors(n, s.rho, rng);
  d.y1 = gen_treatment(d.x, s.beta, d.errors.e1);
  d.true_time = gen_survival(d.x, d.y1, s.gamma, d.errors.e2, s.survival_model);
  const CensoredTimes c = apply_censoring(d.true_time, c_max, rng);
  d.time = c.time;
  d.event = c.event;
  d.c_max = c_max;
  d.realized_censoring = 1.0 - d.event.mean();
  return d;
}

double pilot_c_max(const SimScenario& s, double target_rate, int pilot_n) {
  if (target_rate == 0.0) return std::numeric_limits<double>::infinity();
  auto rng = make_stream(s.seed, 0, 7);
  const Eigen::MatrixXd x = gen_covariates(pilot_n, rng);
  const JointErrors e = gen_joint_errors(pilot_n, s.rho, rng);
  const Eigen::VectorXd y1 = gen_treatment(x, s.beta, e.e1);
  const Eigen::VectorXd t = gen_survival(x, y1, s.gamma, e.e2, s.survival_model);
  return calibrate_censoring(t, target_rate);
}

OracleCurve true_sate_oracle(const SimScenario& s, const std::vector<double>& quantiles, int n_oracle,
                             double censoring_target, std::uint64_t seed) {
  auto rng = make_stream(seed ? seed : s.seed, 0, 9);
  const Eigen::MatrixXd x = gen_covariates(n_oracle, rng);
  const JointErrors e = gen_joint_errors(n_oracle, s.rho, rng);
  const Eigen::VectorXd y1 = gen_treatment(x, s.beta, e.e1);
  const Eigen::VectorXd t = gen_survival(x, y1, s.gamma, e.e2, s.survival_model);
  const double c_max = calibrate_censoring(t, censoring_target);
  const CensoredTimes obs = apply_censoring(t, c_max, rng);
  const Eigen::VectorXd base = outcome_index(x, Eigen::VectorXd::Zero(n_oracle), s.gamma);
  const double g = s.gamma(0);
  OracleCurve out;
  out.quantiles = quantiles;
  for (double q : quantiles) {
    const double c = empirical_cutoff(obs.time, q);
    const double lc = std::log(c);
    double sum = 0.0;
    double sum2 = 0.0;
    for (int i = 0; i < n_oracle; ++i) {
      double d = 0.0;
      if (s.survival_model == SurvivalModel::Aft) {
        d = norm_cdf(base(i) + g - lc) - norm_cdf(base(i) - lc);
      } else {
        d = std::exp(-c * std::exp(-(base(i) + g))) - std::exp(-c * std::exp(-base(i)));
      }
      sum += d;
      sum2 += d * d;
    }
    const double n = static_cast<double>(n_oracle);
    const double mean = sum / n;
    out.cutoffs.push_back(c);
    out.sate.push_back(mean);
    out.se.push_back(std::sqrt(std::max(0.0, sum2 / n - mean * mean) / n));
  }
  return out;
}

}  // namespace copjoint
