#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace copjoint {

enum class Specification { Full, Reduced };
enum class SurvivalModel { Aft, Cox };

std::string to_string(Specification s);
std::string to_string(SurvivalModel s);

/// Treatment covariates are x1..x6 (columns 0..5), x1 enters through f1.
/// Outcome covariates are Y1, x3, x7, x8, x9, x10.
inline constexpr int kTreatmentCols[6] = {0, 1, 2, 3, 4, 5};
inline constexpr int kOutcomeCols[5] = {2, 6, 7, 8, 9};
inline constexpr int kTransformedCol = 0;

Eigen::VectorXd default_beta(Specification s);
Eigen::VectorXd default_gamma(Specification s);

struct SimScenario {
  std::vector<int> n{200};
  int replicates = 200;
  double rho = 0.5;
  std::vector<double> censoring_target{0.0};
  Eigen::VectorXd beta = default_beta(Specification::Full);
  Eigen::VectorXd gamma = default_gamma(Specification::Full);
  Specification specification = Specification::Full;
  std::vector<double> cutoff_quantiles{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::uint64_t seed = 1;
  SurvivalModel survival_model = SurvivalModel::Aft;

  void validate() const;  // throws ConfigError
};

/// Reads a YAML scenario. Keys: n, replicates, rho, censoring_target, beta,
/// gamma, specification, cutoff_quantiles, seed, survival_model. n and
/// censoring_target accept a scalar or a list; beta and gamma default from
/// the specification. Unknown keys are rejected.
SimScenario parse_scenario(const std::string& yaml_text);
SimScenario load_scenario(const std::string& path);

double f1_transform(double x);

/// n x 10 equicorrelated (0.5) standard normals with column kTransformedCol
/// replaced by f1 of itself.
Eigen::MatrixXd gen_covariates(int n, std::mt19937_64& rng);
Eigen::MatrixXd gen_covariates(int n, std::uint64_t seed);

struct JointErrors {
  Eigen::VectorXd e1;
  Eigen::VectorXd e2;
};
JointErrors gen_joint_errors(int n, double rho, std::mt19937_64& rng);
JointErrors gen_joint_errors(int n, double rho, std::uint64_t seed);

Eigen::VectorXd treatment_index(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta);
Eigen::VectorXd gen_treatment(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta, const Eigen::VectorXd& e1);

/// Z'gamma with Z = (Y1, x3, x7, x8, x9, x10).
Eigen::VectorXd outcome_index(const Eigen::MatrixXd& x, const Eigen::VectorXd& y1, const Eigen::VectorXd& gamma);

/// AFT: log t = Z'gamma + e2. Cox: t = exp(Z'gamma) * -log(1 - Phi(e2)), a
/// unit-exponential baseline with log-hazard -Z'gamma, so gamma keeps its
/// "longer survival" sign.
Eigen::VectorXd gen_survival(const Eigen::MatrixXd& x, const Eigen::VectorXd& y1, const Eigen::VectorXd& gamma,
                             const Eigen::VectorXd& e2, SurvivalModel model = SurvivalModel::Aft);

struct CensoredTimes {
  Eigen::VectorXd time;
  Eigen::VectorXd event;  // 1 = observed death
  double c_max = 0.0;     // inf when uncensored
};

/// Upper limit of Uniform(0, c_max) censoring giving the target rate on
/// the supplied pilot sample of true times (bisection on c_max).
double calibrate_censoring(const Eigen::VectorXd& pilot_times, double target_rate);
CensoredTimes apply_censoring(const Eigen::VectorXd& true_time, double c_max, std::mt19937_64& rng);

struct Dichotomized {
  double cutoff = 0.0;
  Eigen::VectorXd y2;  // NaN = censored before the cutoff
  int n_missing = 0;
};
double empirical_cutoff(const Eigen::VectorXd& observed_time, double quantile);
Dichotomized dichotomize(const Eigen::VectorXd& time, const Eigen::VectorXd& event, double cutoff);

struct SimDataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y1;
  Eigen::VectorXd true_time;
  Eigen::VectorXd time;
  Eigen::VectorXd event;
  JointErrors errors;
  double c_max = 0.0;
  double realized_censoring = 0.0;
};

/// One replicate. The stream is derived from (scenario.seed, replicate, n
/// index, censoring index) so replicates are independent of run order.
SimDataset simulate(const SimScenario& s, int n, double c_max, std::uint64_t replicate, std::uint64_t cell = 0);

/// Pilot of 1e5 rows for the scenario DGP; returns c_max for the target.
double pilot_c_max(const SimScenario& s, double target_rate, int pilot_n = 100000);

struct OracleCurve {
  std::vector<double> quantiles;
  std::vector<double> cutoffs;
  std::vector<double> sate;
  std::vector<double> se;
};

/// Monte Carlo truth of P(T(1) > c) - P(T(0) > c) with both treatments
/// imposed, c at the empirical quantiles of observed times of the oracle
/// sample under the scenario censoring. The AFT case integrates e2 exactly.
OracleCurve true_sate_oracle(const SimScenario& s, const std::vector<double>& quantiles, int n_oracle,
                             double censoring_target = 0.0, std::uint64_t seed = 0);

}  // namespace copjoint
