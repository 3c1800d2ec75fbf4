#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "copjoint/joint_model.hpp"
#include "copjoint/simgen.hpp"

namespace copjoint {

/// Sim design matrices for the rows where y2 is observed. Treatment:
/// intercept + x1..x6; outcome: intercept, Y1, x3, x7..x10.
struct SimFitData {
  Eigen::MatrixXd x1;
  Eigen::MatrixXd x2;
  Eigen::VectorXd y1;
  Eigen::VectorXd y2;
  Eigen::VectorXd time;
  Eigen::VectorXd event;
  std::vector<int> rows;  // indices into the replicate
};
SimFitData sim_fit_data(const SimDataset& d, const Dichotomized& dich);

struct MethodSummary {
  double mean_bias = 0.0;
  double sd = 0.0;
  double rmse = 0.0;
  int n_ok = 0;
  int n_failed = 0;
};

struct Sim2Cell {
  int n = 0;
  double censoring_target = 0.0;
  double realized_censoring = 0.0;
  double cutoff_quantile = 0.0;
  double mean_missing = 0.0;
  MethodSummary one_stage;   // Cox on the rows with y2 observed, sign flipped
  MethodSummary two_stage;   // 2SPS, logistic
  MethodSummary copula;      // Gaussian probit-probit
};

struct Sim2Result {
  SimScenario scenario;
  double truth = 0.0;
  std::vector<double> c_max;  // per censoring target
  std::vector<Sim2Cell> cells;
  std::vector<std::string> warnings;
};

struct StudyOptions {
  int jobs = 1;
  int n_oracle = 1000000;
};

Sim2Result run_sim2(const SimScenario& s, const StudyOptions& opt = {});

struct Sim1Point {
  int n = 0;
  double censoring_target = 0.0;
  double quantile = 0.0;
  double mean_sate = 0.0;
  double lo = 0.0;   // 2.5% of replicate estimates
  double hi = 0.0;   // 97.5%
  double sd = 0.0;
  double oracle = 0.0;
  double oracle_se = 0.0;
  double mean_tau = 0.0;
  int n_ok = 0;
  int n_failed = 0;
};

/// Share of replicates with |z| > 1.96 per coefficient, at one cutoff.
struct SelectionRates {
  int n = 0;
  double censoring_target = 0.0;
  double quantile = 0.0;
  std::vector<std::string> names;
  std::vector<double> truth_nonzero;  // 1 if the DGP coefficient is nonzero
  std::vector<double> rate;
};

struct Sim1Result {
  SimScenario scenario;
  std::vector<Sim1Point> points;
  std::vector<SelectionRates> selection;
  std::vector<std::string> warnings;
};

Sim1Result run_sim1(const SimScenario& s, const StudyOptions& opt = {});

}  // namespace copjoint
