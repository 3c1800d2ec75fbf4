#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace copjoint {

struct TrustRegionOptions {
  int max_iter = 200;
  double grad_tol = 1e-6;      // on the projected gradient, infinity norm
  double rel_tol = 1e-9;       // relative objective change
  double initial_radius = 1.0;
  double max_radius = 100.0;
  double accept_ratio = 1e-4;  // minimum actual/predicted reduction to accept
  Eigen::VectorXd lower;       // optional box; empty = unbounded
  Eigen::VectorXd upper;
};

struct TrustRegionResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;     // at x
  int iterations = 0;
  bool converged = false;
  double projected_grad_norm = 0.0;
  std::vector<double> accepted_values;  // objective after each accepted step
  std::vector<int> at_bound;            // indices pinned to the box at x
};

/// Minimizes a smooth objective by trust-region Newton with an exact
/// eigen-decomposition subproblem solve (handles indefinite Hessians) and
/// projection onto an optional box.
class TrustRegionNewton {
 public:
  using Objective = std::function<double(const Eigen::VectorXd&)>;
  using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using Hessian = std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

  TrustRegionNewton(Objective f, Gradient g, Hessian h) : f_(std::move(f)), g_(std::move(g)), h_(std::move(h)) {}

  TrustRegionResult minimize(Eigen::VectorXd x0, const TrustRegionOptions& opt) const;

 private:
  Objective f_;
  Gradient g_;
  Hessian h_;
};

/// Solves min_s g's + s'Bs/2 subject to ||s|| <= radius.
Eigen::VectorXd trust_region_step(const Eigen::VectorXd& g, const Eigen::MatrixXd& b, double radius);

/// Central finite-difference Jacobian of a gradient function, symmetrized.
Eigen::MatrixXd fd_hessian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                           const Eigen::VectorXd& x, double rel_step = 1e-5);

}  // namespace copjoint
