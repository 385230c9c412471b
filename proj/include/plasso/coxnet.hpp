#pragma once

#include "plasso/solver.hpp"

#include <vector>

namespace plasso {

/// Elastic-net penalized Cox regression by coordinate descent on the
/// quadratic approximation: minimizes
///   -l(beta) / n + lambda sum_k (alpha |beta_k| + (1 - alpha) beta_k^2 / 2).
struct CoxnetConfig {
  double alpha = 1.0;
  double tol = 1e-8;  // max coefficient change (scaled by sqrt of the curvature)
  int outer_max_iter = 100;
  int inner_max_iter = 10000;
  Curvature curvature = Curvature::Auto;
};

struct CoxnetFit {
  VectorXd beta;
  double lambda = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

CoxnetFit fit_coxnet(const MatrixXd& x, const Likelihood& lik, double n_scale, double lambda,
                     const CoxnetConfig& config, const VectorXd* init = nullptr);

/// Smallest lambda with beta = 0: max_k |x_k' l'(0)| / (n alpha).
double coxnet_lambda_max(const MatrixXd& x, const Likelihood& lik, double n_scale, double alpha);

/// Warm-started fits along `lambdas`.
std::vector<CoxnetFit> coxnet_path(const MatrixXd& x, const Likelihood& lik, double n_scale,
                                   const std::vector<double>& lambdas, const CoxnetConfig& config);

}  // namespace plasso
