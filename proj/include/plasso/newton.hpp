#pragma once

#include "plasso/cox_objective.hpp"

namespace plasso {

struct NewtonResult {
  VectorXd coef;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Unpenalized maximum likelihood for eta = offset + A coef by damped
/// Newton-Raphson on the full information matrix.
NewtonResult fit_newton(const Likelihood& lik, const MatrixXd& a, const VectorXd* offset = nullptr,
                        double tol = 1e-10, int max_iter = 100);

}  // namespace plasso
