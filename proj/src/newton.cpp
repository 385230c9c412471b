#include "plasso/newton.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace plasso {

NewtonResult fit_newton(const Likelihood& lik, const MatrixXd& a, const VectorXd* offset, double tol,
                        int max_iter) {
  const Index q = a.cols();
  NewtonResult res;
  res.coef = VectorXd::Zero(q);
  const VectorXd base = offset ? *offset : VectorXd::Zero(a.rows());
  VectorXd eta = base;
  res.loglik = lik.loglik(eta);
  if (q == 0) {
    res.converged = true;
    return res;
  }
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it + 1;
    const VectorXd score = a.transpose() * lik.derivatives(eta).grad;
    MatrixXd info = lik.information(eta, a);
    info.diagonal().array() += 1e-12 * std::max(1.0, info.diagonal().maxCoeff());
    const VectorXd step = info.ldlt().solve(score);
    double s = 1.0;
    VectorXd coef = res.coef + step;
    VectorXd eta_new = base + a * coef;
    double l_new = lik.loglik(eta_new);
    while (!(l_new >= res.loglik - 1e-12 * std::abs(res.loglik)) && s > 1e-8) {
      s *= 0.5;
      coef = res.coef + s * step;
      eta_new = base + a * coef;
      l_new = lik.loglik(eta_new);
    }
    const double change = (coef - res.coef).lpNorm<Eigen::Infinity>();
    res.coef = std::move(coef);
    eta = std::move(eta_new);
    res.loglik = l_new;
    if (change < tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace plasso
