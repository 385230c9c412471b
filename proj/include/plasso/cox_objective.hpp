#pragma once

#include "plasso/survival.hpp"

#include <vector>

namespace plasso {

/// Gradient and diagonal Hessian of a log-likelihood with respect to the
/// linear predictor. hess_diag is nonpositive.
struct QuadraticApprox {
  VectorXd grad;
  VectorXd hess_diag;
};

/// Weighted least-squares surrogate: maximizing the second-order expansion of
/// l at eta is minimizing sum_j weight_j (response_j - eta_j)^2 / 2.
struct WorkingProblem {
  VectorXd weight;
  VectorXd response;
};

/// Entries with (numerically) zero curvature get weight 0 and response eta.
WorkingProblem working_problem(const QuadraticApprox& approx, const VectorXd& eta);

/// Log-likelihood in the linear predictor eta, the object the pliable solver
/// maximizes through repeated quadratic approximations.
class Likelihood {
 public:
  virtual ~Likelihood() = default;

  virtual Index rows() const = 0;
  virtual double loglik(const VectorXd& eta) const = 0;
  virtual QuadraticApprox derivatives(const VectorXd& eta) const = 0;
  /// A^T (-d2 l / d eta2) A with the full (not diagonal) Hessian.
  virtual MatrixXd information(const VectorXd& eta, const MatrixXd& a) const = 0;
  /// True when d2 l / d eta2 is diagonal.
  virtual bool separable() const { return false; }
};

/// Weighted Cox partial likelihood with the Breslow convention for ties:
///   l = sum_i [ sum_{j in D_i} w_j eta_j - d_i log sum_{j in R_i} w_j exp(eta_j) ].
class CoxLikelihood final : public Likelihood {
 public:
  CoxLikelihood(RiskSetIndex index, VectorXd weight);

  Index rows() const override { return weight_.size(); }
  double loglik(const VectorXd& eta) const override;
  QuadraticApprox derivatives(const VectorXd& eta) const override;
  MatrixXd information(const VectorXd& eta, const MatrixXd& a) const override;

  const RiskSetIndex& index() const { return index_; }
  const VectorXd& weight() const { return weight_; }

  /// log sum_{j in R_i} w_j exp(eta_j) for every failure time, each computed
  /// with its own max shift.
  std::vector<double> log_risk_sums(const VectorXd& eta) const;

 private:
  RiskSetIndex index_;
  VectorXd weight_;
  VectorXd failed_;
};

double partial_loglik(const VectorXd& eta, const RiskSetIndex& index, const VectorXd& weight);
QuadraticApprox derivatives(const VectorXd& eta, const RiskSetIndex& index, const VectorXd& weight);

}  // namespace plasso
