#pragma once

#include "plasso/cox_objective.hpp"

#include <optional>
#include <vector>

namespace plasso {

/// Curvature of the outer quadratic approximation. Diagonal is the weighted
/// least-squares working problem; Full uses the complete information matrix
/// in coefficient space. Auto picks Full for likelihoods whose Hessian in eta
/// is not diagonal, when the design has no intercept groups and at most
/// kFullCurvatureMaxColumns coefficients.
enum class Curvature { Auto, Diagonal, Full };
inline constexpr Index kFullCurvatureMaxColumns = 2000;

struct PenaltyConfig {
  double lambda = 0.0;
  double alpha = 0.5;
  int outer_max_iter = 100;
  int inner_max_iter = 2000;
  double tol_outer = 1e-5;   // relative objective change between outer iterations
  double tol_inner = 1e-7;   // max absolute coefficient change in a sweep
  double tol_kkt = 1e-6;     // KKT residual required before the outer loop stops
  double prox_step = 1.0;    // initial block step, in units of 1/L (L = block Lipschitz constant)
  int block_max_iter = 5000;
  Curvature curvature = Curvature::Auto;

  void validate() const;
};

/// Rows are the rows of the likelihood. Block k consists of column k of x and
/// columns [k*nz, (k+1)*nz) of w (= x_k * z elementwise).
struct PliableDesign {
  MatrixXd x;
  MatrixXd z;
  MatrixXd w;
  std::vector<bool> z_main;   // modifier main effect theta0_l is estimated (unpenalized)
  std::vector<int> group;     // per-row intercept group; empty when there are no intercepts
  int n_groups = 0;
  double n_scale = 1.0;       // loss is -loglik / n_scale

  static PliableDesign make(MatrixXd x, MatrixXd z, double n_scale);

  Index rows() const { return x.rows(); }
  Index p() const { return x.cols(); }
  Index nz() const { return z.cols(); }
};

struct PliableModel {
  VectorXd theta0;     // nz
  VectorXd beta;       // p
  MatrixXd theta;      // p x nz, row k is theta_k
  VectorXd intercept;  // one per intercept group
  double lambda = 0.0;
  double alpha = 0.0;

  int outer_iterations = 0;
  int inner_sweeps = 0;
  double objective = 0.0;
  double kkt_residual = 0.0;
  std::vector<double> objective_trace;
  bool converged = false;
  bool max_iterations = false;
  bool diverging = false;
  bool step_underflow = false;
  bool degenerate_column = false;

  static PliableModel zeros(Index p, Index nz, Index groups = 0);

  /// eta = Z theta0 + X beta + W vec(theta), plus intercepts when requested.
  VectorXd linear_predictor(const PliableDesign& design, bool with_intercept = true) const;
  bool hierarchy_holds() const;
  Index active_blocks() const;
  bool all_zero() const;
};

double soft_threshold(double v, double t);
VectorXd soft_threshold(const VectorXd& v, double t);

/// Smooth part of the working objective restricted to one block:
///   q(g) = g' G g / 2 - b' g,  G = A_k' diag(w) A_k / n,  b = A_k' r_(-k) / n,
/// with A_k = [x_k | W_k] and r_(-k) the weighted partial residual without block k.
struct BlockQuadratic {
  MatrixXd gram;
  VectorXd linear;

  double value(const VectorXd& gamma) const { return 0.5 * gamma.dot(gram * gamma) - linear.dot(gamma); }
  VectorXd gradient(const VectorXd& gamma) const { return gram * gamma - linear; }
};

/// (1-a) l (||(beta, theta)|| + ||theta||) + a l ||theta||_1 for one block.
double block_penalty(const VectorXd& gamma, double lambda, double alpha);

/// Exact optimality of (beta_k, theta_k) = 0 given b = A_k' r_(-k) / n:
///   |b_0| <= (1-a)l  and  ||S(b_w, a l)|| <= (1-a)l (1 + sqrt(1 - (b_0 / ((1-a)l))^2)).
bool screen_block_zero(const VectorXd& b, double lambda, double alpha);

/// The condition with the constant bound 2(1-a)l. It is implied by the exact
/// test and agrees with it only when b_0 = 0.
bool screen_block_zero_loose(const VectorXd& b, double lambda, double alpha);

struct BetaOnlyResult {
  double beta = 0.0;
  bool theta_zero = false;  // (beta, 0) is the block minimizer
  bool degenerate = false;  // weighted column norm of x_k is zero
};

BetaOnlyResult solve_beta_only(const BlockQuadratic& block, double lambda, double alpha);

/// prox of t * block_penalty: l1 shrink of theta, group shrink of theta, group
/// shrink of (beta, theta).
VectorXd prox_block_penalty(const VectorXd& v, double t, double lambda, double alpha);

struct ProxStepResult {
  VectorXd gamma;
  double step = 0.0;
  bool underflow = false;
};

/// One proximal-gradient step from gamma0 with step halving from t until the
/// composite decrease condition holds.
ProxStepResult prox_block_update(const BlockQuadratic& block, const VectorXd& gamma0, double t,
                                 double lambda, double alpha);

/// Minimizes q + block_penalty by accelerated proximal gradient with restarts.
ProxStepResult solve_block(const BlockQuadratic& block, const VectorXd& gamma0, double lambda,
                           double alpha, const PenaltyConfig& config);

/// Distance from -grad to the subdifferential of block_penalty at gamma, where
/// grad is the gradient of the smooth loss with respect to (beta_k, theta_k).
double block_kkt_residual(const VectorXd& gamma, const VectorXd& grad, double lambda, double alpha);

double penalty_value(const PliableModel& model, double lambda, double alpha);
double objective_value(const PliableDesign& design, const Likelihood& lik, const PliableModel& model,
                       double lambda, double alpha);

/// Largest block/unpenalized KKT residual of the penalized objective
/// -loglik/n_scale + penalty at model.
double kkt_residual(const PliableDesign& design, const Likelihood& lik, const PliableModel& model,
                    double lambda, double alpha);
double kkt_residual(const PliableDesign& design, const PliableModel& model, const VectorXd& loglik_grad,
                    double lambda, double alpha);

/// Outer loop: quadratic approximation at the current eta; inner loop:
/// cyclic theta0 / intercept / block updates with zero and beta-only screens.
/// Outer steps are damped so the penalized objective never increases.
PliableModel fit(const PliableDesign& design, const Likelihood& lik, const PenaltyConfig& config,
                 const PliableModel* init = nullptr);

/// Unpenalized fit of theta0 and intercepts with every block held at zero.
PliableModel fit_null(const PliableDesign& design, const Likelihood& lik, const PenaltyConfig& config);

}  // namespace plasso
