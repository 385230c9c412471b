#include "plasso/coxnet.hpp"

#include "plasso/error.hpp"
#include "plasso/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace plasso {

namespace {

double penalty(const VectorXd& beta, double lambda, double alpha) {
  return lambda * (alpha * beta.lpNorm<1>() + 0.5 * (1 - alpha) * beta.squaredNorm());
}

}  // namespace

CoxnetFit fit_coxnet(const MatrixXd& x, const Likelihood& lik, double n_scale, double lambda,
                     const CoxnetConfig& config, const VectorXd* init) {
  if (!(config.alpha > 0.0 && config.alpha <= 1.0)) throw Error(Errc::InvalidArgument, "coxnet alpha must lie in (0, 1]");
  if (!(lambda >= 0.0)) throw Error(Errc::InvalidArgument, "lambda must be nonnegative");
  if (lik.rows() != x.rows()) throw Error(Errc::DimensionMismatch, "likelihood and design row counts differ");
  const Index p = x.cols();
  CoxnetFit out;
  out.lambda = lambda;
  out.beta = init ? *init : VectorXd::Zero(p);
  VectorXd eta = x * out.beta;
  double f = -lik.loglik(eta) / n_scale + penalty(out.beta, lambda, config.alpha);
  const double l1 = lambda * config.alpha;
  const double l2 = lambda * (1 - config.alpha);

  const bool full = config.curvature == Curvature::Full ||
                    (config.curvature == Curvature::Auto && !lik.separable() && p <= kFullCurvatureMaxColumns);

  for (int outer = 0; outer < config.outer_max_iter; ++outer) {
    out.iterations = outer + 1;
    const QuadraticApprox q = lik.derivatives(eta);
    VectorXd target = out.beta;
    VectorXd curv(p);
    std::function<double(bool)> sweep;
    // Diagonal working weights keep the residual e in eta space; the full
    // information keeps rho = x' grad / n - Q (target - beta) in coefficient space.
    WorkingProblem wp;
    VectorXd e;
    MatrixXd info;
    VectorXd rho;
    if (full) {
      info = lik.information(eta, x) / n_scale;
      rho = x.transpose() * q.grad / n_scale;
      curv = info.diagonal();
      sweep = [&](bool all) {
        double change = 0.0;
        for (Index k = 0; k < p; ++k) {
          if (!all && target(k) == 0.0) continue;
          if (curv(k) + l2 <= 0.0) continue;
          const double g = rho(k) + curv(k) * target(k);
          const double delta = soft_threshold(g, l1) / (curv(k) + l2) - target(k);
          if (delta == 0.0) continue;
          rho.noalias() -= delta * info.col(k);
          target(k) += delta;
          change = std::max(change, std::abs(delta) * std::sqrt(curv(k)));
        }
        return change;
      };
    } else {
      wp = working_problem(q, eta);
      e = wp.response - eta;
      for (Index k = 0; k < p; ++k) curv(k) = x.col(k).cwiseAbs2().dot(wp.weight) / n_scale;
      sweep = [&](bool all) {
        double change = 0.0;
        for (Index k = 0; k < p; ++k) {
          if (!all && target(k) == 0.0) continue;
          if (curv(k) + l2 <= 0.0) continue;
          const double g = x.col(k).dot(wp.weight.cwiseProduct(e)) / n_scale + curv(k) * target(k);
          const double delta = soft_threshold(g, l1) / (curv(k) + l2) - target(k);
          if (delta == 0.0) continue;
          e.noalias() -= delta * x.col(k);
          target(k) += delta;
          change = std::max(change, std::abs(delta) * std::sqrt(curv(k)));
        }
        return change;
      };
    }
    for (int it = 0; it < config.inner_max_iter;) {
      double change = sweep(true);
      ++it;
      if (change < config.tol) break;
      while (it < config.inner_max_iter && change >= config.tol) {
        change = sweep(false);
        ++it;
      }
    }

    // Damped step on the true objective.
    const VectorXd eta_target = x * target;
    double s = 1.0;
    VectorXd cand = target;
    VectorXd eta_cand = eta_target;
    double f_cand = -lik.loglik(eta_cand) / n_scale + penalty(cand, lambda, config.alpha);
    const double slack = 1e-13 * std::max(1.0, std::abs(f));
    while (!(f_cand <= f + slack) && s > 1e-10) {
      s *= 0.5;
      cand = out.beta + s * (target - out.beta);
      eta_cand = eta + s * (eta_target - eta);
      f_cand = -lik.loglik(eta_cand) / n_scale + penalty(cand, lambda, config.alpha);
    }
    if (!(f_cand <= f + slack)) {
      out.converged = true;
      break;
    }
    const double move = (cand - out.beta).lpNorm<Eigen::Infinity>();
    const double rel = std::abs(f - f_cand) / std::max(1.0, std::abs(f_cand));
    out.beta = cand;
    eta = eta_cand;
    f = f_cand;
    if (move < config.tol || rel < 1e-12) {
      out.converged = true;
      break;
    }
  }
  out.objective = f;
  return out;
}

double coxnet_lambda_max(const MatrixXd& x, const Likelihood& lik, double n_scale, double alpha) {
  const VectorXd g = lik.derivatives(VectorXd::Zero(x.rows())).grad;
  return (x.transpose() * g).cwiseAbs().maxCoeff() / (n_scale * alpha);
}

std::vector<CoxnetFit> coxnet_path(const MatrixXd& x, const Likelihood& lik, double n_scale,
                                   const std::vector<double>& lambdas, const CoxnetConfig& config) {
  std::vector<CoxnetFit> out;
  VectorXd warm = VectorXd::Zero(x.cols());
  for (double lam : lambdas) {
    out.push_back(fit_coxnet(x, lik, n_scale, lam, config, &warm));
    warm = out.back().beta;
  }
  return out;
}

}  // namespace plasso
