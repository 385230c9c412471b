#include "plasso/solver.hpp"

#include "plasso/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace plasso {

void PenaltyConfig::validate() const {
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw Error(Errc::InvalidArgument, "lambda must be finite and >= 0");
  if (!(alpha >= 0 && alpha <= 1)) throw Error(Errc::InvalidArgument, "alpha must lie in [0, 1]");
  if (outer_max_iter < 1 || inner_max_iter < 1 || block_max_iter < 1)
    throw Error(Errc::InvalidArgument, "iteration limits must be positive");
  if (!(tol_outer > 0 && tol_inner > 0 && tol_kkt > 0)) throw Error(Errc::InvalidArgument, "tolerances must be positive");
  if (!(prox_step > 0)) throw Error(Errc::InvalidArgument, "prox_step must be positive");
}

PliableDesign PliableDesign::make(MatrixXd x, MatrixXd z, double n_scale) {
  PliableDesign d;
  d.w = build_interactions(x, z);
  d.x = std::move(x);
  d.z = std::move(z);
  d.z_main.assign(static_cast<std::size_t>(d.z.cols()), true);
  d.n_scale = n_scale;
  return d;
}

PliableModel PliableModel::zeros(Index p, Index nz, Index groups) {
  PliableModel m;
  m.theta0 = VectorXd::Zero(nz);
  m.beta = VectorXd::Zero(p);
  m.theta = MatrixXd::Zero(p, nz);
  m.intercept = VectorXd::Zero(groups);
  return m;
}

VectorXd PliableModel::linear_predictor(const PliableDesign& design, bool with_intercept) const {
  VectorXd eta = design.x * beta;
  if (design.nz() > 0) {
    eta.noalias() += design.z * theta0;
    const Index nz = design.nz();
    for (Index k = 0; k < design.p(); ++k) {
      if (theta.row(k).isZero(0.0)) continue;
      eta.noalias() += design.w.middleCols(k * nz, nz) * theta.row(k).transpose();
    }
  }
  if (with_intercept && !design.group.empty())
    for (Index j = 0; j < eta.size(); ++j) eta(j) += intercept(design.group[static_cast<std::size_t>(j)]);
  return eta;
}

bool PliableModel::hierarchy_holds() const {
  for (Index k = 0; k < beta.size(); ++k)
    if (!theta.row(k).isZero(0.0) && beta(k) == 0.0) return false;
  return true;
}

Index PliableModel::active_blocks() const {
  Index count = 0;
  for (Index k = 0; k < beta.size(); ++k)
    if (beta(k) != 0.0 || !theta.row(k).isZero(0.0)) ++count;
  return count;
}

bool PliableModel::all_zero() const { return beta.isZero(0.0) && theta.isZero(0.0); }

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

VectorXd soft_threshold(const VectorXd& v, double t) {
  return v.unaryExpr([t](double x) { return soft_threshold(x, t); });
}

double block_penalty(const VectorXd& gamma, double lambda, double alpha) {
  const auto theta = gamma.tail(gamma.size() - 1);
  return lambda * ((1 - alpha) * (gamma.norm() + theta.norm()) + alpha * theta.lpNorm<1>());
}

bool screen_block_zero(const VectorXd& b, double lambda, double alpha) {
  const double group = (1 - alpha) * lambda;
  const double b0 = std::abs(b(0));
  if (b0 > group) return false;
  const double shrunk = soft_threshold(VectorXd(b.tail(b.size() - 1)), alpha * lambda).norm();
  if (group == 0.0) return shrunk == 0.0;
  const double u = b0 / group;
  return shrunk <= group * (1.0 + std::sqrt(std::max(0.0, 1.0 - u * u)));
}

bool screen_block_zero_loose(const VectorXd& b, double lambda, double alpha) {
  const double group = (1 - alpha) * lambda;
  return std::abs(b(0)) <= group &&
         soft_threshold(VectorXd(b.tail(b.size() - 1)), alpha * lambda).norm() <= 2 * group;
}

BetaOnlyResult solve_beta_only(const BlockQuadratic& block, double lambda, double alpha) {
  BetaOnlyResult res;
  const double xx = block.gram(0, 0);
  if (!(xx > 0)) {
    res.degenerate = true;
    return res;
  }
  const double group = (1 - alpha) * lambda;
  res.beta = soft_threshold(block.linear(0), group) / xx;
  if (res.beta == 0.0) return res;
  const Index nz = block.linear.size() - 1;
  if (nz == 0) {
    res.theta_zero = true;
    return res;
  }
  const VectorXd gw = block.linear.tail(nz) - block.gram.col(0).tail(nz) * res.beta;
  res.theta_zero = soft_threshold(gw, alpha * lambda).norm() <= group;
  return res;
}

VectorXd prox_block_penalty(const VectorXd& v, double t, double lambda, double alpha) {
  VectorXd out = v;
  const Index nz = v.size() - 1;
  if (nz > 0) {
    auto theta = out.tail(nz);
    theta = soft_threshold(VectorXd(theta), t * alpha * lambda);
    const double tn = theta.norm();
    const double shrink = t * (1 - alpha) * lambda;
    if (tn <= shrink) theta.setZero();
    else theta *= 1.0 - shrink / tn;
  }
  const double gn = out.norm();
  const double shrink = t * (1 - alpha) * lambda;
  if (gn <= shrink) out.setZero();
  else out *= 1.0 - shrink / gn;
  return out;
}

ProxStepResult prox_block_update(const BlockQuadratic& block, const VectorXd& gamma0, double t,
                                 double lambda, double alpha) {
  const VectorXd grad = block.gradient(gamma0);
  const double q0 = 0.5 * gamma0.dot(grad - block.linear);
  while (t >= 1e-14) {
    VectorXd cand = prox_block_penalty(gamma0 - t * grad, t, lambda, alpha);
    const VectorXd diff = cand - gamma0;
    const double bound = q0 + grad.dot(diff) + diff.squaredNorm() / (2 * t);
    if (block.value(cand) <= bound + 1e-15 * std::max(1.0, std::abs(bound))) return {std::move(cand), t, false};
    t *= 0.5;
  }
  return {gamma0, t, true};
}

ProxStepResult solve_block(const BlockQuadratic& block, const VectorXd& gamma0, double lambda, double alpha,
                           const PenaltyConfig& config) {
  const double lip = block.gram.rows() == 1
                         ? block.gram(0, 0)
                         : Eigen::SelfAdjointEigenSolver<MatrixXd>(block.gram, Eigen::EigenvaluesOnly)
                               .eigenvalues()
                               .maxCoeff();
  if (!(lip > 0)) return {gamma0, 0.0, false};
  double t = config.prox_step / lip;
  VectorXd x = gamma0;
  VectorXd y = gamma0;
  double momentum = 1.0;
  ProxStepResult res{gamma0, t, false};
  const double block_tol = std::max(1e-13, 1e-2 * config.tol_inner) * std::max(1.0, gamma0.lpNorm<Eigen::Infinity>());
  for (int it = 0; it < config.block_max_iter; ++it) {
    auto step = prox_block_update(block, y, t, lambda, alpha);
    if (step.underflow) {
      res.underflow = true;
      break;
    }
    t = step.step;
    const VectorXd change = step.gamma - x;
    const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    // Restart acceleration whenever the step opposes the momentum direction.
    if ((y - step.gamma).dot(change) > 0) {
      momentum = 1.0;
      y = step.gamma;
    } else {
      y = step.gamma + ((momentum - 1.0) / next) * change;
      momentum = next;
    }
    x = std::move(step.gamma);
    if (change.lpNorm<Eigen::Infinity>() <= block_tol) break;
  }
  // Accelerated iterates are not monotone; never return a point worse than the start.
  if (block.value(x) + block_penalty(x, lambda, alpha) > block.value(gamma0) + block_penalty(gamma0, lambda, alpha))
    x = gamma0;
  res.gamma = std::move(x);
  res.step = t;
  return res;
}

double block_kkt_residual(const VectorXd& gamma, const VectorXd& grad, double lambda, double alpha) {
  const double group = (1 - alpha) * lambda;
  const double l1 = alpha * lambda;
  const Index nz = gamma.size() - 1;
  const double gamma_norm = gamma.norm();
  if (gamma_norm == 0.0) {
    const double v0 = std::max(0.0, std::abs(grad(0)) - group);
    const double shrunk = soft_threshold(VectorXd(grad.tail(nz)), l1).norm();
    double bound = 0.0;
    if (group > 0) {
      const double u = std::min(1.0, std::abs(grad(0)) / group);
      bound = group * (1.0 + std::sqrt(1.0 - u * u));
    }
    return std::hypot(v0, std::max(0.0, shrunk - bound));
  }
  const auto theta = gamma.tail(nz);
  const double theta_norm = theta.norm();
  double sq = 0.0;
  const double r0 = grad(0) + group * gamma(0) / gamma_norm;
  sq += r0 * r0;
  if (theta_norm == 0.0) {
    const double excess = std::max(0.0, soft_threshold(VectorXd(grad.tail(nz)), l1).norm() - group);
    sq += excess * excess;
  } else {
    for (Index l = 0; l < nz; ++l) {
      const double th = theta(l);
      const double g = grad(1 + l);
      double r;
      if (th != 0.0) r = g + group * (th / gamma_norm + th / theta_norm) + l1 * (th > 0 ? 1.0 : -1.0);
      else r = std::max(0.0, std::abs(g) - l1);
      sq += r * r;
    }
  }
  return std::sqrt(sq);
}

double penalty_value(const PliableModel& model, double lambda, double alpha) {
  double pen = 0.0;
  const Index nz = model.theta.cols();
  VectorXd gamma(1 + nz);
  for (Index k = 0; k < model.beta.size(); ++k) {
    gamma(0) = model.beta(k);
    gamma.tail(nz) = model.theta.row(k).transpose();
    pen += block_penalty(gamma, lambda, alpha);
  }
  return pen;
}

double objective_value(const PliableDesign& design, const Likelihood& lik, const PliableModel& model,
                       double lambda, double alpha) {
  return -lik.loglik(model.linear_predictor(design)) / design.n_scale + penalty_value(model, lambda, alpha);
}

namespace {

double unpenalized_residual(const PliableDesign& design, const VectorXd& loglik_grad) {
  const double inv_n = 1.0 / design.n_scale;
  double worst = 0.0;
  for (Index l = 0; l < design.nz(); ++l)
    if (design.z_main[static_cast<std::size_t>(l)])
      worst = std::max(worst, std::abs(design.z.col(l).dot(loglik_grad)) * inv_n);
  if (!design.group.empty()) {
    VectorXd sums = VectorXd::Zero(design.n_groups);
    for (Index j = 0; j < loglik_grad.size(); ++j) sums(design.group[static_cast<std::size_t>(j)]) += loglik_grad(j);
    if (sums.size() > 0) worst = std::max(worst, sums.cwiseAbs().maxCoeff() * inv_n);
  }
  return worst;
}

}  // namespace

double kkt_residual(const PliableDesign& design, const PliableModel& model, const VectorXd& loglik_grad,
                    double lambda, double alpha) {
  const double inv_n = 1.0 / design.n_scale;
  const Index nz = design.nz();
  double worst = unpenalized_residual(design, loglik_grad);
  VectorXd gamma(1 + nz);
  VectorXd grad(1 + nz);
  for (Index k = 0; k < design.p(); ++k) {
    gamma(0) = model.beta(k);
    gamma.tail(nz) = model.theta.row(k).transpose();
    grad(0) = -design.x.col(k).dot(loglik_grad) * inv_n;
    if (nz > 0) grad.tail(nz) = -(design.w.middleCols(k * nz, nz).transpose() * loglik_grad) * inv_n;
    worst = std::max(worst, block_kkt_residual(gamma, grad, lambda, alpha));
  }
  return worst;
}

double kkt_residual(const PliableDesign& design, const Likelihood& lik, const PliableModel& model,
                    double lambda, double alpha) {
  return kkt_residual(design, model, lik.derivatives(model.linear_predictor(design)).grad, lambda, alpha);
}

namespace {

// Penalized weighted least squares for fixed working weights, solved in place
// by cyclic coordinate descent over theta0, intercepts and blocks.
class InnerSolver {
 public:
  InnerSolver(const PliableDesign& d, const PenaltyConfig& cfg, const VectorXd& weight, VectorXd residual,
              bool freeze_blocks)
      : d_(d), cfg_(cfg), w_(weight), e_(std::move(residual)), freeze_(freeze_blocks),
        inv_n_(1.0 / d.n_scale), nz_(d.nz()) {
    for (Index l = 0; l < nz_; ++l)
      if (d_.z_main[static_cast<std::size_t>(l)]) main_.push_back(l);
    if (!main_.empty()) {
      const auto m = static_cast<Index>(main_.size());
      zm_.resize(d_.rows(), m);
      for (Index c = 0; c < m; ++c) zm_.col(c) = d_.z.col(main_[static_cast<std::size_t>(c)]);
      MatrixXd gram = zm_.transpose() * w_.asDiagonal() * zm_ * inv_n_;
      const double ridge = 1e-8 * std::max(gram.trace() / static_cast<double>(m), 1e-300);
      gram.diagonal().array() += ridge;
      z_solver_.compute(gram);
    }
    if (!d_.group.empty()) {
      group_weight_ = VectorXd::Zero(d_.n_groups);
      for (Index j = 0; j < d_.rows(); ++j) group_weight_(d_.group[static_cast<std::size_t>(j)]) += w_(j);
    }
    grams_.resize(static_cast<std::size_t>(d_.p()));
    gram_ready_.assign(static_cast<std::size_t>(d_.p()), false);
  }

  int run(PliableModel& model, double tol) {
    int sweeps = 0;
    while (sweeps < cfg_.inner_max_iter) {
      double change = sweep(model, true);
      ++sweeps;
      if (change < tol) break;
      while (sweeps < cfg_.inner_max_iter) {
        change = sweep(model, false);
        ++sweeps;
        if (change < tol) break;
      }
    }
    return sweeps;
  }

  bool step_underflow = false;
  bool degenerate = false;

 private:
  double sweep(PliableModel& model, bool full) {
    double change = 0.0;
    change = std::max(change, update_theta0(model));
    change = std::max(change, update_intercepts(model));
    if (freeze_) return change;
    for (Index k = 0; k < d_.p(); ++k) {
      if (!full && model.beta(k) == 0.0 && model.theta.row(k).isZero(0.0)) continue;
      change = std::max(change, update_block(model, k));
    }
    return change;
  }

  double update_theta0(PliableModel& model) {
    if (main_.empty()) return 0.0;
    const VectorXd rhs = zm_.transpose() * w_.cwiseProduct(e_) * inv_n_;
    const VectorXd delta = z_solver_.solve(rhs);
    e_.noalias() -= zm_ * delta;
    for (std::size_t c = 0; c < main_.size(); ++c) model.theta0(main_[c]) += delta(static_cast<Index>(c));
    return delta.lpNorm<Eigen::Infinity>();
  }

  double update_intercepts(PliableModel& model) {
    if (d_.group.empty()) return 0.0;
    VectorXd sums = VectorXd::Zero(d_.n_groups);
    for (Index j = 0; j < d_.rows(); ++j) sums(d_.group[static_cast<std::size_t>(j)]) += w_(j) * e_(j);
    VectorXd delta = VectorXd::Zero(d_.n_groups);
    for (Index g = 0; g < d_.n_groups; ++g)
      if (group_weight_(g) > 0) delta(g) = sums(g) / group_weight_(g);
    for (Index j = 0; j < d_.rows(); ++j) e_(j) -= delta(d_.group[static_cast<std::size_t>(j)]);
    model.intercept += delta;
    return d_.n_groups > 0 ? delta.lpNorm<Eigen::Infinity>() : 0.0;
  }

  const MatrixXd& gram(Index k) {
    auto& g = grams_[static_cast<std::size_t>(k)];
    if (!gram_ready_[static_cast<std::size_t>(k)]) {
      g.resize(1 + nz_, 1 + nz_);
      const VectorXd wx = w_.cwiseProduct(d_.x.col(k));
      g(0, 0) = d_.x.col(k).dot(wx) * inv_n_;
      if (nz_ > 0) {
        const auto wk = d_.w.middleCols(k * nz_, nz_);
        const VectorXd cross = wk.transpose() * wx * inv_n_;
        g.block(1, 0, nz_, 1) = cross;
        g.block(0, 1, 1, nz_) = cross.transpose();
        g.block(1, 1, nz_, nz_).noalias() = wk.transpose() * w_.asDiagonal() * wk * inv_n_;
      }
      gram_ready_[static_cast<std::size_t>(k)] = true;
    }
    return g;
  }

  double update_block(PliableModel& model, Index k) {
    const VectorXd r = w_.cwiseProduct(e_);
    VectorXd gamma(1 + nz_);
    gamma(0) = model.beta(k);
    gamma.tail(nz_) = model.theta.row(k).transpose();

    BlockQuadratic block;
    block.gram = gram(k);
    block.linear.resize(1 + nz_);
    block.linear(0) = d_.x.col(k).dot(r) * inv_n_;
    if (nz_ > 0) block.linear.tail(nz_) = d_.w.middleCols(k * nz_, nz_).transpose() * r * inv_n_;
    block.linear.noalias() += block.gram * gamma;

    VectorXd next = VectorXd::Zero(1 + nz_);
    if (!screen_block_zero(block.linear, cfg_.lambda, cfg_.alpha)) {
      const auto beta_only = solve_beta_only(block, cfg_.lambda, cfg_.alpha);
      if (beta_only.degenerate) {
        degenerate = true;
        return 0.0;
      }
      if (beta_only.theta_zero) {
        next(0) = beta_only.beta;
      } else {
        VectorXd start = gamma;
        if (start.isZero(0.0)) start(0) = beta_only.beta;
        auto solved = solve_block(block, start, cfg_.lambda, cfg_.alpha, cfg_);
        step_underflow = step_underflow || solved.underflow;
        next = std::move(solved.gamma);
      }
    }

    const VectorXd delta = next - gamma;
    const double change = delta.lpNorm<Eigen::Infinity>();
    if (change == 0.0) return 0.0;
    e_.noalias() -= d_.x.col(k) * delta(0);
    if (nz_ > 0) e_.noalias() -= d_.w.middleCols(k * nz_, nz_) * delta.tail(nz_);
    model.beta(k) = next(0);
    model.theta.row(k) = next.tail(nz_).transpose();
    return change;
  }

  const PliableDesign& d_;
  const PenaltyConfig& cfg_;
  const VectorXd& w_;
  VectorXd e_;
  bool freeze_;
  double inv_n_;
  Index nz_;
  std::vector<Index> main_;
  MatrixXd zm_;
  Eigen::LDLT<MatrixXd> z_solver_;
  VectorXd group_weight_;
  std::vector<MatrixXd> grams_;
  std::vector<bool> gram_ready_;
};

// Coefficient columns [z mains | x_1, W_1 | ... | x_p, W_p] of the design.
MatrixXd coefficient_columns(const PliableDesign& d, const std::vector<Index>& mains) {
  const Index nz = d.nz();
  const auto m = static_cast<Index>(mains.size());
  MatrixXd a(d.rows(), m + d.p() * (1 + nz));
  for (Index c = 0; c < m; ++c) a.col(c) = d.z.col(mains[static_cast<std::size_t>(c)]);
  for (Index k = 0; k < d.p(); ++k) {
    a.col(m + k * (1 + nz)) = d.x.col(k);
    if (nz > 0) a.middleCols(m + k * (1 + nz) + 1, nz) = d.w.middleCols(k * nz, nz);
  }
  return a;
}

// The same coordinate descent on the quadratic c' delta - delta' Q delta / 2
// in the coefficient change delta, where Q is the full information. The
// residual rho = c - Q delta takes the role of the weighted eta residual.
class DenseInnerSolver {
 public:
  DenseInnerSolver(const PliableDesign& d, const PenaltyConfig& cfg, const std::vector<Index>& mains, MatrixXd q,
                   VectorXd c, bool freeze_blocks)
      : d_(d), cfg_(cfg), q_(std::move(q)), rho_(std::move(c)), freeze_(freeze_blocks), nz_(d.nz()),
        m_(static_cast<Index>(mains.size())), main_(mains) {
    if (m_ > 0) {
      MatrixXd gram = q_.topLeftCorner(m_, m_);
      const double ridge = 1e-8 * std::max(gram.trace() / static_cast<double>(m_), 1e-300);
      gram.diagonal().array() += ridge;
      z_solver_.compute(gram);
    }
  }

  int run(PliableModel& model, double tol) {
    int sweeps = 0;
    while (sweeps < cfg_.inner_max_iter) {
      double change = sweep(model, true);
      ++sweeps;
      if (change < tol) break;
      while (sweeps < cfg_.inner_max_iter) {
        change = sweep(model, false);
        ++sweeps;
        if (change < tol) break;
      }
    }
    return sweeps;
  }

  bool step_underflow = false;

 private:
  double sweep(PliableModel& model, bool full) {
    double change = update_theta0(model);
    if (freeze_) return change;
    for (Index k = 0; k < d_.p(); ++k) {
      if (!full && model.beta(k) == 0.0 && model.theta.row(k).isZero(0.0)) continue;
      change = std::max(change, update_block(model, k));
    }
    return change;
  }

  double update_theta0(PliableModel& model) {
    if (m_ == 0) return 0.0;
    const VectorXd delta = z_solver_.solve(rho_.head(m_));
    rho_.noalias() -= q_.leftCols(m_) * delta;
    for (Index c = 0; c < m_; ++c) model.theta0(main_[static_cast<std::size_t>(c)]) += delta(c);
    return delta.lpNorm<Eigen::Infinity>();
  }

  double update_block(PliableModel& model, Index k) {
    const Index off = m_ + k * (1 + nz_);
    VectorXd gamma(1 + nz_);
    gamma(0) = model.beta(k);
    gamma.tail(nz_) = model.theta.row(k).transpose();

    BlockQuadratic block;
    block.gram = q_.block(off, off, 1 + nz_, 1 + nz_);
    block.linear = rho_.segment(off, 1 + nz_) + block.gram * gamma;

    VectorXd next = VectorXd::Zero(1 + nz_);
    if (!screen_block_zero(block.linear, cfg_.lambda, cfg_.alpha)) {
      const auto beta_only = solve_beta_only(block, cfg_.lambda, cfg_.alpha);
      if (beta_only.degenerate) return 0.0;
      if (beta_only.theta_zero) {
        next(0) = beta_only.beta;
      } else {
        VectorXd start = gamma;
        if (start.isZero(0.0)) start(0) = beta_only.beta;
        auto solved = solve_block(block, start, cfg_.lambda, cfg_.alpha, cfg_);
        step_underflow = step_underflow || solved.underflow;
        next = std::move(solved.gamma);
      }
    }

    const VectorXd delta = next - gamma;
    const double change = delta.lpNorm<Eigen::Infinity>();
    if (change == 0.0) return 0.0;
    rho_.noalias() -= q_.middleCols(off, 1 + nz_) * delta;
    model.beta(k) = next(0);
    model.theta.row(k) = next.tail(nz_).transpose();
    return change;
  }

  const PliableDesign& d_;
  const PenaltyConfig& cfg_;
  MatrixXd q_;
  VectorXd rho_;
  bool freeze_;
  Index nz_;
  Index m_;
  std::vector<Index> main_;
  Eigen::LDLT<MatrixXd> z_solver_;
};

bool use_full_curvature(const PliableDesign& d, const Likelihood& lik, const PenaltyConfig& cfg) {
  switch (cfg.curvature) {
    case Curvature::Diagonal: return false;
    case Curvature::Full:
      if (!d.group.empty()) throw Error(Errc::InvalidArgument, "full curvature does not support intercept groups");
      return true;
    case Curvature::Auto: break;
  }
  return !lik.separable() && d.group.empty() && d.nz() + d.p() * (1 + d.nz()) <= kFullCurvatureMaxColumns;
}

void blend(PliableModel& target, const PliableModel& from, const PliableModel& to, double s) {
  target.theta0 = from.theta0 + s * (to.theta0 - from.theta0);
  target.beta = from.beta + s * (to.beta - from.beta);
  target.theta = from.theta + s * (to.theta - from.theta);
  target.intercept = from.intercept + s * (to.intercept - from.intercept);
}

void check_shapes(const PliableDesign& d, const Likelihood& lik, const PliableModel& m) {
  if (lik.rows() != d.rows()) throw Error(Errc::DimensionMismatch, "likelihood and design row counts differ");
  if (d.w.cols() != d.p() * d.nz() || d.z.rows() != d.rows() || d.w.rows() != d.rows())
    throw Error(Errc::DimensionMismatch, "design blocks are inconsistent");
  if (static_cast<Index>(d.z_main.size()) != d.nz()) throw Error(Errc::DimensionMismatch, "z_main size differs from nz");
  if (!d.group.empty() && static_cast<Index>(d.group.size()) != d.rows())
    throw Error(Errc::DimensionMismatch, "intercept group vector has wrong length");
  if (m.beta.size() != d.p() || m.theta0.size() != d.nz() || m.theta.rows() != d.p() || m.theta.cols() != d.nz() ||
      m.intercept.size() != d.n_groups)
    throw Error(Errc::DimensionMismatch, "initial model does not match the design");
}

PliableModel fit_impl(const PliableDesign& design, const Likelihood& lik, const PenaltyConfig& config,
                      const PliableModel* init, bool freeze_blocks) {
  config.validate();
  PliableModel model = init ? *init : PliableModel::zeros(design.p(), design.nz(), design.n_groups);
  if (freeze_blocks) {
    model.beta.setZero();
    model.theta.setZero();
  }
  check_shapes(design, lik, model);
  model.lambda = config.lambda;
  model.alpha = config.alpha;
  model.objective_trace.clear();
  model.converged = model.max_iterations = model.diverging = model.step_underflow = model.degenerate_column = false;
  model.inner_sweeps = 0;

  const double lam = freeze_blocks ? 0.0 : config.lambda;
  VectorXd eta = model.linear_predictor(design);
  double f = -lik.loglik(eta) / design.n_scale + penalty_value(model, lam, config.alpha);
  model.objective_trace.push_back(f);
  double rel_change = std::numeric_limits<double>::infinity();

  auto kkt_of = [&](const VectorXd& grad) {
    if (freeze_blocks) return unpenalized_residual(design, grad);
    return kkt_residual(design, model, grad, config.lambda, config.alpha);
  };

  const bool full_curvature = use_full_curvature(design, lik, config);
  std::vector<Index> mains;
  for (Index l = 0; l < design.nz(); ++l)
    if (design.z_main[static_cast<std::size_t>(l)]) mains.push_back(l);
  const MatrixXd columns = full_curvature ? coefficient_columns(design, mains) : MatrixXd();

  bool tight = false;
  int outer = 0;
  for (;; ++outer) {
    const QuadraticApprox q = lik.derivatives(eta);
    model.kkt_residual = kkt_of(q.grad);
    if (model.kkt_residual <= config.tol_kkt && (outer == 0 || rel_change < config.tol_outer)) {
      model.converged = true;
      break;
    }
    if (outer >= config.outer_max_iter) {
      model.max_iterations = true;
      break;
    }

    // Inexact Newton: far from the solution the inner problem is solved loosely.
    const double inner_tol = tight ? config.tol_inner : std::max(config.tol_inner, 1e-3 * model.kkt_residual);
    PliableModel target = model;
    if (full_curvature) {
      DenseInnerSolver inner(design, config, mains, lik.information(eta, columns) / design.n_scale,
                             columns.transpose() * q.grad / design.n_scale, freeze_blocks);
      model.inner_sweeps += inner.run(target, inner_tol);
      model.step_underflow = model.step_underflow || inner.step_underflow;
    } else {
      const WorkingProblem wp = working_problem(q, eta);
      InnerSolver inner(design, config, wp.weight, wp.response - eta, freeze_blocks);
      model.inner_sweeps += inner.run(target, inner_tol);
      model.step_underflow = model.step_underflow || inner.step_underflow;
      model.degenerate_column = model.degenerate_column || inner.degenerate;
    }

    const VectorXd eta_target = target.linear_predictor(design);
    PliableModel cand = target;
    VectorXd eta_cand = eta_target;
    double f_cand = -lik.loglik(eta_cand) / design.n_scale + penalty_value(cand, lam, config.alpha);
    double s = 1.0;
    const double slack = 1e-13 * std::max(1.0, std::abs(f));
    while (!(f_cand <= f + slack) && s > 1e-10) {
      s *= 0.5;
      blend(cand, model, target, s);
      eta_cand = eta + s * (eta_target - eta);
      f_cand = -lik.loglik(eta_cand) / design.n_scale + penalty_value(cand, lam, config.alpha);
    }
    if (!(f_cand <= f + slack) && !tight) {
      tight = true;
      continue;
    }
    if (!(f_cand <= f + slack)) {
      // No descent along the working direction: the quadratic model has converged.
      rel_change = 0.0;
      const QuadraticApprox qf = lik.derivatives(eta);
      model.kkt_residual = kkt_of(qf.grad);
      model.converged = model.kkt_residual <= config.tol_kkt;
      break;
    }
    rel_change = std::abs(f - f_cand) / std::max(1.0, std::abs(f_cand));
    model.theta0 = cand.theta0;
    model.beta = cand.beta;
    model.theta = cand.theta;
    model.intercept = cand.intercept;
    eta = eta_cand;
    f = f_cand;
    model.objective_trace.push_back(f);

    const double eta_max = model.linear_predictor(design, false).cwiseAbs().maxCoeff();
    const double b_max = model.intercept.size() > 0 ? model.intercept.cwiseAbs().maxCoeff() : 0.0;
    if (eta_max > 30.0 || b_max > 30.0) {
      model.diverging = true;
      model.kkt_residual = kkt_of(lik.derivatives(eta).grad);
      ++outer;
      break;
    }
  }
  model.outer_iterations = outer;
  model.objective = f;
  return model;
}

}  // namespace

PliableModel fit(const PliableDesign& design, const Likelihood& lik, const PenaltyConfig& config,
                 const PliableModel* init) {
  return fit_impl(design, lik, config, init, false);
}

PliableModel fit_null(const PliableDesign& design, const Likelihood& lik, const PenaltyConfig& config) {
  PenaltyConfig cfg = config;
  cfg.lambda = 0.0;
  return fit_impl(design, lik, cfg, nullptr, true);
}

}  // namespace plasso
