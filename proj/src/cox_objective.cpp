#include "plasso/cox_objective.hpp"

#include "plasso/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace plasso {

WorkingProblem working_problem(const QuadraticApprox& approx, const VectorXd& eta) {
  WorkingProblem wp;
  wp.weight = -approx.hess_diag;
  wp.response = eta;
  const double wmax = wp.weight.size() > 0 ? wp.weight.maxCoeff() : 0.0;
  const double floor = 1e-12 * wmax;
  for (Index j = 0; j < eta.size(); ++j) {
    if (wp.weight(j) > floor && wp.weight(j) > 0) {
      wp.response(j) += approx.grad(j) / wp.weight(j);
    } else {
      wp.weight(j) = 0.0;
    }
  }
  return wp;
}

CoxLikelihood::CoxLikelihood(RiskSetIndex index, VectorXd weight)
    : index_(std::move(index)), weight_(std::move(weight)) {
  if (weight_.size() != index_.n()) throw Error(Errc::DimensionMismatch, "weight length differs from index size");
  failed_ = VectorXd::Zero(weight_.size());
  for (const auto& D : index_.failing)
    for (int j : D) failed_(j) = 1.0;
}

std::vector<double> CoxLikelihood::log_risk_sums(const VectorXd& eta) const {
  const int n = index_.n();
  const int m = index_.m();
  std::vector<double> out(static_cast<std::size_t>(m));
  double shift = -std::numeric_limits<double>::infinity();
  double scaled = 0.0;
  int pos = n;
  for (int i = m - 1; i >= 0; --i) {
    const int start = index_.risk_start[static_cast<std::size_t>(i)];
    while (pos > start) {
      --pos;
      const int j = index_.order[static_cast<std::size_t>(pos)];
      const double e = eta(j);
      if (e > shift) {
        scaled = scaled * std::exp(shift - e) + weight_(j);
        shift = e;
      } else {
        scaled += weight_(j) * std::exp(e - shift);
      }
    }
    out[static_cast<std::size_t>(i)] = shift + std::log(scaled);
  }
  return out;
}

double CoxLikelihood::loglik(const VectorXd& eta) const {
  const auto log_s = log_risk_sums(eta);
  double l = 0.0;
  for (int i = 0; i < index_.m(); ++i) {
    for (int j : index_.failing[static_cast<std::size_t>(i)]) l += weight_(j) * eta(j);
    l -= index_.d[static_cast<std::size_t>(i)] * log_s[static_cast<std::size_t>(i)];
  }
  return l;
}

QuadraticApprox CoxLikelihood::derivatives(const VectorXd& eta) const {
  const int n = index_.n();
  const int m = index_.m();
  const auto log_s = log_risk_sums(eta);
  const double c = eta.maxCoeff();

  // Prefix sums over failure times of d_i / S_i and d_i / S_i^2, scaled by exp(c).
  std::vector<double> first(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<double> second(static_cast<std::size_t>(m) + 1, 0.0);
  for (int i = 0; i < m; ++i) {
    const double inv = std::exp(c - log_s[static_cast<std::size_t>(i)]);
    const double di = index_.d[static_cast<std::size_t>(i)];
    first[static_cast<std::size_t>(i) + 1] = first[static_cast<std::size_t>(i)] + di * inv;
    second[static_cast<std::size_t>(i) + 1] = second[static_cast<std::size_t>(i)] + di * inv * inv;
  }

  QuadraticApprox q;
  q.grad.resize(n);
  q.hess_diag.resize(n);
  for (int j = 0; j < n; ++j) {
    const auto k = static_cast<std::size_t>(index_.at_risk_count[static_cast<std::size_t>(j)]);
    const double e = weight_(j) * std::exp(eta(j) - c);
    const double a = e * first[k];
    q.grad(j) = weight_(j) * failed_(j) - a;
    q.hess_diag(j) = std::min(0.0, -(a - e * e * second[k]));
  }
  return q;
}

MatrixXd CoxLikelihood::information(const VectorXd& eta, const MatrixXd& a) const {
  const Index q = a.cols();
  const int n = index_.n();
  const double c = eta.maxCoeff();
  MatrixXd info = MatrixXd::Zero(q, q);
  double s0 = 0.0;
  VectorXd s1 = VectorXd::Zero(q);
  MatrixXd s2 = MatrixXd::Zero(q, q);
  int pos = n;
  for (int i = index_.m() - 1; i >= 0; --i) {
    const int start = index_.risk_start[static_cast<std::size_t>(i)];
    while (pos > start) {
      --pos;
      const int j = index_.order[static_cast<std::size_t>(pos)];
      const double e = weight_(j) * std::exp(eta(j) - c);
      s0 += e;
      s1.noalias() += e * a.row(j).transpose();
      s2.selfadjointView<Eigen::Lower>().rankUpdate(a.row(j).transpose(), e);
    }
    const double di = index_.d[static_cast<std::size_t>(i)];
    const VectorXd mean = s1 / s0;
    MatrixXd cov = s2.selfadjointView<Eigen::Lower>();
    cov /= s0;
    cov.noalias() -= mean * mean.transpose();
    info += di * cov;
  }
  return info;
}

double partial_loglik(const VectorXd& eta, const RiskSetIndex& index, const VectorXd& weight) {
  return CoxLikelihood(index, weight).loglik(eta);
}

QuadraticApprox derivatives(const VectorXd& eta, const RiskSetIndex& index, const VectorXd& weight) {
  return CoxLikelihood(index, weight).derivatives(eta);
}

}  // namespace plasso
