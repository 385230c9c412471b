#include "plasso/logistic.hpp"

#include "plasso/csv.hpp"
#include "plasso/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace plasso {

StackedLogisticProblem stack_problem(const SurvivalDataset& data, const RiskSetIndex& index, const TimeBasis& basis,
                                     const ColumnScaling& basis_scaling, const RiskSampleConfig& sample) {
  StackedDesign stacked = build_stacked_design(data, index, basis, basis_scaling, sample);
  StackedLogisticProblem p;
  p.rows = std::move(stacked.rows);
  p.design = std::move(stacked.design);
  const Index rows = p.rows.rows();
  p.outcome.resize(rows);
  p.weight.resize(rows);
  for (Index r = 0; r < rows; ++r) {
    p.outcome(r) = p.rows.failing[static_cast<std::size_t>(r)];
    p.weight(r) = data.weight(p.rows.obs[static_cast<std::size_t>(r)]);
  }
  // A time whose stacked rows all fail has an infinite intercept and carries
  // no information on the other coefficients; its rows get weight zero.
  for (int i = 0; i < p.rows.groups(); ++i) {
    const int lo = p.rows.group_start[static_cast<std::size_t>(i)];
    const int hi = p.rows.group_start[static_cast<std::size_t>(i) + 1];
    if (p.outcome.segment(lo, hi - lo).minCoeff() == 1.0) p.weight.segment(lo, hi - lo).setZero();
  }
  p.design.group = p.rows.time_id;
  p.design.n_groups = p.rows.groups();
  return p;
}

namespace {

double softplus(double e) { return e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e)); }

double sigmoid(double e) {
  if (e >= 0) return 1.0 / (1.0 + std::exp(-e));
  const double x = std::exp(e);
  return x / (1.0 + x);
}

}  // namespace

BinomialLikelihood::BinomialLikelihood(VectorXd outcome, VectorXd weight) : y_(std::move(outcome)), w_(std::move(weight)) {
  if (y_.size() != w_.size()) throw Error(Errc::DimensionMismatch, "outcome and weight lengths differ");
}

double BinomialLikelihood::loglik(const VectorXd& eta) const {
  double l = 0.0;
  for (Index r = 0; r < eta.size(); ++r) l += w_(r) * (y_(r) * eta(r) - softplus(eta(r)));
  return l;
}

QuadraticApprox BinomialLikelihood::derivatives(const VectorXd& eta) const {
  QuadraticApprox q;
  q.grad.resize(eta.size());
  q.hess_diag.resize(eta.size());
  for (Index r = 0; r < eta.size(); ++r) {
    const double mu = sigmoid(eta(r));
    q.grad(r) = w_(r) * (y_(r) - mu);
    q.hess_diag(r) = -w_(r) * mu * (1.0 - mu);
  }
  return q;
}

MatrixXd BinomialLikelihood::information(const VectorXd& eta, const MatrixXd& a) const {
  VectorXd v(eta.size());
  for (Index r = 0; r < eta.size(); ++r) {
    const double mu = sigmoid(eta(r));
    v(r) = w_(r) * mu * (1.0 - mu);
  }
  return a.transpose() * v.asDiagonal() * a;
}

VectorXd null_intercepts(const StackedLogisticProblem& problem) {
  const int m = problem.rows.groups();
  VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    double cases = 0.0;
    double total = 0.0;
    for (int r = problem.rows.group_start[static_cast<std::size_t>(i)];
         r < problem.rows.group_start[static_cast<std::size_t>(i) + 1]; ++r) {
      cases += problem.weight(r) * problem.outcome(r);
      total += problem.weight(r);
    }
    b(i) = total > cases ? std::log(cases / (total - cases)) : 0.0;
  }
  return b;
}

PliableModel fit_logistic_plasso(const StackedLogisticProblem& problem, const PenaltyConfig& config,
                                 const PliableModel* init) {
  const BinomialLikelihood lik(problem.outcome, problem.weight);
  if (init) return fit(problem.design, lik, config, init);
  PliableModel start = PliableModel::zeros(problem.design.p(), problem.design.nz(), problem.design.n_groups);
  start.intercept = null_intercepts(problem);
  return fit(problem.design, lik, config, &start);
}

std::vector<double> approximation_gap_per_time(const VectorXd& eta, const RiskSetIndex& index, const VectorXd& weight) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(index.m()));
  for (int i = 0; i < index.m(); ++i) {
    const auto rs = index.risk_set(i);
    double mx = -std::numeric_limits<double>::infinity();
    for (int j : rs) mx = std::max(mx, eta(j));
    double s = 0.0;
    for (int j : rs) s += weight(j) * std::exp(eta(j) - mx);
    const double di = index.d[static_cast<std::size_t>(i)];
    double total = 0.0;
    for (int j : rs) total += weight(j) * std::log1p(di * std::exp(eta(j) - mx) / s);
    out.push_back(std::abs(total - di));
  }
  return out;
}

double approximation_gap(const VectorXd& eta, const RiskSetIndex& index, const VectorXd& weight) {
  const auto per = approximation_gap_per_time(eta, index, weight);
  return std::accumulate(per.begin(), per.end(), 0.0);
}

double auc(std::span<const double> scores, std::span<const double> outcome) {
  if (scores.size() != outcome.size()) throw Error(Errc::DimensionMismatch, "scores and outcomes differ in length");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of midranks of the positives.
  double rank_sum = 0.0;
  double pos = 0.0;
  std::size_t a = 0;
  while (a < idx.size()) {
    std::size_t b = a;
    while (b + 1 < idx.size() && scores[idx[b + 1]] == scores[idx[a]]) ++b;
    const double mid = 0.5 * static_cast<double>(a + b) + 1.0;
    for (std::size_t c = a; c <= b; ++c)
      if (outcome[idx[c]] > 0.5) {
        rank_sum += mid;
        pos += 1.0;
      }
    a = b + 1;
  }
  const double neg = static_cast<double>(scores.size()) - pos;
  if (pos == 0.0 || neg == 0.0) throw Error(Errc::OneClassOnly, "AUC needs both outcome classes");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double evaluate_auc(const PliableModel& model, const StackedLogisticProblem& test) {
  const VectorXd eta = model.linear_predictor(test.design, false);
  return auc(std::span<const double>(eta.data(), static_cast<std::size_t>(eta.size())),
             std::span<const double>(test.outcome.data(), static_cast<std::size_t>(test.outcome.size())));
}

void write_stacked_csv(std::ostream& out, const StackedLogisticProblem& problem,
                       const std::vector<std::string>& x_names, const std::vector<std::string>& modifier_names) {
  const auto& d = problem.design;
  out << "time_id,obs,outcome";
  for (Index k = 0; k < d.p(); ++k) out << ',' << (static_cast<std::size_t>(k) < x_names.size() ? x_names[k] : "x" + std::to_string(k + 1));
  for (Index l = 0; l < d.nz(); ++l)
    out << ',' << (static_cast<std::size_t>(l) < modifier_names.size() ? modifier_names[l] : "m" + std::to_string(l + 1));
  out << '\n';
  for (Index r = 0; r < problem.rows.rows(); ++r) {
    out << problem.rows.time_id[static_cast<std::size_t>(r)] << ',' << problem.rows.obs[static_cast<std::size_t>(r)] << ','
        << static_cast<int>(problem.outcome(r));
    for (Index k = 0; k < d.p(); ++k) out << ',' << format_double(d.x(r, k));
    for (Index l = 0; l < d.nz(); ++l) out << ',' << format_double(d.z(r, l));
    out << '\n';
  }
}

}  // namespace plasso
