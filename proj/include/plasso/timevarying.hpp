#pragma once

#include "plasso/cox_objective.hpp"
#include "plasso/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace plasso {

enum class BasisKind { None, Linear, LinearSpline };

/// Time functions G(t) used as modifiers. The spline basis is a set of hinge
/// functions max(t - knot, 0).
struct TimeBasis {
  BasisKind kind = BasisKind::None;
  std::vector<double> knots;

  Index dim() const;
  VectorXd evaluate(double t) const;
  std::string describe() const;

  static TimeBasis none() { return {}; }
  static TimeBasis linear() { return {BasisKind::Linear, {}}; }
  static TimeBasis spline(std::vector<double> knots) { return {BasisKind::LinearSpline, std::move(knots)}; }
  /// Knots at the quantiles 1/(count+1), ..., count/(count+1) of the failure times.
  static TimeBasis spline_at_quantiles(std::span<const double> failure_times, int count);
};

struct RiskSampleConfig {
  int sample_size = 0;  // controls drawn per failure time; 0 keeps the whole risk set
  std::uint64_t seed = 1;
};

/// Stacked rows, one per (failure time i, member j of R_i or of its sample).
/// Rows of time i occupy [group_start[i], group_start[i+1]); the failing
/// observations come first (eta0 rows), then the controls (eta1 rows).
struct ExpandedDesign {
  std::vector<int> obs;
  std::vector<int> time_id;
  std::vector<char> failing;
  std::vector<int> group_start;

  Index rows() const { return static_cast<Index>(obs.size()); }
  int groups() const { return static_cast<int>(group_start.size()) - 1; }
  Index failing_rows() const;
};

/// Controls are drawn without replacement from R_i \ D_i, deterministically in the seed.
ExpandedDesign expand_design(const RiskSetIndex& index, const RiskSampleConfig& sample);

/// G(t_i) for every expanded row.
MatrixXd basis_rows(const ExpandedDesign& rows, const RiskSetIndex& index, const TimeBasis& basis);

/// Partial likelihood where every stacked row belongs to the risk set of
/// exactly one failure time:
///   l = sum_i [ sum_{r in D_i} w_r eta_r - d_i log sum_{r in group i} w_r exp(eta_r) ].
class GroupedCoxLikelihood final : public Likelihood {
 public:
  GroupedCoxLikelihood(const ExpandedDesign& rows, const RiskSetIndex& index, const VectorXd& obs_weight);

  Index rows() const override { return weight_.size(); }
  double loglik(const VectorXd& eta) const override;
  QuadraticApprox derivatives(const VectorXd& eta) const override;
  MatrixXd information(const VectorXd& eta, const MatrixXd& a) const override;

 private:
  std::vector<int> group_start_;
  VectorXd weight_;
  VectorXd failing_;
  std::vector<double> d_;
};

/// Row gradient / diagonal Hessian of the time-varying partial likelihood.
inline QuadraticApprox tv_derivatives(const VectorXd& eta_rows, const GroupedCoxLikelihood& lik) {
  return lik.derivatives(eta_rows);
}

/// Time-varying partial log-likelihood with full risk sets for an arbitrary
/// predictor eta(j, i) = linear predictor of observation j at failure time i.
template <class EtaFn>
double tv_partial_loglik(const RiskSetIndex& index, const VectorXd& weight, EtaFn&& eta) {
  double l = 0.0;
  std::vector<double> values;
  for (int i = 0; i < index.m(); ++i) {
    const auto rs = index.risk_set(i);
    values.resize(rs.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < rs.size(); ++r) {
      values[r] = eta(rs[r], i);
      mx = std::max(mx, values[r]);
    }
    double s = 0.0;
    for (std::size_t r = 0; r < rs.size(); ++r) s += weight(rs[r]) * std::exp(values[r] - mx);
    for (int j : index.failing[static_cast<std::size_t>(i)]) l += weight(j) * eta(j, i);
    l -= index.d[static_cast<std::size_t>(i)] * (mx + std::log(s));
  }
  return l;
}

/// Design for the stacked problem on (already standardized) data. Modifiers
/// are the fixed Z columns (main effects estimated) followed by the scaled
/// time basis (main effects absorbed by the baseline hazard).
struct StackedDesign {
  ExpandedDesign rows;
  PliableDesign design;
};

StackedDesign build_stacked_design(const SurvivalDataset& data, const RiskSetIndex& index, const TimeBasis& basis,
                                   const ColumnScaling& basis_scaling, const RiskSampleConfig& sample);

/// Scaling of the basis columns over the expanded rows of `index`.
ColumnScaling fit_basis_scaling(const RiskSetIndex& index, const TimeBasis& basis, const RiskSampleConfig& sample);

struct TimeVaryingFit {
  PliableModel model;
  ScalingRecord scaling;
  ColumnScaling basis_scaling;
  TimeBasis basis;
};

/// Exact stacked fit on standardized covariates and basis.
TimeVaryingFit fit_timevarying(const SurvivalDataset& data, const TimeBasis& basis, const RiskSampleConfig& sample,
                               const PenaltyConfig& config);

}  // namespace plasso
