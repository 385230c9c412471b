#include "plasso/timevarying.hpp"

#include "plasso/error.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <random>

namespace plasso {

Index TimeBasis::dim() const {
  switch (kind) {
    case BasisKind::None: return 0;
    case BasisKind::Linear: return 1;
    case BasisKind::LinearSpline: return static_cast<Index>(knots.size());
  }
  return 0;
}

VectorXd TimeBasis::evaluate(double t) const {
  VectorXd g(dim());
  if (kind == BasisKind::Linear) {
    g(0) = t;
  } else if (kind == BasisKind::LinearSpline) {
    for (std::size_t q = 0; q < knots.size(); ++q) g(static_cast<Index>(q)) = std::max(t - knots[q], 0.0);
  }
  return g;
}

std::string TimeBasis::describe() const {
  switch (kind) {
    case BasisKind::None: return "none";
    case BasisKind::Linear: return "linear";
    case BasisKind::LinearSpline: return "spline:" + std::to_string(knots.size());
  }
  return "none";
}

TimeBasis TimeBasis::spline_at_quantiles(std::span<const double> failure_times, int count) {
  if (count < 1) throw Error(Errc::InvalidArgument, "spline needs at least one knot");
  if (failure_times.empty()) throw Error(Errc::NoFailures, "no failure times to place knots");
  std::vector<double> t(failure_times.begin(), failure_times.end());
  std::sort(t.begin(), t.end());
  std::vector<double> knots;
  const double last = static_cast<double>(t.size() - 1);
  for (int q = 1; q <= count; ++q) {
    const double h = last * q / (count + 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, t.size() - 1);
    knots.push_back(t[lo] + (h - std::floor(h)) * (t[hi] - t[lo]));
  }
  return spline(std::move(knots));
}

Index ExpandedDesign::failing_rows() const {
  return std::count(failing.begin(), failing.end(), char{1});
}

ExpandedDesign expand_design(const RiskSetIndex& index, const RiskSampleConfig& sample) {
  if (sample.sample_size < 0) throw Error(Errc::InvalidArgument, "risk-set sample size must be positive");
  ExpandedDesign e;
  std::mt19937_64 rng(sample.seed);
  std::vector<char> is_failing(static_cast<std::size_t>(index.n()), 0);
  std::vector<int> controls;
  e.group_start.push_back(0);
  for (int i = 0; i < index.m(); ++i) {
    const auto& D = index.failing[static_cast<std::size_t>(i)];
    assert(!D.empty());
    for (int j : D) {
      is_failing[static_cast<std::size_t>(j)] = 1;
      e.obs.push_back(j);
      e.time_id.push_back(i);
      e.failing.push_back(1);
    }
    // Controls are listed in risk-set order, whether or not they were sampled.
    controls.clear();
    for (int j : index.risk_set(i))
      if (!is_failing[static_cast<std::size_t>(j)]) controls.push_back(j);
    std::vector<std::size_t> keep(controls.size());
    std::iota(keep.begin(), keep.end(), std::size_t{0});
    const auto s = static_cast<std::size_t>(sample.sample_size);
    if (sample.sample_size > 0 && s < controls.size()) {
      for (std::size_t a = 0; a < s; ++a) {
        std::uniform_int_distribution<std::size_t> pick(a, keep.size() - 1);
        std::swap(keep[a], keep[pick(rng)]);
      }
      keep.resize(s);
      std::sort(keep.begin(), keep.end());
    }
    for (std::size_t a : keep) {
      e.obs.push_back(controls[a]);
      e.time_id.push_back(i);
      e.failing.push_back(0);
    }
    for (int j : D) is_failing[static_cast<std::size_t>(j)] = 0;
    e.group_start.push_back(static_cast<int>(e.obs.size()));
  }
  return e;
}

MatrixXd basis_rows(const ExpandedDesign& rows, const RiskSetIndex& index, const TimeBasis& basis) {
  MatrixXd g(rows.rows(), basis.dim());
  std::vector<VectorXd> at_time;
  at_time.reserve(static_cast<std::size_t>(index.m()));
  for (int i = 0; i < index.m(); ++i) at_time.push_back(basis.evaluate(index.failure_times[static_cast<std::size_t>(i)]));
  for (Index r = 0; r < rows.rows(); ++r) g.row(r) = at_time[static_cast<std::size_t>(rows.time_id[static_cast<std::size_t>(r)])];
  return g;
}

GroupedCoxLikelihood::GroupedCoxLikelihood(const ExpandedDesign& rows, const RiskSetIndex& index,
                                           const VectorXd& obs_weight)
    : group_start_(rows.group_start), d_(index.d) {
  if (rows.groups() != index.m()) throw Error(Errc::DimensionMismatch, "expanded design does not match the index");
  weight_.resize(rows.rows());
  failing_.resize(rows.rows());
  for (Index r = 0; r < rows.rows(); ++r) {
    weight_(r) = obs_weight(rows.obs[static_cast<std::size_t>(r)]);
    failing_(r) = rows.failing[static_cast<std::size_t>(r)];
  }
}

namespace {

// log sum_{r in [a, b)} w_r exp(eta_r) and the shift used.
double log_group_sum(const VectorXd& eta, const VectorXd& w, int a, int b) {
  const double mx = eta.segment(a, b - a).maxCoeff();
  double s = 0.0;
  for (int r = a; r < b; ++r) s += w(r) * std::exp(eta(r) - mx);
  return mx + std::log(s);
}

}  // namespace

double GroupedCoxLikelihood::loglik(const VectorXd& eta) const {
  double l = 0.0;
  for (std::size_t i = 0; i + 1 < group_start_.size(); ++i) {
    const int a = group_start_[i];
    const int b = group_start_[i + 1];
    for (int r = a; r < b; ++r) l += failing_(r) * weight_(r) * eta(r);
    l -= d_[i] * log_group_sum(eta, weight_, a, b);
  }
  return l;
}

QuadraticApprox GroupedCoxLikelihood::derivatives(const VectorXd& eta) const {
  QuadraticApprox q;
  q.grad.resize(eta.size());
  q.hess_diag.resize(eta.size());
  for (std::size_t i = 0; i + 1 < group_start_.size(); ++i) {
    const int a = group_start_[i];
    const int b = group_start_[i + 1];
    const double log_s = log_group_sum(eta, weight_, a, b);
    for (int r = a; r < b; ++r) {
      const double p = weight_(r) * std::exp(eta(r) - log_s);
      q.grad(r) = failing_(r) * weight_(r) - d_[i] * p;
      q.hess_diag(r) = std::min(0.0, -d_[i] * (p - p * p));
    }
  }
  return q;
}

MatrixXd GroupedCoxLikelihood::information(const VectorXd& eta, const MatrixXd& a) const {
  MatrixXd info = MatrixXd::Zero(a.cols(), a.cols());
  for (std::size_t i = 0; i + 1 < group_start_.size(); ++i) {
    const int lo = group_start_[i];
    const int hi = group_start_[i + 1];
    const double log_s = log_group_sum(eta, weight_, lo, hi);
    VectorXd mean = VectorXd::Zero(a.cols());
    MatrixXd second = MatrixXd::Zero(a.cols(), a.cols());
    for (int r = lo; r < hi; ++r) {
      const double p = weight_(r) * std::exp(eta(r) - log_s);
      mean.noalias() += p * a.row(r).transpose();
      second.selfadjointView<Eigen::Lower>().rankUpdate(a.row(r).transpose(), p);
    }
    MatrixXd cov = second.selfadjointView<Eigen::Lower>();
    cov.noalias() -= mean * mean.transpose();
    info += d_[i] * cov;
  }
  return info;
}

ColumnScaling fit_basis_scaling(const RiskSetIndex& index, const TimeBasis& basis, const RiskSampleConfig& sample) {
  if (basis.dim() == 0) return ColumnScaling::identity(0);
  const ExpandedDesign rows = expand_design(index, sample);
  return fit_column_scaling(basis_rows(rows, index, basis), "time basis");
}

StackedDesign build_stacked_design(const SurvivalDataset& data, const RiskSetIndex& index, const TimeBasis& basis,
                                   const ColumnScaling& basis_scaling, const RiskSampleConfig& sample) {
  if (basis_scaling.size() != basis.dim())
    throw Error(Errc::DimensionMismatch, "basis scaling does not match the basis dimension");
  StackedDesign out;
  out.rows = expand_design(index, sample);
  const Index rows = out.rows.rows();
  const Index nz = data.nz();
  MatrixXd x(rows, data.p());
  MatrixXd z(rows, nz + basis.dim());
  MatrixXd g = basis_rows(out.rows, index, basis);
  basis_scaling.apply(g);
  for (Index r = 0; r < rows; ++r) {
    const int j = out.rows.obs[static_cast<std::size_t>(r)];
    x.row(r) = data.x.row(j);
    if (nz > 0) z.row(r).head(nz) = data.z.row(j);
  }
  if (basis.dim() > 0) z.rightCols(basis.dim()) = g;
  out.design = PliableDesign::make(std::move(x), std::move(z), static_cast<double>(data.rows()));
  for (Index l = nz; l < out.design.nz(); ++l) out.design.z_main[static_cast<std::size_t>(l)] = false;
  return out;
}

TimeVaryingFit fit_timevarying(const SurvivalDataset& data, const TimeBasis& basis, const RiskSampleConfig& sample,
                               const PenaltyConfig& config) {
  auto [scaled, scaling] = standardize(data);
  const RiskSetIndex index = validate_and_index(scaled);
  TimeVaryingFit out;
  out.basis = basis;
  out.scaling = std::move(scaling);
  out.basis_scaling = fit_basis_scaling(index, basis, sample);
  const StackedDesign stacked = build_stacked_design(scaled, index, basis, out.basis_scaling, sample);
  const GroupedCoxLikelihood lik(stacked.rows, index, scaled.weight);
  out.model = fit(stacked.design, lik, config);
  return out;
}

}  // namespace plasso
