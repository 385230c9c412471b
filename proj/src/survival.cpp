#include "plasso/survival.hpp"

#include "plasso/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace plasso {

SurvivalDataset SurvivalDataset::subset(std::span<const int> rows) const {
  SurvivalDataset out;
  const auto k = static_cast<Index>(rows.size());
  out.time.resize(k);
  out.status.resize(k);
  out.weight.resize(k);
  out.x.resize(k, p());
  out.z.resize(k, nz());
  for (Index r = 0; r < k; ++r) {
    const Index j = rows[static_cast<std::size_t>(r)];
    out.time(r) = time(j);
    out.status(r) = status(j);
    out.weight(r) = weight(j);
    out.x.row(r) = x.row(j);
    out.z.row(r) = z.row(j);
  }
  out.x_names = x_names;
  out.z_names = z_names;
  return out;
}

void SurvivalDataset::complete_defaults() {
  if (weight.size() == 0) weight = VectorXd::Ones(rows());
  if (z.rows() != rows() && z.cols() == 0) z.resize(rows(), 0);
  for (Index k = static_cast<Index>(x_names.size()); k < p(); ++k)
    x_names.push_back("x_" + std::to_string(k + 1));
  for (Index l = static_cast<Index>(z_names.size()); l < nz(); ++l)
    z_names.push_back("z_" + std::to_string(l + 1));
}

void validate(const SurvivalDataset& data) {
  const Index n = data.rows();
  if (n == 0) throw Error(Errc::InvalidArgument, "dataset has no rows");
  if (data.status.size() != n || data.weight.size() != n || data.x.rows() != n ||
      data.z.rows() != n)
    throw Error(Errc::DimensionMismatch, "time, status, weight, X and Z must have the same row count");
  if (data.p() < 1) throw Error(Errc::InvalidArgument, "at least one covariate column is required");
  if (!data.time.allFinite()) throw Error(Errc::NonFinite, "non-finite observed time");
  if (!data.x.allFinite()) throw Error(Errc::NonFinite, "non-finite entry in X");
  if (!data.z.allFinite()) throw Error(Errc::NonFinite, "non-finite entry in Z");
  for (Index j = 0; j < n; ++j) {
    if (data.time(j) < 0) throw Error(Errc::InvalidArgument, "negative observed time at row " + std::to_string(j));
    if (!(data.weight(j) > 0) || !std::isfinite(data.weight(j)))
      throw Error(Errc::NegativeWeight, "weight must be positive at row " + std::to_string(j));
    if (data.status(j) != 0 && data.status(j) != 1)
      throw Error(Errc::InvalidArgument, "status must be 0 or 1 at row " + std::to_string(j));
  }
  if (data.failures() == 0) throw Error(Errc::NoFailures, "all observations are censored");
}

RiskSetIndex validate_and_index(const SurvivalDataset& data) {
  validate(data);
  const int n = static_cast<int>(data.rows());
  RiskSetIndex idx;
  idx.order.resize(static_cast<std::size_t>(n));
  std::iota(idx.order.begin(), idx.order.end(), 0);
  std::stable_sort(idx.order.begin(), idx.order.end(),
                   [&](int a, int b) { return data.time(a) < data.time(b); });

  for (int pos = 0; pos < n; ++pos) {
    const int j = idx.order[static_cast<std::size_t>(pos)];
    if (data.status(j) != 1) continue;
    const double t = data.time(j);
    if (idx.failure_times.empty() || idx.failure_times.back() != t) {
      idx.failure_times.push_back(t);
      idx.failing.emplace_back();
      idx.d.push_back(0.0);
    }
    idx.failing.back().push_back(j);
    idx.d.back() += data.weight(j);
  }

  const int m = idx.m();
  idx.risk_start.resize(static_cast<std::size_t>(m));
  idx.single_failure.resize(static_cast<std::size_t>(m));
  int pos = 0;
  for (int i = 0; i < m; ++i) {
    while (pos < n && data.time(idx.order[static_cast<std::size_t>(pos)]) < idx.failure_times[static_cast<std::size_t>(i)]) ++pos;
    idx.risk_start[static_cast<std::size_t>(i)] = pos;
    const auto& D = idx.failing[static_cast<std::size_t>(i)];
    idx.single_failure[static_cast<std::size_t>(i)] = D.size() == 1 ? D.front() : -1;
  }

  idx.at_risk_count.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const auto it = std::upper_bound(idx.failure_times.begin(), idx.failure_times.end(), data.time(j));
    idx.at_risk_count[static_cast<std::size_t>(j)] = static_cast<int>(it - idx.failure_times.begin());
  }
  return idx;
}

MatrixXd build_interactions(const MatrixXd& x, const MatrixXd& z) {
  if (x.rows() != z.rows()) throw Error(Errc::DimensionMismatch, "X and Z row counts differ");
  const Index nz = z.cols();
  MatrixXd w(x.rows(), x.cols() * nz);
  for (Index k = 0; k < x.cols(); ++k)
    for (Index l = 0; l < nz; ++l) w.col(k * nz + l) = x.col(k).cwiseProduct(z.col(l));
  return w;
}

void ColumnScaling::apply(MatrixXd& m) const {
  for (Index c = 0; c < m.cols(); ++c) m.col(c) = (m.col(c).array() - mean(c)) / sd(c);
}

VectorXd ColumnScaling::apply(const VectorXd& row) const {
  return ((row - mean).array() / sd.array()).matrix();
}

ColumnScaling ColumnScaling::identity(Index cols) {
  return {VectorXd::Zero(cols), VectorXd::Ones(cols)};
}

ColumnScaling fit_column_scaling(const MatrixXd& m, std::string_view what) {
  ColumnScaling s;
  const Index n = m.rows();
  s.mean.resize(m.cols());
  s.sd.resize(m.cols());
  for (Index c = 0; c < m.cols(); ++c) {
    const double mu = m.col(c).mean();
    const double var = (m.col(c).array() - mu).square().sum() / static_cast<double>(n);
    const double sd = std::sqrt(var);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mu))))
      throw Error(Errc::ConstantColumn, std::string(what) + " column " + std::to_string(c) + " has zero variance");
    s.mean(c) = mu;
    s.sd(c) = sd;
  }
  return s;
}

std::pair<SurvivalDataset, ScalingRecord> standardize(const SurvivalDataset& data) {
  if (data.rows() < 2) throw Error(Errc::InvalidArgument, "standardization needs at least two rows");
  ScalingRecord rec{fit_column_scaling(data.x, "X"), fit_column_scaling(data.z, "Z")};
  SurvivalDataset out = data;
  rec.x.apply(out.x);
  rec.z.apply(out.z);
  return {std::move(out), std::move(rec)};
}

}  // namespace plasso
