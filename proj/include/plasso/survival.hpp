#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace plasso {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

/// Right-censored survival data with covariates X (n x p) and modifiers Z (n x nz).
/// Matrices are column-major so per-feature scans are contiguous.
struct SurvivalDataset {
  VectorXd time;
  VectorXi status;  // 1 = failure, 0 = censored
  VectorXd weight;
  MatrixXd x;
  MatrixXd z;
  std::vector<std::string> x_names;
  std::vector<std::string> z_names;

  Index rows() const { return time.size(); }
  Index p() const { return x.cols(); }
  Index nz() const { return z.cols(); }
  Index failures() const { return status.sum(); }

  /// Rows in the given order; names are kept.
  SurvivalDataset subset(std::span<const int> rows) const;

  /// Fills missing names with x_1.., z_1.. and unit weights when weight is empty.
  void complete_defaults();
};

/// Throws plasso::Error on any violated invariant.
void validate(const SurvivalDataset& data);

/// Risk sets are suffixes of the time-sorted order: R_i = order[risk_start[i], n).
/// The set of failure times at which observation j is at risk is the prefix
/// [0, at_risk_count[j]) of failure_times. A censored observation tied with a
/// failure time stays in that risk set.
struct RiskSetIndex {
  std::vector<int> order;
  std::vector<double> failure_times;
  std::vector<int> risk_start;
  std::vector<std::vector<int>> failing;  // D_i
  std::vector<double> d;                  // sum of weights over D_i
  std::vector<int> at_risk_count;         // |C_j|
  std::vector<int> single_failure;        // j(i), or -1 when D_i is a tie group

  int n() const { return static_cast<int>(order.size()); }
  int m() const { return static_cast<int>(failure_times.size()); }

  std::span<const int> risk_set(int i) const {
    return std::span<const int>(order).subspan(static_cast<std::size_t>(risk_start[i]));
  }
  bool at_risk(int j, int i) const { return i < at_risk_count[j]; }
};

RiskSetIndex validate_and_index(const SurvivalDataset& data);

/// W (n x p*nz); column k*nz + l equals x_k * z_l elementwise.
MatrixXd build_interactions(const MatrixXd& x, const MatrixXd& z);

/// Column means and population standard deviations (divisor n).
struct ColumnScaling {
  VectorXd mean;
  VectorXd sd;

  Index size() const { return mean.size(); }
  void apply(MatrixXd& m) const;
  VectorXd apply(const VectorXd& row) const;
  static ColumnScaling identity(Index cols);
};

/// Throws ConstantColumn (naming `what` and the column index) for zero-variance columns.
ColumnScaling fit_column_scaling(const MatrixXd& m, std::string_view what);

struct ScalingRecord {
  ColumnScaling x;
  ColumnScaling z;
};

std::pair<SurvivalDataset, ScalingRecord> standardize(const SurvivalDataset& data);

}  // namespace plasso
