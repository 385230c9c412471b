#pragma once

#include "plasso/fit_setup.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace plasso {

enum class SelectionRule { Min, OneSe };

const char* rule_name(SelectionRule r);
SelectionRule parse_rule(std::string_view s);

struct PathConfig {
  int nlambda = 50;
  double lambda_min_ratio = 0.01;
  std::vector<double> lambdas;  // explicit decreasing grid; overrides nlambda / ratio
  PenaltyConfig penalty;        // alpha and tolerances; lambda is ignored
  int nfolds = 5;
  SelectionRule rule = SelectionRule::Min;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

struct LambdaMax {
  double value = 0.0;    // refined: every block is exactly zero at this lambda
  double formula = 0.0;  // max_k |x_k' r| / (n (1 - alpha)) at the null fit
  PliableModel null_model;
};

/// Null fit (theta0 and intercepts only), then the smallest lambda for which
/// every block passes the exact zero condition, verified by a fit.
LambdaMax lambda_max(const PliableDesign& design, const Likelihood& lik, const PliableModel& start,
                     const PenaltyConfig& penalty);

/// Geometric grid lambda_max * ratio^(i / (nlambda - 1)).
std::vector<double> lambda_grid(double lambda_max, int nlambda, double ratio);

struct PathResult {
  std::vector<double> lambdas;
  std::vector<PliableModel> models;
  std::vector<std::string> errors;  // empty when the fit at that lambda succeeded; set for grid
                                    // points skipped after a diverging fit
  double lambda_max = 0.0;
  double lambda_max_formula = 0.0;

  // Cross-validation, empty when not run.
  std::vector<int> folds;
  std::vector<double> cv_mean;
  std::vector<double> cv_se;
  double lambda_opt = 0.0;
  int opt_index = -1;
};

/// Warm-started path on a prepared problem. With an empty grid, the grid is
/// built from lambda_max.
PathResult fit_path(const PliableDesign& design, const Likelihood& lik, const PliableModel& start,
                    const PathConfig& config);

PathResult fit_path(const FitSetup& setup, const SurvivalDataset& raw, const PathConfig& config);

/// Single fit at config.lambda on raw data.
PliableModel fit_single(const FitSetup& setup, const SurvivalDataset& raw, const PenaltyConfig& config);

/// Stratified by status; fold ids in [0, nfolds).
std::vector<int> stratified_folds(const VectorXi& status, int nfolds, std::uint64_t seed);

/// Per lambda: (l_full, l_train) of the model trained on `train_rows`.
using FoldEvaluator = std::function<std::vector<std::pair<double, double>>(std::span<const int> train_rows)>;

struct CvCurve {
  std::vector<double> mean;  // mean over folds of -(l_full - l_train)
  std::vector<double> se;
  MatrixXd fold_values;      // folds x lambdas
};

CvCurve cross_validate(const std::vector<int>& folds, int nfolds, std::size_t nlambda, const FoldEvaluator& eval,
                       int threads = 1);

/// Index into the grid; -1 when every value is NaN.
int select_lambda(const std::vector<double>& mean, const std::vector<double>& se, SelectionRule rule);

/// Path on the full data followed by cross-validation on the same grid.
PathResult cv_path(const FitSetup& setup, const SurvivalDataset& raw, const PathConfig& config);

/// Thread count from PLASSO_THREADS (default 1).
int threads_from_env();

}  // namespace plasso
