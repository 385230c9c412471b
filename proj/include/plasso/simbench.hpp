#pragma once

#include "plasso/survival.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace plasso {

enum class Scenario { PropHier, PropNonhier, TvHier, TvNonhier };

const char* scenario_name(Scenario s);
Scenario parse_scenario(std::string_view s);

struct SimDesign {
  Scenario scenario = Scenario::PropHier;
  int n = 100;
  int p = 10;
  int nz = 4;
  std::uint64_t seed = 1;
  int n_test = 1000;
  int n_reps = 20;
  double effect_scale = 1.0;  // multiplies every true coefficient; 0 gives iid Exp(1) times

  // Method settings.
  int nfolds = 5;
  int nlambda = 50;
  double lambda_min_ratio = 0.01;
  int spline_knots = 5;
  int risk_sample = 5;
  int threads = 1;

  bool time_varying() const { return scenario == Scenario::TvHier || scenario == Scenario::TvNonhier; }
  void validate() const;
};

/// Proportional scenarios: hazard exp(x' beta + sum_kl theta_kl x_k z_l).
/// Time-varying scenarios: times y = log(1 + E e^{-lin} k) / k with E ~ Exp(1),
/// lin = x' beta and k = x' slope, whose hazard is exp(k t + lin).
struct TrueModel {
  VectorXd beta;
  MatrixXd theta;  // p x nz (zero for the time-varying scenarios)
  VectorXd slope;  // p (time-varying scenarios)

  std::vector<int> beta_support() const;
  /// Proportional: flattened k * nz + l entries. Time-varying: covariates k.
  std::vector<int> theta_support() const;
};

TrueModel true_model(const SimDesign& design);

/// Draws from an explicit engine so train and test sets share one stream.
SurvivalDataset generate_proportional(const SimDesign& design, int n, std::mt19937_64& rng);
SurvivalDataset generate_timevarying(const SimDesign& design, int n, std::mt19937_64& rng);
SurvivalDataset generate(const SimDesign& design, int n, std::mt19937_64& rng);

/// Generator for replicate `rep`, derived from the design seed.
std::mt19937_64 replicate_engine(std::uint64_t seed, int rep);

/// Partial log-likelihood of the generating model on `data`.
double reference_loglik(const SimDesign& design, const SurvivalDataset& data);

struct MethodMetrics {
  std::string method;
  double negative_ll = 0.0;
  double fp_beta = 0.0;
  double fn_beta = 0.0;
  double fp_theta = 0.0;
  double fn_theta = 0.0;  // NaN entries are reported as blanks
};

struct SimResult {
  SimDesign design;
  std::vector<std::vector<MethodMetrics>> reps;  // successful replicates, in replicate order
  std::vector<int> rep_ids;
  std::vector<std::string> failures;            // "rep <r>: <error>"
  std::vector<MethodMetrics> mean;
};

/// Methods per replicate, in order:
///   proportional: plasso, lasso (main), lasso (full), true, null
///   time-varying: plasso, lasso (main), cox (full), true, null
std::vector<MethodMetrics> run_replicate(const SimDesign& design, int rep);
SimResult run_comparison(const SimDesign& design);

std::vector<MethodMetrics> average_metrics(const std::vector<std::vector<MethodMetrics>>& reps);

enum class TableFormat { Text, Csv };

std::string emit_table(const std::vector<MethodMetrics>& rows, TableFormat format);
/// Inverse of emit_table(..., Csv); blanks become NaN.
std::vector<MethodMetrics> parse_table_csv(std::string_view text);

}  // namespace plasso
