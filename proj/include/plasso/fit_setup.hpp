#pragma once

#include "plasso/logistic.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace plasso {

enum class Engine { Exact, Logistic };

const char* engine_name(Engine e);
Engine parse_engine(std::string_view s);

/// Parses "linear", "spline:<k>" or "none" into a kind and knot count.
struct BasisSpec {
  BasisKind kind = BasisKind::None;
  int knots = 0;

  static BasisSpec parse(std::string_view s);
  std::string describe() const;
};

/// Everything fixed on the full data before any fit: scaling, knots, basis
/// scaling, engine and risk-set sampling. Folds and path points reuse it.
struct FitSetup {
  Engine engine = Engine::Exact;
  TimeBasis basis;
  RiskSampleConfig sample;
  bool standardized = true;
  ScalingRecord scaling;
  ColumnScaling basis_scaling;
  std::vector<std::string> x_names;
  std::vector<std::string> z_names;

  bool time_varying() const { return basis.kind != BasisKind::None; }
  Index p() const { return scaling.x.size(); }
  Index nz() const { return scaling.z.size(); }
  /// Modifier columns seen by the solver: Z then the time basis.
  Index modifiers() const { return nz() + basis.dim(); }
  std::vector<std::string> modifier_names() const;
};

FitSetup make_setup(const SurvivalDataset& data, Engine engine, BasisSpec basis, RiskSampleConfig sample,
                    bool standardize = true);

/// Data on the fitting scale.
SurvivalDataset scale_data(const FitSetup& setup, const SurvivalDataset& raw);

struct PreparedProblem {
  RiskSetIndex index;  // of the (scaled) data
  PliableDesign design;
  std::unique_ptr<Likelihood> lik;
  PliableModel start;  // zero coefficients, null intercepts for the logistic engine
  std::optional<StackedLogisticProblem> stacked;
};

PreparedProblem prepare(const FitSetup& setup, const SurvivalDataset& raw);

/// Exact Cox partial log-likelihood of `model` on raw data (full risk sets,
/// time-varying modifiers evaluated at each failure time). Logistic-engine
/// models are scored with their per-time intercepts dropped.
double cox_loglik(const FitSetup& setup, const PliableModel& model, const SurvivalDataset& raw);

/// eta for every row. Time-varying models are evaluated at `times` (one
/// column per time) or, when empty, at each row's own observed time.
MatrixXd predict_eta(const FitSetup& setup, const PliableModel& model, const SurvivalDataset& raw,
                     std::span<const double> times = {});

/// Coefficients on the original covariate scale:
///   eta = offset + x' beta + z' theta0 + sum_kl x_k m_l theta_kl, m = (z, G(t)).
struct OriginalCoefficients {
  double offset = 0.0;
  VectorXd beta;
  VectorXd theta0;  // fixed modifiers only
  MatrixXd theta;   // p x modifiers
  /// Terms linear in the basis G(t) without an x factor (from centering).
  VectorXd basis_main;
};

OriginalCoefficients original_scale(const FitSetup& setup, const PliableModel& model);

}  // namespace plasso
