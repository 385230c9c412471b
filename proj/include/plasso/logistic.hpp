#pragma once

#include "plasso/timevarying.hpp"

#include <iosfwd>

namespace plasso {

/// Case/control rows stacked over failure times, one intercept per time.
/// The design's intercept groups are the failure times.
struct StackedLogisticProblem {
  ExpandedDesign rows;
  VectorXd outcome;
  VectorXd weight;
  PliableDesign design;
};

/// Rows as in expand_design; modifiers are the fixed Z columns followed by the
/// scaled time basis (if any). Covariates are expected on the fitting scale.
StackedLogisticProblem stack_problem(const SurvivalDataset& data, const RiskSetIndex& index, const TimeBasis& basis,
                                     const ColumnScaling& basis_scaling, const RiskSampleConfig& sample);

/// Bernoulli log-likelihood sum_r w_r [y_r eta_r - log(1 + exp(eta_r))].
class BinomialLikelihood final : public Likelihood {
 public:
  BinomialLikelihood(VectorXd outcome, VectorXd weight);

  Index rows() const override { return y_.size(); }
  double loglik(const VectorXd& eta) const override;
  QuadraticApprox derivatives(const VectorXd& eta) const override;
  MatrixXd information(const VectorXd& eta, const MatrixXd& a) const override;
  bool separable() const override { return true; }

 private:
  VectorXd y_;
  VectorXd w_;
};

/// Binomial pliable lasso with unpenalized per-time intercepts. Intercepts
/// beyond 30 in absolute value set the diverging flag.
PliableModel fit_logistic_plasso(const StackedLogisticProblem& problem, const PenaltyConfig& config,
                                 const PliableModel* init = nullptr);

/// Intercept-only solution logit(sum_{D_i} w / sum_{block} w) per time.
VectorXd null_intercepts(const StackedLogisticProblem& problem);

/// Per failure time, the Cox term minus the logistic term at intercept
/// log(d_i / S_i) equals sum_{j in R_i} w_j log1p(d_i e^eta_j / S_i) - d_i log d_i.
/// The gap drops the eta-free part and reports
///   sum_i | sum_{j in R_i} w_j log1p(d_i e^eta_j / S_i) - d_i |,
/// which vanishes as max_j e^eta_j / S_i goes to zero.
double approximation_gap(const VectorXd& eta, const RiskSetIndex& index, const VectorXd& weight);
std::vector<double> approximation_gap_per_time(const VectorXd& eta, const RiskSetIndex& index, const VectorXd& weight);

/// Mann-Whitney AUC of scores for outcome-1 against outcome-0 rows; ties count half.
double auc(std::span<const double> scores, std::span<const double> outcome);

/// Covariate rows (without intercept) of a stacked problem scored by a model.
double evaluate_auc(const PliableModel& model, const StackedLogisticProblem& test);

/// Audit dump: time_id, obs, outcome, x columns, modifier columns.
void write_stacked_csv(std::ostream& out, const StackedLogisticProblem& problem,
                       const std::vector<std::string>& x_names, const std::vector<std::string>& modifier_names);

}  // namespace plasso
