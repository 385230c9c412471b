#include "plasso/path_cv.hpp"

#include "plasso/error.hpp"
#include "plasso/newton.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <thread>

namespace plasso {

const char* rule_name(SelectionRule r) { return r == SelectionRule::Min ? "min" : "1se"; }

SelectionRule parse_rule(std::string_view s) {
  if (s == "min") return SelectionRule::Min;
  if (s == "1se") return SelectionRule::OneSe;
  throw Error(Errc::InvalidArgument, "unknown rule '" + std::string(s) + "' (expected min or 1se)");
}

void PathConfig::validate() const {
  penalty.validate();
  if (penalty.alpha >= 1.0) throw Error(Errc::AlphaOne, "lambda_max is undefined at alpha = 1");
  if (lambdas.empty()) {
    if (nlambda < 2) throw Error(Errc::InvalidArgument, "nlambda must be at least 2");
    if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0))
      throw Error(Errc::InvalidArgument, "lambda_min_ratio must lie in (0, 1)");
  } else {
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      if (!std::isfinite(lambdas[i]) || lambdas[i] < 0.0)
        throw Error(Errc::InvalidArgument, "lambdas must be finite and nonnegative");
      if (i > 0 && !(lambdas[i] < lambdas[i - 1])) throw Error(Errc::InvalidArgument, "lambdas must be strictly decreasing");
    }
  }
  if (nfolds < 2) throw Error(Errc::InvalidArgument, "nfolds must be at least 2");
  if (threads < 1) throw Error(Errc::InvalidArgument, "threads must be positive");
}

namespace {

PliableModel null_fit(const PliableDesign& design, const Likelihood& lik, const PenaltyConfig& penalty) {
  if (design.group.empty()) {
    // Modifier-only Cox model by Newton-Raphson.
    std::vector<Index> cols;
    for (Index l = 0; l < design.nz(); ++l)
      if (design.z_main[static_cast<std::size_t>(l)]) cols.push_back(l);
    PliableModel m = PliableModel::zeros(design.p(), design.nz());
    if (!cols.empty()) {
      MatrixXd a(design.rows(), static_cast<Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) a.col(static_cast<Index>(c)) = design.z.col(cols[c]);
      const NewtonResult nr = fit_newton(lik, a, nullptr, 1e-8);
      for (std::size_t c = 0; c < cols.size(); ++c) m.theta0(cols[c]) = nr.coef(static_cast<Index>(c));
    }
    return m;
  }
  PenaltyConfig cfg = penalty;
  cfg.tol_kkt = std::min(cfg.tol_kkt, 1e-10);
  cfg.tol_outer = std::min(cfg.tol_outer, 1e-12);
  return fit_null(design, lik, cfg);
}

// Smallest lambda at which screen_block_zero(b) holds; the test is monotone in lambda.
double block_zero_lambda(const VectorXd& b, double alpha) {
  const double g = 1.0 - alpha;
  double lo = std::abs(b(0)) / g;
  double hi = std::max(lo, b.tail(b.size() - 1).norm() / g);
  if (screen_block_zero(b, lo, alpha)) return lo;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (screen_block_zero(b, mid, alpha) ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

LambdaMax lambda_max(const PliableDesign& design, const Likelihood& lik, const PliableModel& start,
                     const PenaltyConfig& penalty) {
  if (penalty.alpha >= 1.0) throw Error(Errc::AlphaOne, "lambda_max is undefined at alpha = 1");
  LambdaMax out;
  out.null_model = null_fit(design, lik, penalty);
  const VectorXd eta = out.null_model.linear_predictor(design);
  const VectorXd r = lik.derivatives(eta).grad / design.n_scale;
  const Index nz = design.nz();
  double formula = 0.0;
  double refined = 0.0;
  for (Index k = 0; k < design.p(); ++k) {
    VectorXd b(1 + nz);
    b(0) = design.x.col(k).dot(r);
    if (nz > 0) b.tail(nz) = design.w.middleCols(k * nz, nz).transpose() * r;
    formula = std::max(formula, std::abs(b(0)) / (1.0 - penalty.alpha));
    refined = std::max(refined, block_zero_lambda(b, penalty.alpha));
  }
  out.formula = formula;
  if (!(refined > 0.0)) throw Error(Errc::InvalidArgument, "lambda_max is zero: no feature is correlated with the residual");

  double lam = refined * (1.0 + 1e-9);
  for (int attempt = 0; attempt < 20; ++attempt) {
    PenaltyConfig cfg = penalty;
    cfg.lambda = lam;
    // Zero both from the null model (warm path start) and from the caller's start.
    if (fit(design, lik, cfg, &out.null_model).all_zero() && fit(design, lik, cfg, &start).all_zero()) break;
    lam *= 1.0 + 1e-6;
  }
  out.value = lam;
  return out;
}

std::vector<double> lambda_grid(double lambda_max, int nlambda, double ratio) {
  std::vector<double> grid(static_cast<std::size_t>(nlambda));
  for (int i = 0; i < nlambda; ++i)
    grid[static_cast<std::size_t>(i)] = lambda_max * std::pow(ratio, static_cast<double>(i) / (nlambda - 1));
  grid.back() = lambda_max * ratio;
  return grid;
}

PathResult fit_path(const PliableDesign& design, const Likelihood& lik, const PliableModel& start,
                    const PathConfig& config) {
  config.validate();
  PathResult out;
  PliableModel warm = start;
  if (config.lambdas.empty()) {
    LambdaMax lm = lambda_max(design, lik, start, config.penalty);
    out.lambda_max = lm.value;
    out.lambda_max_formula = lm.formula;
    out.lambdas = lambda_grid(lm.value, config.nlambda, config.lambda_min_ratio);
    warm = std::move(lm.null_model);
  } else {
    out.lambdas = config.lambdas;
  }
  std::string stopped;
  for (double lam : out.lambdas) {
    PenaltyConfig cfg = config.penalty;
    cfg.lambda = lam;
    if (!stopped.empty()) {
      // Smaller penalties only move further towards separation.
      PliableModel skipped = warm;
      skipped.lambda = lam;
      skipped.converged = false;
      out.models.push_back(std::move(skipped));
      out.errors.push_back(stopped);
      continue;
    }
    try {
      PliableModel m = fit(design, lik, cfg, &warm);
      if (m.diverging) stopped = "DivergingEta: path stopped after a diverging fit at lambda " + std::to_string(lam);
      warm = m;
      out.models.push_back(std::move(m));
      out.errors.emplace_back();
    } catch (const Error& e) {
      PliableModel failed = warm;
      failed.lambda = lam;
      failed.converged = false;
      out.models.push_back(std::move(failed));
      out.errors.emplace_back(e.what());
    }
  }
  return out;
}

PathResult fit_path(const FitSetup& setup, const SurvivalDataset& raw, const PathConfig& config) {
  const PreparedProblem prep = prepare(setup, raw);
  return fit_path(prep.design, *prep.lik, prep.start, config);
}

PliableModel fit_single(const FitSetup& setup, const SurvivalDataset& raw, const PenaltyConfig& config) {
  const PreparedProblem prep = prepare(setup, raw);
  return fit(prep.design, *prep.lik, config, &prep.start);
}

std::vector<int> stratified_folds(const VectorXi& status, int nfolds, std::uint64_t seed) {
  if (nfolds < 2) throw Error(Errc::InvalidArgument, "nfolds must be at least 2");
  const Index failures = status.sum();
  if (nfolds > failures)
    throw Error(Errc::FoldWithoutFailures, std::to_string(nfolds) + " folds but only " + std::to_string(failures) +
                                               " failures; lower nfolds");
  std::mt19937_64 rng(seed);
  std::vector<int> folds(static_cast<std::size_t>(status.size()), 0);
  int next = 0;
  for (int cls : {1, 0}) {
    std::vector<int> members;
    for (Index j = 0; j < status.size(); ++j)
      if (status(j) == cls) members.push_back(static_cast<int>(j));
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng() % i]);
    for (int j : members) folds[static_cast<std::size_t>(j)] = next++ % nfolds;
  }
  return folds;
}

CvCurve cross_validate(const std::vector<int>& folds, int nfolds, std::size_t nlambda, const FoldEvaluator& eval,
                       int threads) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CvCurve cv;
  cv.fold_values = MatrixXd::Constant(nfolds, static_cast<Index>(nlambda), nan);
  std::vector<std::string> errors(static_cast<std::size_t>(nfolds));

  auto run_fold = [&](int f) {
    std::vector<int> train;
    for (std::size_t j = 0; j < folds.size(); ++j)
      if (folds[j] != f) train.push_back(static_cast<int>(j));
    try {
      const auto values = eval(train);
      for (std::size_t l = 0; l < std::min(nlambda, values.size()); ++l)
        cv.fold_values(f, static_cast<Index>(l)) = -(values[l].first - values[l].second);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(f)] = e.what();
    }
  };

  if (threads <= 1) {
    for (int f = 0; f < nfolds; ++f) run_fold(f);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(threads, nfolds); ++t)
      pool.emplace_back([&] {
        for (int f = next++; f < nfolds; f = next++) run_fold(f);
      });
    for (auto& th : pool) th.join();
  }

  cv.mean.assign(nlambda, nan);
  cv.se.assign(nlambda, nan);
  for (std::size_t l = 0; l < nlambda; ++l) {
    // A lambda counts only when every fold produced a value.
    std::vector<double> v;
    for (int f = 0; f < nfolds; ++f)
      if (std::isfinite(cv.fold_values(f, static_cast<Index>(l)))) v.push_back(cv.fold_values(f, static_cast<Index>(l)));
    if (v.size() != static_cast<std::size_t>(nfolds)) continue;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    cv.mean[l] = mean;
    cv.se[l] = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size())) : 0.0;
  }
  return cv;
}

int select_lambda(const std::vector<double>& mean, const std::vector<double>& se, SelectionRule rule) {
  int best = -1;
  for (std::size_t l = 0; l < mean.size(); ++l)
    if (std::isfinite(mean[l]) && (best < 0 || mean[l] < mean[static_cast<std::size_t>(best)])) best = static_cast<int>(l);
  if (best < 0 || rule == SelectionRule::Min) return best;
  const double bound = mean[static_cast<std::size_t>(best)] + se[static_cast<std::size_t>(best)];
  for (std::size_t l = 0; l < mean.size(); ++l)  // lambdas decrease, so the first hit is the largest
    if (std::isfinite(mean[l]) && mean[l] <= bound) return static_cast<int>(l);
  return best;
}

PathResult cv_path(const FitSetup& setup, const SurvivalDataset& raw, const PathConfig& config) {
  config.validate();
  PathResult out = fit_path(setup, raw, config);
  out.folds = stratified_folds(raw.status, config.nfolds, config.seed);

  PathConfig fold_config = config;
  fold_config.lambdas = out.lambdas;
  FoldEvaluator eval = [&](std::span<const int> train_rows) {
    const SurvivalDataset train = raw.subset(train_rows);
    const PathResult path = fit_path(setup, train, fold_config);
    std::vector<std::pair<double, double>> values;
    for (std::size_t l = 0; l < path.models.size(); ++l) {
      if (!path.errors[l].empty()) {
        values.emplace_back(std::numeric_limits<double>::quiet_NaN(), 0.0);
        continue;
      }
      values.emplace_back(cox_loglik(setup, path.models[l], raw), cox_loglik(setup, path.models[l], train));
    }
    return values;
  };
  const CvCurve cv = cross_validate(out.folds, config.nfolds, out.lambdas.size(), eval, config.threads);
  out.cv_mean = cv.mean;
  out.cv_se = cv.se;
  out.opt_index = select_lambda(out.cv_mean, out.cv_se, config.rule);
  out.lambda_opt = out.opt_index >= 0 ? out.lambdas[static_cast<std::size_t>(out.opt_index)]
                                      : std::numeric_limits<double>::quiet_NaN();
  return out;
}

int threads_from_env() {
  const char* v = std::getenv("PLASSO_THREADS");
  if (!v) return 1;
  const int t = std::atoi(v);
  return t >= 1 ? t : 1;
}

}  // namespace plasso
