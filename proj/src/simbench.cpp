#include "plasso/simbench.hpp"

#include "plasso/coxnet.hpp"
#include "plasso/error.hpp"
#include "plasso/newton.hpp"
#include "plasso/path_cv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <thread>

namespace plasso {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kSelected = 1e-8;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
double exponential(std::mt19937_64& rng) { return -std::log1p(-uniform01(rng)); }
double normal(std::mt19937_64& rng) {
  // Box-Muller; one draw per call keeps the stream layout simple.
  const double u = 1.0 - uniform01(rng);
  const double v = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(Errc::PatternNeedsDims, msg);
}

}  // namespace

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::PropHier: return "prop_hier";
    case Scenario::PropNonhier: return "prop_nonhier";
    case Scenario::TvHier: return "tv_hier";
    case Scenario::TvNonhier: return "tv_nonhier";
  }
  return "prop_hier";
}

Scenario parse_scenario(std::string_view s) {
  for (Scenario sc : {Scenario::PropHier, Scenario::PropNonhier, Scenario::TvHier, Scenario::TvNonhier})
    if (s == scenario_name(sc)) return sc;
  throw Error(Errc::InvalidArgument, "unknown scenario '" + std::string(s) + "'");
}

void SimDesign::validate() const {
  if (n < 2 || n_test < 2 || n_reps < 1 || p < 1 || nz < 0)
    throw Error(Errc::InvalidArgument, "simulation sizes must be positive");
  if (nfolds < 2 || nlambda < 2 || !(lambda_min_ratio > 0 && lambda_min_ratio < 1) || spline_knots < 1 ||
      risk_sample < 0 || threads < 1)
    throw Error(Errc::InvalidArgument, "invalid method settings");
  switch (scenario) {
    case Scenario::PropHier: require(p >= 4 && nz >= 4, "prop_hier needs p >= 4 and nz >= 4"); break;
    case Scenario::PropNonhier: require(p >= 8 && nz >= 4, "prop_nonhier needs p >= 8 and nz >= 4"); break;
    case Scenario::TvHier: require(p >= 4, "tv_hier needs p >= 4"); break;
    case Scenario::TvNonhier: require(p >= 6, "tv_nonhier needs p >= 6"); break;
  }
}

std::vector<int> TrueModel::beta_support() const {
  std::vector<int> s;
  for (Index k = 0; k < beta.size(); ++k)
    if (beta(k) != 0.0) s.push_back(static_cast<int>(k));
  return s;
}

std::vector<int> TrueModel::theta_support() const {
  std::vector<int> s;
  if (slope.size() > 0) {
    for (Index k = 0; k < slope.size(); ++k)
      if (slope(k) != 0.0) s.push_back(static_cast<int>(k));
    return s;
  }
  for (Index k = 0; k < theta.rows(); ++k)
    for (Index l = 0; l < theta.cols(); ++l)
      if (theta(k, l) != 0.0) s.push_back(static_cast<int>(k * theta.cols() + l));
  return s;
}

TrueModel true_model(const SimDesign& d) {
  d.validate();
  TrueModel t;
  t.beta = VectorXd::Zero(d.p);
  t.beta.head(4) << 1, -1, 1, 1;
  if (d.time_varying()) {
    t.theta = MatrixXd::Zero(d.p, d.nz);
    t.slope = VectorXd::Zero(d.p);
    const int first = d.scenario == Scenario::TvHier ? 0 : 4;
    t.slope(first) = 5;
    t.slope(first + 1) = 5;
  } else {
    t.theta = MatrixXd::Zero(d.p, d.nz);
    if (d.scenario == Scenario::PropHier) {
      t.theta(0, 0) = 1;
      t.theta(0, 1) = -1;
      t.theta(1, 2) = -2;
      t.theta(1, 3) = 2;
    } else {
      t.theta(4, 0) = 1;
      t.theta(5, 1) = -1;
      t.theta(6, 2) = -2;
      t.theta(7, 3) = 2;
    }
  }
  t.beta *= d.effect_scale;
  t.theta *= d.effect_scale;
  t.slope *= d.effect_scale;
  return t;
}

namespace {

SurvivalDataset empty_dataset(const SimDesign& d, int n) {
  SurvivalDataset data;
  data.time.resize(n);
  data.status.resize(n);
  data.weight = VectorXd::Ones(n);
  data.x.resize(n, d.p);
  data.z.resize(n, d.nz);
  data.complete_defaults();
  return data;
}

}  // namespace

SurvivalDataset generate_proportional(const SimDesign& d, int n, std::mt19937_64& rng) {
  const TrueModel t = true_model(d);
  SurvivalDataset data = empty_dataset(d, n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < d.p; ++k) data.x(j, k) = normal(rng);
    for (int l = 0; l < d.nz; ++l) data.z(j, l) = uniform01(rng) < 0.5 ? 1.0 : 0.0;
    const double lin = data.x.row(j).dot(t.beta) + data.x.row(j) * t.theta * data.z.row(j).transpose();
    const double y = std::exp(-lin) * exponential(rng);
    const double c = exponential(rng);
    data.time(j) = std::min(y, c);
    data.status(j) = y <= c ? 1 : 0;
  }
  return data;
}

SurvivalDataset generate_timevarying(const SimDesign& d, int n, std::mt19937_64& rng) {
  const TrueModel t = true_model(d);
  SurvivalDataset data = empty_dataset(d, n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < d.p; ++k) data.x(j, k) = uniform01(rng);
    for (int l = 0; l < d.nz; ++l) data.z(j, l) = uniform01(rng) < 0.5 ? 1.0 : 0.0;
    const double lin = data.x.row(j).dot(t.beta);
    const double k = data.x.row(j).dot(t.slope);
    const double scaled = exponential(rng) * std::exp(-lin);
    const double y = k == 0.0 ? scaled : std::log1p(scaled * k) / k;
    const double c = exponential(rng);
    data.time(j) = std::min(y, c);
    data.status(j) = y <= c ? 1 : 0;
  }
  return data;
}

SurvivalDataset generate(const SimDesign& d, int n, std::mt19937_64& rng) {
  return d.time_varying() ? generate_timevarying(d, n, rng) : generate_proportional(d, n, rng);
}

std::mt19937_64 replicate_engine(std::uint64_t seed, int rep) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(rep)};
  return std::mt19937_64(seq);
}

double reference_loglik(const SimDesign& d, const SurvivalDataset& data) {
  const TrueModel t = true_model(d);
  const RiskSetIndex index = validate_and_index(data);
  if (!d.time_varying()) {
    VectorXd eta = data.x * t.beta;
    if (d.nz > 0) eta += (data.x * t.theta).cwiseProduct(data.z).rowwise().sum();
    return partial_loglik(eta, index, data.weight);
  }
  const VectorXd lin = data.x * t.beta;
  const VectorXd k = data.x * t.slope;
  return tv_partial_loglik(index, data.weight, [&](int j, int i) {
    return k(j) * index.failure_times[static_cast<std::size_t>(i)] + lin(j);
  });
}

namespace {

struct Selection {
  double fp = 0.0;
  double fn = 0.0;
};

Selection count_selection(const std::vector<bool>& selected, const std::vector<int>& support) {
  Selection s;
  std::vector<bool> truth(selected.size(), false);
  for (int i : support) truth[static_cast<std::size_t>(i)] = true;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    if (selected[i] && !truth[i]) s.fp += 1;
    if (!selected[i] && truth[i]) s.fn += 1;
  }
  return s;
}

// Lasso comparator on standardized columns, lambda chosen by cross-validation.
VectorXd lasso_cv(const MatrixXd& xs, const SurvivalDataset& train, const SimDesign& d, std::uint64_t fold_seed) {
  const RiskSetIndex index = validate_and_index(train);
  const CoxLikelihood lik(index, train.weight);
  const double n = static_cast<double>(train.rows());
  CoxnetConfig cfg;
  const double lmax = coxnet_lambda_max(xs, lik, n, cfg.alpha);
  const std::vector<double> grid = lambda_grid(lmax, d.nlambda, d.lambda_min_ratio);
  const auto path = coxnet_path(xs, lik, n, grid, cfg);
  const std::vector<int> folds = stratified_folds(train.status, d.nfolds, fold_seed);

  FoldEvaluator eval = [&](std::span<const int> rows) {
    const SurvivalDataset sub = train.subset(rows);
    const RiskSetIndex sub_index = validate_and_index(sub);
    const CoxLikelihood sub_lik(sub_index, sub.weight);
    MatrixXd x_sub(static_cast<Index>(rows.size()), xs.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) x_sub.row(static_cast<Index>(r)) = xs.row(rows[r]);
    const auto sub_path = coxnet_path(x_sub, sub_lik, static_cast<double>(sub.rows()), grid, cfg);
    std::vector<std::pair<double, double>> values;
    for (const auto& f : sub_path) values.emplace_back(lik.loglik(xs * f.beta), sub_lik.loglik(x_sub * f.beta));
    return values;
  };
  const CvCurve cv = cross_validate(folds, d.nfolds, grid.size(), eval, 1);
  const int opt = select_lambda(cv.mean, cv.se, SelectionRule::Min);
  if (opt < 0) throw Error(Errc::NonFinite, "lasso cross-validation produced no finite values");
  return path[static_cast<std::size_t>(opt)].beta;
}

double test_nll_linear(const MatrixXd& xs_test, const VectorXd& beta, const SurvivalDataset& test) {
  const RiskSetIndex index = validate_and_index(test);
  return -partial_loglik(xs_test * beta, index, test.weight);
}

MethodMetrics blank(const std::string& name, double nll) {
  return {name, nll, kNaN, kNaN, kNaN, kNaN};
}

MethodMetrics plasso_method(const SimDesign& d, const TrueModel& truth, const SurvivalDataset& train,
                            const SurvivalDataset& test, std::uint64_t fold_seed, std::uint64_t sample_seed) {
  const bool tv = d.time_varying();
  const FitSetup setup =
      tv ? make_setup(train, Engine::Logistic, {BasisKind::LinearSpline, d.spline_knots},
                      {d.risk_sample, sample_seed}, true)
         : make_setup(train, Engine::Exact, {}, {}, true);
  PathConfig cfg;
  cfg.penalty.alpha = tv ? 0.0 : 0.5;
  cfg.nlambda = d.nlambda;
  cfg.lambda_min_ratio = d.lambda_min_ratio;
  cfg.nfolds = d.nfolds;
  cfg.seed = fold_seed;
  const PathResult path = cv_path(setup, train, cfg);
  if (path.opt_index < 0) throw Error(Errc::NonFinite, "plasso cross-validation produced no finite values");
  const PliableModel& m = path.models[static_cast<std::size_t>(path.opt_index)];

  MethodMetrics out;
  out.method = "plasso";
  out.negative_ll = -cox_loglik(setup, m, test);
  std::vector<bool> sel_beta(static_cast<std::size_t>(d.p));
  for (int k = 0; k < d.p; ++k) sel_beta[static_cast<std::size_t>(k)] = std::abs(m.beta(k)) > kSelected;
  const Selection sb = count_selection(sel_beta, truth.beta_support());
  std::vector<bool> sel_theta;
  if (tv) {
    for (int k = 0; k < d.p; ++k)
      sel_theta.push_back((m.theta.row(k).tail(setup.basis.dim()).cwiseAbs().array() > kSelected).any());
  } else {
    for (int k = 0; k < d.p; ++k)
      for (int l = 0; l < d.nz; ++l) sel_theta.push_back(std::abs(m.theta(k, l)) > kSelected);
  }
  const Selection st = count_selection(sel_theta, truth.theta_support());
  out.fp_beta = sb.fp;
  out.fn_beta = sb.fn;
  out.fp_theta = st.fp;
  out.fn_theta = st.fn;
  return out;
}

MethodMetrics lasso_method(const std::string& name, const MatrixXd& x_train, const MatrixXd& x_test,
                           const SimDesign& d, const TrueModel& truth, const SurvivalDataset& train,
                           const SurvivalDataset& test, std::uint64_t fold_seed, bool interactions) {
  const ColumnScaling scaling = fit_column_scaling(x_train, name);
  MatrixXd xs = x_train;
  scaling.apply(xs);
  MatrixXd xt = x_test;
  scaling.apply(xt);
  const VectorXd beta = lasso_cv(xs, train, d, fold_seed);

  MethodMetrics out = blank(name, test_nll_linear(xt, beta, test));
  std::vector<bool> sel_beta(static_cast<std::size_t>(d.p));
  for (int k = 0; k < d.p; ++k) sel_beta[static_cast<std::size_t>(k)] = std::abs(beta(k)) > kSelected;
  const Selection sb = count_selection(sel_beta, truth.beta_support());
  out.fp_beta = sb.fp;
  out.fn_beta = sb.fn;
  if (interactions) {
    std::vector<bool> sel_theta;
    for (Index c = d.p; c < beta.size(); ++c) sel_theta.push_back(std::abs(beta(c)) > kSelected);
    const Selection st = count_selection(sel_theta, truth.theta_support());
    out.fp_theta = st.fp;
    out.fn_theta = st.fn;
  }
  return out;
}

// Unpenalized Cox with covariates x and x * t on full risk sets.
MethodMetrics cox_full_method(const SurvivalDataset& train, const SurvivalDataset& test) {
  const FitSetup setup = make_setup(train, Engine::Exact, {BasisKind::Linear, 0}, {0, 1}, true);
  const PreparedProblem prep = prepare(setup, train);
  const PliableDesign& dz = prep.design;
  std::vector<Index> mains;
  for (Index l = 0; l < dz.nz(); ++l)
    if (dz.z_main[static_cast<std::size_t>(l)]) mains.push_back(l);
  const Index nm = static_cast<Index>(mains.size());
  MatrixXd a(dz.rows(), nm + dz.p() + dz.w.cols());
  for (Index c = 0; c < nm; ++c) a.col(c) = dz.z.col(mains[static_cast<std::size_t>(c)]);
  a.middleCols(nm, dz.p()) = dz.x;
  a.rightCols(dz.w.cols()) = dz.w;
  const NewtonResult nr = fit_newton(*prep.lik, a);
  PliableModel m = prep.start;
  for (Index c = 0; c < nm; ++c) m.theta0(mains[static_cast<std::size_t>(c)]) = nr.coef(c);
  m.beta = nr.coef.segment(nm, dz.p());
  for (Index k = 0; k < dz.p(); ++k)
    for (Index l = 0; l < dz.nz(); ++l) m.theta(k, l) = nr.coef(nm + dz.p() + k * dz.nz() + l);
  return blank("cox (full)", -cox_loglik(setup, m, test));
}

}  // namespace

std::vector<MethodMetrics> run_replicate(const SimDesign& d, int rep) {
  d.validate();
  const TrueModel truth = true_model(d);
  std::mt19937_64 rng = replicate_engine(d.seed, rep);
  const SurvivalDataset train = generate(d, d.n, rng);
  const SurvivalDataset test = generate(d, d.n_test, rng);
  const std::uint64_t fold_seed = rng();
  const std::uint64_t sample_seed = rng();

  std::vector<MethodMetrics> out;
  out.push_back(plasso_method(d, truth, train, test, fold_seed, sample_seed));
  out.push_back(lasso_method("lasso (main)", train.x, test.x, d, truth, train, test, fold_seed, false));
  if (d.time_varying()) {
    out.push_back(cox_full_method(train, test));
  } else {
    MatrixXd full_train(train.rows(), d.p + d.p * d.nz);
    full_train << train.x, build_interactions(train.x, train.z);
    MatrixXd full_test(test.rows(), d.p + d.p * d.nz);
    full_test << test.x, build_interactions(test.x, test.z);
    out.push_back(lasso_method("lasso (full)", full_train, full_test, d, truth, train, test, fold_seed, true));
  }
  out.push_back(blank("true", -reference_loglik(d, test)));
  out.push_back(blank("null", -partial_loglik(VectorXd::Zero(test.rows()), validate_and_index(test), test.weight)));
  return out;
}

std::vector<MethodMetrics> average_metrics(const std::vector<std::vector<MethodMetrics>>& reps) {
  std::vector<MethodMetrics> mean;
  if (reps.empty()) return mean;
  for (std::size_t m = 0; m < reps.front().size(); ++m) {
    MethodMetrics acc;
    acc.method = reps.front()[m].method;
    auto avg = [&](double MethodMetrics::*field) {
      double s = 0.0;
      int c = 0;
      for (const auto& r : reps)
        if (std::isfinite(r[m].*field)) {
          s += r[m].*field;
          ++c;
        }
      return c > 0 ? s / c : kNaN;
    };
    acc.negative_ll = avg(&MethodMetrics::negative_ll);
    acc.fp_beta = avg(&MethodMetrics::fp_beta);
    acc.fn_beta = avg(&MethodMetrics::fn_beta);
    acc.fp_theta = avg(&MethodMetrics::fp_theta);
    acc.fn_theta = avg(&MethodMetrics::fn_theta);
    mean.push_back(std::move(acc));
  }
  return mean;
}

SimResult run_comparison(const SimDesign& d) {
  d.validate();
  SimResult res;
  res.design = d;
  std::vector<std::vector<MethodMetrics>> all(static_cast<std::size_t>(d.n_reps));
  std::vector<std::string> errors(static_cast<std::size_t>(d.n_reps));
  auto run = [&](int r) {
    try {
      all[static_cast<std::size_t>(r)] = run_replicate(d, r);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(r)] = e.what();
    }
  };
  if (d.threads <= 1) {
    for (int r = 0; r < d.n_reps; ++r) run(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(d.threads, d.n_reps); ++t)
      pool.emplace_back([&] {
        for (int r = next++; r < d.n_reps; r = next++) run(r);
      });
    for (auto& th : pool) th.join();
  }
  for (int r = 0; r < d.n_reps; ++r) {
    if (!errors[static_cast<std::size_t>(r)].empty()) {
      res.failures.push_back("rep " + std::to_string(r) + ": " + errors[static_cast<std::size_t>(r)]);
      continue;
    }
    res.reps.push_back(std::move(all[static_cast<std::size_t>(r)]));
    res.rep_ids.push_back(r);
  }
  res.mean = average_metrics(res.reps);
  return res;
}

namespace {

std::string fixed3(double v) {
  if (!std::isfinite(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

const char* const kColumns[] = {"method", "negative_ll", "fp_beta", "fn_beta", "fp_theta", "fn_theta"};

std::vector<std::string> cells(const MethodMetrics& m) {
  return {m.method, fixed3(m.negative_ll), fixed3(m.fp_beta), fixed3(m.fn_beta), fixed3(m.fp_theta),
          fixed3(m.fn_theta)};
}

}  // namespace

std::string emit_table(const std::vector<MethodMetrics>& rows, TableFormat format) {
  std::vector<std::vector<std::string>> table;
  table.emplace_back(std::begin(kColumns), std::end(kColumns));
  for (const auto& r : rows) table.push_back(cells(r));
  std::ostringstream out;
  if (format == TableFormat::Csv) {
    for (const auto& row : table) {
      for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
      out << '\n';
    }
    return out.str();
  }
  std::vector<std::size_t> width(table.front().size(), 0);
  for (const auto& row : table)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  for (const auto& row : table) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::size_t pad = width[c] - row[c].size();
      if (c == 0) {
        line += row[c] + std::string(pad, ' ');
      } else {
        line += "  " + std::string(pad, ' ') + row[c];
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
  return out.str();
}

std::vector<MethodMetrics> parse_table_csv(std::string_view text) {
  std::vector<MethodMetrics> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 6) throw Error(Errc::ParseError, "metrics row needs 6 fields: " + line);
    if (header) {
      for (std::size_t c = 0; c < 6; ++c)
        if (f[c] != kColumns[c]) throw Error(Errc::ParseError, "unexpected metrics header: " + line);
      header = false;
      continue;
    }
    auto num = [&](const std::string& s) {
      if (s.empty()) return kNaN;
      try {
        return std::stod(s);
      } catch (const std::exception&) {
        throw Error(Errc::ParseError, "bad number '" + s + "'");
      }
    };
    rows.push_back({f[0], num(f[1]), num(f[2]), num(f[3]), num(f[4]), num(f[5])});
  }
  if (header) throw Error(Errc::ParseError, "metrics table has no header");
  return rows;
}

}  // namespace plasso
