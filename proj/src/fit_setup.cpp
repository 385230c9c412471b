#include "plasso/fit_setup.hpp"

#include "plasso/error.hpp"

#include <charconv>

namespace plasso {

const char* engine_name(Engine e) { return e == Engine::Exact ? "exact" : "logistic"; }

Engine parse_engine(std::string_view s) {
  if (s == "exact") return Engine::Exact;
  if (s == "logistic") return Engine::Logistic;
  throw Error(Errc::InvalidArgument, "unknown engine '" + std::string(s) + "' (expected exact or logistic)");
}

BasisSpec BasisSpec::parse(std::string_view s) {
  if (s.empty() || s == "none") return {};
  if (s == "linear") return {BasisKind::Linear, 0};
  if (s.starts_with("spline:")) {
    const auto tail = s.substr(7);
    int k = 0;
    const auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), k);
    if (ec == std::errc() && ptr == tail.data() + tail.size() && k >= 1) return {BasisKind::LinearSpline, k};
  }
  throw Error(Errc::InvalidArgument, "time basis must be linear, spline:<k> or none, got '" + std::string(s) + "'");
}

std::string BasisSpec::describe() const {
  switch (kind) {
    case BasisKind::None: return "none";
    case BasisKind::Linear: return "linear";
    case BasisKind::LinearSpline: return "spline:" + std::to_string(knots);
  }
  return "none";
}

std::vector<std::string> FitSetup::modifier_names() const {
  std::vector<std::string> names = z_names;
  for (Index q = 0; q < basis.dim(); ++q) names.push_back("g" + std::to_string(q + 1));
  return names;
}

FitSetup make_setup(const SurvivalDataset& data, Engine engine, BasisSpec basis, RiskSampleConfig sample,
                    bool standardize) {
  const RiskSetIndex raw_index = validate_and_index(data);
  FitSetup s;
  s.engine = engine;
  s.sample = sample;
  s.standardized = standardize;
  s.x_names = data.x_names;
  s.z_names = data.z_names;
  if (standardize) {
    s.scaling.x = fit_column_scaling(data.x, "X");
    s.scaling.z = fit_column_scaling(data.z, "Z");
  } else {
    s.scaling.x = ColumnScaling::identity(data.p());
    s.scaling.z = ColumnScaling::identity(data.nz());
  }
  switch (basis.kind) {
    case BasisKind::None: break;
    case BasisKind::Linear: s.basis = TimeBasis::linear(); break;
    case BasisKind::LinearSpline:
      s.basis = TimeBasis::spline_at_quantiles(raw_index.failure_times, basis.knots);
      break;
  }
  s.basis_scaling = standardize ? fit_basis_scaling(raw_index, s.basis, sample) : ColumnScaling::identity(s.basis.dim());
  return s;
}

SurvivalDataset scale_data(const FitSetup& setup, const SurvivalDataset& raw) {
  if (raw.p() != setup.p() || raw.nz() != setup.nz())
    throw Error(Errc::DimensionMismatch, "data columns do not match the fitted setup");
  SurvivalDataset out = raw;
  if (out.weight.size() == 0) out.weight = VectorXd::Ones(out.rows());
  setup.scaling.x.apply(out.x);
  setup.scaling.z.apply(out.z);
  return out;
}

PreparedProblem prepare(const FitSetup& setup, const SurvivalDataset& raw) {
  const SurvivalDataset data = scale_data(setup, raw);
  PreparedProblem out;
  out.index = validate_and_index(data);
  const Index p = data.p();
  if (setup.engine == Engine::Logistic) {
    out.stacked = stack_problem(data, out.index, setup.basis, setup.basis_scaling, setup.sample);
    out.design = out.stacked->design;
    out.lik = std::make_unique<BinomialLikelihood>(out.stacked->outcome, out.stacked->weight);
    out.start = PliableModel::zeros(p, out.design.nz(), out.design.n_groups);
    out.start.intercept = null_intercepts(*out.stacked);
  } else if (setup.time_varying()) {
    StackedDesign stacked = build_stacked_design(data, out.index, setup.basis, setup.basis_scaling, setup.sample);
    out.lik = std::make_unique<GroupedCoxLikelihood>(stacked.rows, out.index, data.weight);
    out.design = std::move(stacked.design);
    out.start = PliableModel::zeros(p, out.design.nz());
  } else {
    out.design = PliableDesign::make(data.x, data.z, static_cast<double>(data.rows()));
    out.lik = std::make_unique<CoxLikelihood>(out.index, data.weight);
    out.start = PliableModel::zeros(p, out.design.nz());
  }
  return out;
}

namespace {

// eta_j(t) = a_j + b_j' G~(t) on the fitting scale.
struct EtaParts {
  VectorXd a;
  MatrixXd b;  // n x basis dim
};

EtaParts eta_parts(const FitSetup& setup, const PliableModel& model, const SurvivalDataset& scaled) {
  const Index nz = setup.nz();
  EtaParts e;
  e.a = scaled.x * model.beta;
  if (nz > 0) {
    e.a.noalias() += scaled.z * model.theta0.head(nz);
    const MatrixXd xt = scaled.x * model.theta.leftCols(nz);  // n x nz
    e.a += xt.cwiseProduct(scaled.z).rowwise().sum();
  }
  e.b = scaled.x * model.theta.rightCols(setup.basis.dim());
  return e;
}

VectorXd scaled_basis(const FitSetup& setup, double t) {
  return setup.basis_scaling.apply(setup.basis.evaluate(t));
}

}  // namespace

double cox_loglik(const FitSetup& setup, const PliableModel& model, const SurvivalDataset& raw) {
  const SurvivalDataset data = scale_data(setup, raw);
  const RiskSetIndex index = validate_and_index(data);
  const EtaParts parts = eta_parts(setup, model, data);
  if (!setup.time_varying()) return partial_loglik(parts.a, index, data.weight);
  std::vector<VectorXd> g;
  for (double t : index.failure_times) g.push_back(scaled_basis(setup, t));
  return tv_partial_loglik(index, data.weight, [&](int j, int i) {
    return parts.a(j) + parts.b.row(j).dot(g[static_cast<std::size_t>(i)]);
  });
}

OriginalCoefficients original_scale(const FitSetup& setup, const PliableModel& model) {
  const Index p = setup.p();
  const Index nz = setup.nz();
  const Index q = setup.modifiers();
  VectorXd mmean(q), msd(q);
  mmean << setup.scaling.z.mean, setup.basis_scaling.mean;
  msd << setup.scaling.z.sd, setup.basis_scaling.sd;
  const VectorXd& xm = setup.scaling.x.mean;
  const VectorXd& xs = setup.scaling.x.sd;

  OriginalCoefficients c;
  c.theta.resize(p, q);
  for (Index k = 0; k < p; ++k)
    for (Index l = 0; l < q; ++l) c.theta(k, l) = model.theta(k, l) / (xs(k) * msd(l));
  c.beta = model.beta.cwiseQuotient(xs) - c.theta * mmean;
  VectorXd main(q);
  for (Index l = 0; l < q; ++l) {
    const double t0 = l < nz ? model.theta0(l) : 0.0;
    main(l) = t0 / msd(l) - c.theta.col(l).dot(xm);
  }
  c.theta0 = main.head(nz);
  c.basis_main = main.tail(q - nz);
  c.offset = -model.beta.cwiseQuotient(xs).dot(xm) + xm.dot(c.theta * mmean);
  for (Index l = 0; l < nz; ++l) c.offset -= model.theta0(l) * mmean(l) / msd(l);
  return c;
}

MatrixXd predict_eta(const FitSetup& setup, const PliableModel& model, const SurvivalDataset& raw,
                     std::span<const double> times) {
  if (raw.p() != setup.p() || raw.nz() != setup.nz())
    throw Error(Errc::DimensionMismatch, "data columns do not match the model");
  const OriginalCoefficients c = original_scale(setup, model);
  const Index n = raw.rows();
  const Index nz = setup.nz();
  VectorXd a = raw.x * c.beta;
  if (nz > 0) {
    a.noalias() += raw.z * c.theta0;
    const MatrixXd xt = raw.x * c.theta.leftCols(nz);
    a += xt.cwiseProduct(raw.z).rowwise().sum();
  }
  if (!setup.time_varying()) return a;
  const MatrixXd b = raw.x * c.theta.rightCols(setup.basis.dim());
  auto at = [&](Index j, double t) {
    const VectorXd g = setup.basis.evaluate(t);
    return a(j) + b.row(j).dot(g) + c.basis_main.dot(g);
  };
  if (times.empty()) {
    VectorXd out(n);
    for (Index j = 0; j < n; ++j) out(j) = at(j, raw.time(j));
    return out;
  }
  MatrixXd out(n, static_cast<Index>(times.size()));
  for (Index j = 0; j < n; ++j)
    for (std::size_t t = 0; t < times.size(); ++t) out(j, static_cast<Index>(t)) = at(j, times[t]);
  return out;
}

}  // namespace plasso
