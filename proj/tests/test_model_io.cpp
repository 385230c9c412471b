#include "helpers.hpp"
#include "plasso/error.hpp"
#include "plasso/model_io.hpp"
#include "plasso/simbench.hpp"

#include <doctest.h>

using namespace plasso;

namespace {

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::InvalidArgument;
}

SurvivalDataset sim_data(Scenario s, int n, std::uint64_t seed) {
  SimDesign d;
  d.scenario = s;
  auto rng = replicate_engine(seed, 0);
  return generate(d, n, rng);
}

}  // namespace

TEST_CASE("model round trip preserves coefficients exactly") {
  const SurvivalDataset raw = sim_data(Scenario::PropHier, 100, 1);
  const FitSetup setup = make_setup(raw, Engine::Exact, BasisSpec{}, {});
  PenaltyConfig cfg;
  cfg.lambda = 0.03;
  const PliableModel m = fit_single(setup, raw, cfg);
  const std::string text = model_to_json(setup, m).dump(2);
  const LoadedModel back = model_from_string(text);
  CHECK(back.model.beta == m.beta);
  CHECK(back.model.theta == m.theta);
  CHECK(back.model.theta0 == m.theta0);
  CHECK(back.model.lambda == m.lambda);
  CHECK(back.setup.scaling.x.mean == setup.scaling.x.mean);
  CHECK(back.setup.scaling.z.sd == setup.scaling.z.sd);
  CHECK(model_to_json(back.setup, back.model).dump(2) == text);

  // Prediction from the loaded model equals the in-memory one, and matches the
  // fitting-scale predictor up to the constant removed by centering.
  const VectorXd loaded = predict_eta(back.setup, back.model, raw);
  CHECK(loaded == predict_eta(setup, m, raw));
  const PreparedProblem prep = prepare(setup, raw);
  const VectorXd in_memory = m.linear_predictor(prep.design);
  const VectorXd shift = loaded - in_memory;
  CHECK((shift.array() - shift.mean()).abs().maxCoeff() <= 1e-12 * std::max(1.0, in_memory.cwiseAbs().maxCoeff()));
}

TEST_CASE("time-varying round trip and prediction at chosen times") {
  const SurvivalDataset raw = sim_data(Scenario::TvHier, 150, 2);
  const FitSetup setup = make_setup(raw, Engine::Logistic, BasisSpec::parse("spline:3"), {5, 9});
  PenaltyConfig cfg;
  cfg.alpha = 0.0;
  cfg.lambda = 0.01;
  const PliableModel m = fit_single(setup, raw, cfg);
  const LoadedModel back = model_from_string(model_to_json(setup, m).dump());
  CHECK(back.setup.basis.knots == setup.basis.knots);
  CHECK(back.model.intercept == m.intercept);

  const std::vector<double> times = {0.1, 0.5, 1.0};
  const MatrixXd a = predict_eta(setup, m, raw, times);
  const MatrixXd b = predict_eta(back.setup, back.model, raw, times);
  CHECK(a == b);
  REQUIRE(a.cols() == 3);

  // Against the fitting-scale predictor, up to a per-time constant the partial likelihood ignores.
  const SurvivalDataset s2 = scale_data(setup, raw);
  const VectorXd g = setup.basis_scaling.apply(setup.basis.evaluate(0.5));
  auto fitting = [&](Index j) {
    double e = s2.x.row(j).dot(m.beta) + s2.z.row(j).dot(m.theta0.head(setup.nz()));
    for (Index k = 0; k < setup.p(); ++k)
      e += s2.x(j, k) * (s2.z.row(j).dot(m.theta.row(k).head(setup.nz())) + g.dot(m.theta.row(k).tail(g.size())));
    return e;
  };
  for (Index j = 1; j < raw.rows(); j += 13)
    CHECK(std::abs((a(j, 1) - a(0, 1)) - (fitting(j) - fitting(0))) < 1e-10);
}

TEST_CASE("trivial predictions") {
  SurvivalDataset raw;
  raw.time = VectorXd::LinSpaced(4, 1, 4);
  raw.status = VectorXi::Ones(4);
  raw.weight = VectorXd::Ones(4);
  raw.x = MatrixXd(4, 2);
  raw.x << 2, 0, 1, 1, 0, 3, 4, 1;
  raw.z.resize(4, 0);
  raw.complete_defaults();
  const FitSetup setup = make_setup(raw, Engine::Exact, BasisSpec{}, {}, false);
  PliableModel m = PliableModel::zeros(2, 0);
  CHECK(predict_eta(setup, m, raw).isZero(0.0));
  m.beta(0) = 1.0;
  CHECK(predict_eta(setup, m, raw)(0) == 2.0);
}

TEST_CASE("schema and parse errors") {
  CHECK(code_of([] { model_from_string(R"({"schema": "plasso.model/2"})"); }) == Errc::SchemaMismatch);
  CHECK(code_of([] { model_from_string(R"({"coefficients": {}})"); }) == Errc::SchemaMismatch);
  CHECK(code_of([] { model_from_string("not json"); }) == Errc::ParseError);
  CHECK(code_of([] { model_from_string(R"({"schema": "plasso.model/1"})"); }) == Errc::ParseError);

  const SurvivalDataset raw = sim_data(Scenario::PropHier, 60, 3);
  const FitSetup setup = make_setup(raw, Engine::Exact, BasisSpec{}, {});
  auto j = model_to_json(setup, PliableModel::zeros(setup.p(), setup.nz()));
  j["coefficients"]["beta"] = {1.0};
  CHECK(code_of([&] { model_from_json(j); }) == Errc::ParseError);

  SurvivalDataset narrow = raw;
  narrow.x = raw.x.leftCols(3);
  CHECK(code_of([&] { predict_eta(setup, PliableModel::zeros(setup.p(), setup.nz()), narrow); }) ==
        Errc::DimensionMismatch);
}

TEST_CASE("numbers serialize with full precision") {
  CHECK(number(std::numeric_limits<double>::quiet_NaN()).is_null());
  CHECK(number(std::numeric_limits<double>::infinity()).is_null());
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -123456.789})
    CHECK(nlohmann::ordered_json::parse(number(v).dump()).get<double>() == v);
}

TEST_CASE("path documents") {
  const SurvivalDataset raw = sim_data(Scenario::PropHier, 80, 4);
  const FitSetup setup = make_setup(raw, Engine::Exact, BasisSpec{}, {});
  PathConfig cfg;
  cfg.nlambda = 4;
  cfg.nfolds = 3;
  const PathResult r = cv_path(setup, raw, cfg);
  const auto j = path_to_json(setup, r, cfg);
  CHECK(j["schema"] == kPathSchema);
  CHECK(j["models"].size() == 4);
  CHECK(j["cv"]["cv_mean"].size() == 4);
  CHECK(j["models"][0]["nonzero_beta"] == 0);
  CHECK(j["models"][0]["error"].is_null());
}
