#include "helpers.hpp"
#include "plasso/error.hpp"
#include "plasso/fit_setup.hpp"
#include "plasso/logistic.hpp"
#include "plasso/path_cv.hpp"

#include <doctest.h>

#include <numeric>
#include <sstream>

using namespace plasso;

namespace {

SurvivalDataset nested() {
  // Failures at 1 (risk set of 4) and 3 (risk set of 2).
  SurvivalDataset d;
  d.time = VectorXd(4);
  d.time << 1, 2, 3, 4;
  d.status = VectorXi(4);
  d.status << 1, 0, 1, 0;
  d.weight = VectorXd::Ones(4);
  d.x = MatrixXd(4, 1);
  d.x << 0.3, -0.2, 0.5, 1.0;
  d.z.resize(4, 0);
  return d;
}

// Few failures in large risk sets with mild effects.
SurvivalDataset rare_events(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VectorXd beta(4);
  beta << 0.6, -0.4, 0.0, 0.0;
  SurvivalDataset d = testing::cox_dataset(200, beta, 2, rng, 0.05);
  // Keep the 10 earliest failures; later ones become censored.
  std::vector<int> order(200);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return d.time(a) < d.time(b); });
  int kept = 0;
  for (int j : order)
    if (d.status(j) == 1 && ++kept > 10) d.status(j) = 0;
  return d;
}

}  // namespace

TEST_CASE("one failure with three at risk gives three rows") {
  SurvivalDataset d;
  d.time = VectorXd(3);
  d.time << 1, 2, 3;
  d.status = VectorXi(3);
  d.status << 1, 0, 0;
  d.weight = VectorXd::Ones(3);
  d.x = MatrixXd::Ones(3, 1);
  d.z.resize(3, 0);
  const auto p = stack_problem(d, validate_and_index(d), TimeBasis::none(), ColumnScaling::identity(0), {});
  REQUIRE(p.rows.rows() == 3);
  CHECK(p.outcome(0) == 1.0);
  CHECK(p.outcome(1) == 0.0);
  CHECK(p.outcome(2) == 0.0);
  CHECK(p.design.n_groups == 1);
}

TEST_CASE("nested risk sets give blocks of four and two") {
  const SurvivalDataset d = nested();
  const auto p = stack_problem(d, validate_and_index(d), TimeBasis::none(), ColumnScaling::identity(0), {});
  REQUIRE(p.rows.rows() == 6);
  CHECK(p.rows.group_start == std::vector<int>{0, 4, 6});
  CHECK(p.design.group == std::vector<int>{0, 0, 0, 0, 1, 1});
  CHECK(p.outcome.sum() == 2.0);

  std::ostringstream out;
  write_stacked_csv(out, p, {"x_a"}, {});
  CHECK(out.str().starts_with("time_id,obs,outcome,x_a\n0,0,1,"));
}

TEST_CASE("sampled blocks have at most one plus the sample size rows") {
  std::mt19937_64 rng(1);
  testing::RandomSpec spec;
  spec.n = 50;
  const SurvivalDataset d = testing::random_dataset(spec, rng);
  const auto idx = validate_and_index(d);
  const auto a = stack_problem(d, idx, TimeBasis::none(), ColumnScaling::identity(0), {5, 3});
  const auto b = stack_problem(d, idx, TimeBasis::none(), ColumnScaling::identity(0), {5, 3});
  CHECK(a.rows.obs == b.rows.obs);
  for (int i = 0; i < idx.m(); ++i) {
    const int size = a.rows.group_start[static_cast<std::size_t>(i) + 1] - a.rows.group_start[static_cast<std::size_t>(i)];
    CHECK(size == std::min<int>(static_cast<int>(idx.risk_set(i).size()), 6));
  }
}

TEST_CASE("intercept-only fits") {
  const SurvivalDataset d = nested();
  const auto p = stack_problem(d, validate_and_index(d), TimeBasis::none(), ColumnScaling::identity(0), {});
  const VectorXd b = null_intercepts(p);
  CHECK(b(0) == doctest::Approx(std::log(1.0 / 3.0)));
  CHECK(b(1) == doctest::Approx(0.0));

  PenaltyConfig cfg;
  cfg.lambda = 1e6;
  const PliableModel m = fit_logistic_plasso(p, cfg);
  CHECK(m.all_zero());
  CHECK((m.intercept - b).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("intercept score equations hold at convergence") {
  const SurvivalDataset raw = rare_events(4);
  const FitSetup setup = make_setup(raw, Engine::Logistic, BasisSpec{}, {});
  const PreparedProblem prep = prepare(setup, raw);
  REQUIRE(prep.stacked.has_value());
  PenaltyConfig cfg;
  cfg.lambda = 0.01;
  cfg.tol_inner = 1e-12;
  cfg.tol_kkt = 1e-10;
  const PliableModel m = fit_logistic_plasso(*prep.stacked, cfg, &prep.start);
  CHECK(m.hierarchy_holds());
  const VectorXd eta = m.linear_predictor(prep.stacked->design);
  const auto& rows = prep.stacked->rows;
  for (int i = 0; i < rows.groups(); ++i) {
    double score = 0.0;
    for (int r = rows.group_start[static_cast<std::size_t>(i)]; r < rows.group_start[static_cast<std::size_t>(i) + 1]; ++r)
      score += prep.stacked->weight(r) * (prep.stacked->outcome(r) - 1.0 / (1.0 + std::exp(-eta(r))));
    CHECK(std::abs(score) < 1e-8);
  }
}

TEST_CASE("logistic engine approximates the exact fit with large risk sets") {
  const SurvivalDataset raw = rare_events(7);
  REQUIRE(raw.failures() == 10);
  const FitSetup exact = make_setup(raw, Engine::Exact, BasisSpec{}, {});
  const FitSetup logistic = make_setup(raw, Engine::Logistic, BasisSpec{}, {});
  for (double lambda : {0.02, 0.01, 0.005}) {
    PenaltyConfig cfg;
    cfg.lambda = lambda;
    const PliableModel a = fit_single(exact, raw, cfg);
    const PliableModel b = fit_single(logistic, raw, cfg);
    CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() < 0.05);
    CHECK((a.theta - b.theta).cwiseAbs().maxCoeff() < 0.05);
    CHECK((a.theta0 - b.theta0).cwiseAbs().maxCoeff() < 0.05);
  }
}

TEST_CASE("approximation gap at uniform eta") {
  double previous = std::numeric_limits<double>::infinity();
  for (int r : {5, 50, 500}) {
    SurvivalDataset d;
    d.time = VectorXd::LinSpaced(r, 1, r);
    d.status = VectorXi::Zero(r);
    d.status(0) = 1;
    d.weight = VectorXd::Ones(r);
    d.x = MatrixXd::Zero(r, 1);
    d.z.resize(r, 0);
    const auto idx = validate_and_index(d);
    const double gap = approximation_gap(VectorXd::Zero(r), idx, d.weight);
    // Closed form r log(1 + 1/r) - 1 in absolute value.
    CHECK(gap == doctest::Approx(1.0 - r * std::log1p(1.0 / r)).epsilon(1e-12));
    CHECK(gap < previous);
    previous = gap;
  }
}

TEST_CASE("approximation gap with random eta and risk sets of 100") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> spread(0.0, 1.0);
  const int r = 100;
  SurvivalDataset d;
  d.time = VectorXd::LinSpaced(r, 1, r);
  d.status = VectorXi::Zero(r);
  d.status(0) = 1;
  d.weight = VectorXd::Ones(r);
  d.x = MatrixXd::Zero(r, 1);
  d.z.resize(r, 0);
  const auto idx = validate_and_index(d);
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd eta(r);
    for (int j = 0; j < r; ++j) eta(j) = spread(rng);
    for (double g : approximation_gap_per_time(eta, idx, d.weight)) CHECK(g < 0.02);
  }
}

TEST_CASE("single-element risk set is the worst case") {
  SurvivalDataset d;
  d.time = VectorXd::Ones(1);
  d.status = VectorXi::Ones(1);
  d.weight = VectorXd::Ones(1);
  d.x = MatrixXd::Zero(1, 1);
  d.z.resize(1, 0);
  const double gap = approximation_gap(VectorXd::Zero(1), validate_and_index(d), d.weight);
  CHECK(gap == doctest::Approx(1.0 - std::log(2.0)));
}

TEST_CASE("AUC") {
  const std::vector<double> perfect_s = {0.1, 0.2, 0.8, 0.9}, perfect_y = {0, 0, 1, 1};
  CHECK(auc(perfect_s, perfect_y) == 1.0);
  const std::vector<double> same = {0.5, 0.5, 0.5, 0.5};
  CHECK(auc(same, perfect_y) == 0.5);
  // Pairs: 0.4 beats 0.1 and 0.3 and ties 0.4; 0.8 beats all three.
  const std::vector<double> s = {0.1, 0.4, 0.4, 0.8, 0.3}, y = {0, 1, 0, 1, 0};
  CHECK(auc(s, y) == doctest::Approx(5.5 / 6.0));
  const std::vector<double> ones = {1, 1};
  try {
    auc(ones, ones);
    FAIL("expected OneClassOnly");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::OneClassOnly);
  }
}

TEST_CASE("binomial likelihood derivatives") {
  const VectorXd y = (VectorXd(4) << 1, 0, 1, 0).finished();
  const VectorXd w = (VectorXd(4) << 1, 2, 0.5, 1).finished();
  const BinomialLikelihood lik(y, w);
  const VectorXd eta = (VectorXd(4) << 0.2, -1, 3, 0).finished();
  const auto f = [&](const VectorXd& e) { return lik.loglik(e); };
  const auto q = lik.derivatives(eta);
  CHECK((q.grad - oracle::fd_gradient(f, eta)).norm() < 1e-7);
  CHECK((q.hess_diag - oracle::fd_hessian_diag(f, eta)).norm() < 1e-4);
  CHECK(lik.separable());
  CHECK(std::isfinite(lik.loglik(VectorXd::Constant(4, 800.0))));
}
