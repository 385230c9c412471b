#include "helpers.hpp"
#include "plasso/csv.hpp"
#include "plasso/error.hpp"
#include "plasso/survival.hpp"

#include <doctest.h>

using namespace plasso;

namespace {

SurvivalDataset make(std::vector<double> t, std::vector<int> s, std::vector<double> w = {}) {
  SurvivalDataset d;
  const auto n = static_cast<Index>(t.size());
  d.time = Eigen::Map<VectorXd>(t.data(), n);
  d.status = Eigen::Map<VectorXi>(s.data(), n);
  d.weight = w.empty() ? VectorXd::Ones(n) : VectorXd(Eigen::Map<VectorXd>(w.data(), n));
  d.x = MatrixXd::Random(n, 1);
  d.z.resize(n, 0);
  d.complete_defaults();
  return d;
}

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("risk sets for distinct times") {
  const auto idx = validate_and_index(make({3, 1, 2}, {1, 1, 1}));
  REQUIRE(idx.m() == 3);
  CHECK(idx.failure_times == std::vector<double>{1, 2, 3});
  CHECK(idx.risk_set(0).size() == 3);
  REQUIRE(idx.risk_set(2).size() == 1);
  CHECK(idx.risk_set(2)[0] == 0);
  for (int i = 0; i < 3; ++i) CHECK(idx.single_failure[static_cast<std::size_t>(i)] >= 0);
}

TEST_CASE("tied failures share one failure time") {
  const auto idx = validate_and_index(make({2, 2, 1}, {1, 1, 1}));
  REQUIRE(idx.m() == 2);
  CHECK(idx.failing[1] == std::vector<int>{0, 1});
  CHECK(idx.d[1] == doctest::Approx(2.0));
  CHECK(idx.single_failure[1] == -1);
}

TEST_CASE("co-index of a censored observation") {
  const auto idx = validate_and_index(make({1, 2, 3, 4}, {0, 1, 0, 1}));
  REQUIRE(idx.m() == 2);
  CHECK(idx.failure_times == std::vector<double>{2, 4});
  // y = 3 is at risk only at the failure time 2.
  CHECK(idx.at_risk_count[2] == 1);
  CHECK(idx.at_risk(2, 0));
  CHECK_FALSE(idx.at_risk(2, 1));
  CHECK(idx.at_risk_count[0] == 0);
}

TEST_CASE("censored observation tied with a failure stays at risk") {
  const auto idx = validate_and_index(make({2, 2, 3}, {1, 0, 1}));
  CHECK(idx.risk_set(0).size() == 3);
  CHECK(idx.at_risk(1, 0));
}

TEST_CASE("risk set duality and nesting on random data") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    testing::RandomSpec spec;
    spec.n = 5 + rep * 2;
    spec.ties = rep % 2 == 0;
    const SurvivalDataset d = testing::random_dataset(spec, rng);
    const auto idx = validate_and_index(d);
    int failures = 0;
    for (int i = 0; i < idx.m(); ++i) {
      failures += static_cast<int>(idx.failing[static_cast<std::size_t>(i)].size());
      CHECK(idx.d[static_cast<std::size_t>(i)] > 0);
      if (i > 0) CHECK(idx.risk_set(i).size() <= idx.risk_set(i - 1).size());
      std::vector<bool> in(static_cast<std::size_t>(d.rows()), false);
      for (int j : idx.risk_set(i)) in[static_cast<std::size_t>(j)] = true;
      for (int j = 0; j < d.rows(); ++j) {
        CHECK(in[static_cast<std::size_t>(j)] == (d.time(j) >= idx.failure_times[static_cast<std::size_t>(i)]));
        CHECK(in[static_cast<std::size_t>(j)] == idx.at_risk(j, i));
      }
    }
    CHECK(failures == d.failures());
  }
}

TEST_CASE("unit weights and distinct times give singleton failure sets") {
  std::mt19937_64 rng(3);
  testing::RandomSpec spec;
  spec.n = 30;
  const auto idx = validate_and_index(testing::random_dataset(spec, rng));
  for (int i = 0; i < idx.m(); ++i) {
    CHECK(idx.failing[static_cast<std::size_t>(i)].size() == 1);
    CHECK(idx.d[static_cast<std::size_t>(i)] == 1.0);
  }
}

TEST_CASE("validation errors") {
  CHECK(code_of([] { validate_and_index(make({1, 2}, {0, 0})); }) == Errc::NoFailures);
  CHECK(code_of([] { validate_and_index(make({1, 2}, {1, 0}, {1, -1})); }) == Errc::NegativeWeight);
  CHECK(code_of([] { validate_and_index(make({1, 2}, {1, 0}, {1, 0})); }) == Errc::NegativeWeight);
  CHECK(code_of([] { validate_and_index(make({1, std::nan("")}, {1, 0})); }) == Errc::NonFinite);
  auto d = make({1, 2}, {1, 1});
  d.x(0, 0) = std::numeric_limits<double>::infinity();
  CHECK(code_of([&] { validate_and_index(d); }) == Errc::NonFinite);
  auto e = make({1, 2}, {1, 1});
  e.weight.resize(1);
  CHECK(code_of([&] { validate_and_index(e); }) == Errc::DimensionMismatch);
}

TEST_CASE("interactions") {
  MatrixXd x(2, 1), z(2, 1);
  x << 1, 2;
  z << 3, 4;
  const MatrixXd w = build_interactions(x, z);
  CHECK(w(0, 0) == 3.0);
  CHECK(w(1, 0) == 8.0);
  CHECK(build_interactions(x, MatrixXd::Zero(2, 3)).isZero(0.0));

  const MatrixXd id = MatrixXd::Identity(2, 2);
  const MatrixXd wi = build_interactions(id, id);
  MatrixXd expected(2, 4);
  expected << 1, 0, 0, 0, 0, 0, 0, 1;
  CHECK(wi == expected);

  const MatrixXd xr = MatrixXd::Random(7, 3), zr = MatrixXd::Random(7, 2);
  const MatrixXd wr = build_interactions(xr, zr);
  for (Index k = 0; k < 3; ++k)
    for (Index l = 0; l < 2; ++l) CHECK(wr.col(k * 2 + l) == xr.col(k).cwiseProduct(zr.col(l)));
  CHECK(code_of([] { build_interactions(MatrixXd::Zero(2, 1), MatrixXd::Zero(3, 1)); }) == Errc::DimensionMismatch);
}

TEST_CASE("standardization") {
  MatrixXd m(2, 1);
  m << 1, 3;
  const ColumnScaling s = fit_column_scaling(m, "X");
  CHECK(s.mean(0) == 2.0);
  CHECK(s.sd(0) == 1.0);
  s.apply(m);
  CHECK(m(0, 0) == -1.0);
  CHECK(m(1, 0) == 1.0);

  MatrixXd r = MatrixXd::Random(5, 3) * 4.0;
  r.col(1).array() += 10.0;
  fit_column_scaling(r, "X").apply(r);
  for (Index c = 0; c < 3; ++c) {
    CHECK(std::abs(r.col(c).mean()) < 1e-12);
    CHECK(std::abs(std::sqrt(r.col(c).squaredNorm() / 5.0) - 1.0) < 1e-12);
  }
  MatrixXd again = r;
  fit_column_scaling(again, "X").apply(again);
  CHECK((again - r).cwiseAbs().maxCoeff() < 1e-12);

  MatrixXd constant = MatrixXd::Random(4, 2);
  constant.col(1).setConstant(2.5);
  try {
    fit_column_scaling(constant, "Z");
    FAIL("expected ConstantColumn");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ConstantColumn);
    CHECK(std::string(e.what()).find("column 1") != std::string::npos);
  }
}

TEST_CASE("csv ingestion") {
  const std::string text = "time,status,weight,x_a,z_b,x_c\n1.5,1,2,0.1,1,3\n2,0,1,0.2,0,4\n";
  const SurvivalDataset d = dataset_from_table(parse_csv(text));
  CHECK(d.rows() == 2);
  CHECK(d.x_names == std::vector<std::string>{"x_a", "x_c"});
  CHECK(d.z_names == std::vector<std::string>{"z_b"});
  CHECK(d.x(1, 1) == 4.0);
  CHECK(d.weight(0) == 2.0);

  const SurvivalDataset nw = dataset_from_table(parse_csv("time,status,x_1\n1,1,0\n2,1,1\n"));
  CHECK(nw.weight == VectorXd::Ones(2));
  CHECK(nw.nz() == 0);

  CHECK(code_of([] { parse_csv("time,status\n1,abc\n"); }) == Errc::ParseError);
  CHECK(code_of([] { parse_csv("time,status\n1\n"); }) == Errc::ParseError);
  CHECK(code_of([] { parse_csv(""); }) == Errc::ParseError);
  CHECK(code_of([] { dataset_from_table(parse_csv("time,x_1\n1,2\n")); }) == Errc::MissingColumn);
  CHECK(code_of([] { read_csv("/nonexistent/file.csv"); }) == Errc::IoError);
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678901234567}) CHECK(std::stod(format_double(v)) == v);
}
