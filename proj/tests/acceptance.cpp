// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset.
#include "helpers.hpp"
#include "plasso/cox_objective.hpp"
#include "plasso/csv.hpp"
#include "plasso/fit_setup.hpp"
#include "plasso/logistic.hpp"
#include "plasso/path_cv.hpp"
#include "plasso/simbench.hpp"
#include "plasso/solver.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>

using namespace plasso;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel_err(const VectorXd& a, const VectorXd& b) { return (a - b).norm() / std::max(b.norm(), 1e-12); }

// 1. Analytic derivatives against central differences.
Outcome gradient_fidelity() {
  std::mt19937_64 rng(101);
  double worst_g = 0.0, worst_h = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    testing::RandomSpec spec;
    spec.n = 4 + rep % 9;
    spec.p = 1 + rep % 3;
    spec.nz = rep % 3;
    spec.ties = rep % 2 == 0;
    spec.weights = rep % 4 < 2;
    const SurvivalDataset d = testing::random_dataset(spec, rng);
    const RiskSetIndex idx = validate_and_index(d);
    const VectorXd eta = d.x * VectorXd::Random(spec.p);
    const auto f = [&](const VectorXd& e) { return partial_loglik(e, idx, d.weight); };
    const QuadraticApprox q = derivatives(eta, idx, d.weight);
    worst_g = std::max(worst_g, rel_err(q.grad, oracle::fd_gradient(f, eta)));
    worst_h = std::max(worst_h, rel_err(q.hess_diag, oracle::fd_hessian_diag(f, eta)));
  }
  return {worst_g <= 1e-6 && worst_h <= 1e-4,
          fmt("max rel err gradient %.2e (<= 1e-6), Hessian diagonal %.2e (<= 1e-4) on 100 datasets", worst_g, worst_h)};
}

// 2. lambda = 0 without modifiers equals an independent Newton fit.
Outcome unpenalized_equivalence() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  int fits = 0;
  for (int p = 1; p <= 5; ++p) {
    for (int rep = 0; rep < 2; ++rep) {
      VectorXd beta = VectorXd::LinSpaced(p, 0.8, -0.6);
      const SurvivalDataset d = testing::cox_dataset(50, beta, 0, rng, 0.4);
      const CoxLikelihood lik(validate_and_index(d), d.weight);
      PenaltyConfig cfg;
      cfg.lambda = 0.0;
      const PliableModel m = fit(PliableDesign::make(d.x, d.z, 50.0), lik, cfg);
      const VectorXd ref = oracle::newton_cox(testing::surv(d), d.x);
      worst = std::max(worst, (m.beta - ref).cwiseAbs().maxCoeff());
      ++fits;
    }
  }
  return {worst <= 1e-4, fmt("max |beta - beta_newton| = %.2e (<= 1e-4) over %d fits, n = 50, p = 1..5", worst, fits)};
}

// 3. KKT residuals and hierarchy along 50-point paths.
Outcome kkt_and_hierarchy() {
  double worst = 0.0;
  int violations = 0, models = 0, failed = 0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SimDesign sd;
    auto rng = replicate_engine(seed, 0);
    const SurvivalDataset raw = generate(sd, 100, rng);
    const FitSetup setup = make_setup(raw, Engine::Exact, BasisSpec{}, {});
    const PreparedProblem prep = prepare(setup, raw);
    const SurvivalDataset scaled = scale_data(setup, raw);
    PathConfig cfg;
    cfg.nlambda = 50;
    const PathResult path = fit_path(prep.design, *prep.lik, prep.start, cfg);
    for (std::size_t l = 0; l < path.models.size(); ++l) {
      const PliableModel& m = path.models[l];
      ++models;
      if (!path.errors[l].empty()) ++failed;
      const VectorXd eta = m.linear_predictor(prep.design);
      const VectorXd grad = oracle::gradient(testing::surv(scaled), eta);
      worst = std::max(worst, kkt_residual(prep.design, m, grad, path.lambdas[l], cfg.penalty.alpha));
      for (Index k = 0; k < m.beta.size(); ++k)
        if (m.beta(k) == 0.0 && (m.theta.row(k).array() != 0.0).any()) ++violations;
    }
  }
  return {worst <= 1e-4 && violations == 0 && failed == 0,
          fmt("max KKT residual %.2e (<= 1e-4), %d hierarchy violations, %d failed fits over %d models", worst,
              violations, failed, models)};
}

// 4. Fitting at the refined lambda_max gives all-zero blocks.
Outcome lambda_max_correctness() {
  int zero = 0, total = 0;
  double ratio_min = 1e300, ratio_max = 0.0;
  std::mt19937_64 rng(404);
  for (int rep = 0; rep < 20; ++rep) {
    SurvivalDataset raw;
    if (rep % 2 == 0) {
      SimDesign sd;
      auto eng = replicate_engine(40 + rep, 0);
      raw = generate(sd, 100, eng);
    } else {
      testing::RandomSpec spec;
      spec.n = 40;
      spec.p = 5;
      spec.nz = 2;
      spec.ties = rep % 4 == 1;
      spec.weights = rep % 4 == 3;
      raw = testing::random_dataset(spec, rng);
    }
    const FitSetup setup = make_setup(raw, Engine::Exact, BasisSpec{}, {});
    const PreparedProblem prep = prepare(setup, raw);
    PenaltyConfig pen;
    const LambdaMax lm = lambda_max(prep.design, *prep.lik, prep.start, pen);
    pen.lambda = lm.value;
    const PliableModel m = fit(prep.design, *prep.lik, pen, &prep.start);
    zero += m.all_zero() ? 1 : 0;
    ++total;
    ratio_min = std::min(ratio_min, lm.value / lm.formula);
    ratio_max = std::max(ratio_max, lm.value / lm.formula);
  }
  return {zero == total, fmt("%d/%d datasets all-zero at lambda_max (refined / formula in [%.3f, %.3f])", zero, total,
                             ratio_min, ratio_max)};
}

// 5. Weighted forms with unit weights and distinct times equal the unweighted ones.
Outcome breslow_reduction() {
  std::mt19937_64 rng(505);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    testing::RandomSpec spec;
    spec.n = 5 + rep % 20;
    const SurvivalDataset d = testing::random_dataset(spec, rng);
    const RiskSetIndex idx = validate_and_index(d);
    const VectorXd eta = VectorXd::Random(spec.n) * 2.0;
    const QuadraticApprox q = derivatives(eta, idx, d.weight);
    VectorXd g, h;
    oracle::unweighted_derivatives(d.time, d.status, eta, g, h);
    worst = std::max({worst, (q.grad - g).cwiseAbs().maxCoeff(), (q.hess_diag - h).cwiseAbs().maxCoeff()});
    // Unweighted partial likelihood: sum over failures of eta_i - log sum_{R_i} e^eta.
    double l = 0.0;
    for (int i = 0; i < spec.n; ++i) {
      if (d.status(i) != 1) continue;
      double s = 0.0;
      for (int k = 0; k < spec.n; ++k)
        if (d.time(k) >= d.time(i)) s += std::exp(eta(k));
      l += eta(i) - std::log(s);
    }
    worst = std::max(worst, std::abs(partial_loglik(eta, idx, d.weight) - l) / std::max(1.0, std::abs(l)));
  }
  return {worst <= 1e-12, fmt("max discrepancy %.2e (<= 1e-12) on 100 instances", worst)};
}

// 6. Zero screen and beta-only check against brute-force block minimization.
Outcome screen_soundness() {
  std::mt19937_64 rng(606);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.2, 1.5);
  double worst = 0.0;
  int zero_fired = 0, beta_fired = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const int nz = 1 + rep % 4;
    const int n = 15;
    MatrixXd a(n, 1 + nz);
    VectorXd w(n);
    for (int j = 0; j < n; ++j) {
      w(j) = unif(rng);
      for (int c = 0; c <= nz; ++c) a(j, c) = normal(rng);
    }
    BlockQuadratic b;
    b.gram = a.transpose() * w.asDiagonal() * a / n;
    b.linear.resize(1 + nz);
    const double scale = 0.05 + 0.1 * (rep % 5);
    for (int c = 0; c <= nz; ++c) b.linear(c) = scale * normal(rng);
    const double lambda = 0.25, alpha = 0.2 * (rep % 5);
    const VectorXd ref = oracle::block_minimizer(b.gram, b.linear, lambda, alpha);
    if (screen_block_zero(b.linear, lambda, alpha)) {
      ++zero_fired;
      worst = std::max(worst, ref.cwiseAbs().maxCoeff());
    }
    const BetaOnlyResult bo = solve_beta_only(b, lambda, alpha);
    if (bo.theta_zero) {
      ++beta_fired;
      worst = std::max({worst, ref.tail(nz).cwiseAbs().maxCoeff(), std::abs(ref(0) - bo.beta)});
    }
  }
  return {worst < 1e-5 && zero_fired > 0 && beta_fired > 0,
          fmt("zero screen fired %d times, beta-only %d times, max discrepancy %.2e (< 1e-5) on 200 blocks",
              zero_fired, beta_fired, worst)};
}

std::string nll_summary(const SimResult& r) {
  std::string s;
  for (const auto& m : r.mean) s += fmt("%s%s %.1f", s.empty() ? "" : ", ", m.method.c_str(), m.negative_ll);
  return s;
}

// 7. Simulation ordering and magnitude.
Outcome simulation_reproduction() {
  const int threads = threads_from_env();
  SimDesign d4;
  d4.n_reps = 20;
  d4.seed = 1;
  d4.threads = threads;
  const auto t0 = std::chrono::steady_clock::now();
  const SimResult r4 = run_comparison(d4);
  int wins4 = 0;
  for (const auto& rep : r4.reps) wins4 += rep[0].negative_ll < rep[1].negative_ll ? 1 : 0;
  const double plasso4 = r4.mean.empty() ? NAN : r4.mean[0].negative_ll;
  const double off = std::abs(plasso4 - 2850.318) / 2850.318;

  SimDesign d20 = d4;
  d20.nz = 20;
  d20.n_reps = 10;
  const SimResult r20 = run_comparison(d20);
  int wins20 = 0;
  for (const auto& rep : r20.reps) wins20 += rep[0].negative_ll < rep[2].negative_ll ? 1 : 0;
  const bool order20 = !r20.mean.empty() && r20.mean[0].negative_ll < r20.mean[2].negative_ll &&
                       2 * wins20 > static_cast<int>(r20.reps.size());
  const double secs = seconds_since(t0);

  const bool pass = r4.reps.size() == 20 && wins4 >= 15 && off <= 0.10 && order20 && r20.failures.empty();
  return {pass, fmt("nz=4: plasso < lasso(main) in %d/%zu reps (>= 15), mean plasso NLL %.1f (%.1f%% from 2850.3, <= 10%%) "
                    "[%s]; nz=20: plasso < lasso(full) in %d/%zu reps [%s]; %.0f s",
                    wins4, r4.reps.size(), plasso4, 100 * off, nll_summary(r4).c_str(), wins20, r20.reps.size(),
                    nll_summary(r20).c_str(), secs)};
}

// 8. Time-varying recovery with the logistic engine.
Outcome timevarying_recovery() {
  SimDesign d;
  d.scenario = Scenario::TvHier;
  d.n = 500;
  d.p = 10;
  d.nz = 0;
  d.spline_knots = 5;
  d.risk_sample = 5;
  d.n_reps = 20;
  d.seed = 1;
  d.threads = threads_from_env();
  const auto t0 = std::chrono::steady_clock::now();
  const SimResult r = run_comparison(d);
  const double secs = seconds_since(t0);
  if (r.mean.size() < 5) return {false, fmt("%zu replicate failures", r.failures.size())};
  const double fn = r.mean[0].fn_theta;
  const double nll = r.mean[0].negative_ll;
  const double lo = r.mean[3].negative_ll, hi = r.mean[4].negative_ll;
  const bool pass = r.failures.empty() && fn <= 1.0 && nll >= lo && nll <= hi;
  return {pass, fmt("mean fn(theta) %.2f (<= 1.0), plasso NLL %.1f in [true %.1f, null %.1f], %zu/20 reps ok; %.0f s",
                    fn, nll, lo, hi, r.reps.size(), secs)};
}

// Few failures in large risk sets with mild effects.
SurvivalDataset rare_events(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VectorXd beta(5);
  beta << 0.5, -0.5, 0.3, 0.0, 0.0;
  SurvivalDataset d = testing::cox_dataset(200, beta, 2, rng, 0.05);
  std::vector<int> order(200);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return d.time(a) < d.time(b); });
  int kept = 0;
  for (int j : order)
    if (d.status(j) == 1 && ++kept > 10) d.status(j) = 0;
  return d;
}

// 9. Logistic engine against the exact engine, and the approximation gap.
Outcome logistic_approximation() {
  double worst = 0.0;
  int fits = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SurvivalDataset raw = rare_events(seed);
    const FitSetup exact = make_setup(raw, Engine::Exact, BasisSpec{}, {});
    const FitSetup logistic = make_setup(raw, Engine::Logistic, BasisSpec{}, {});
    PathConfig cfg;
    cfg.nlambda = 10;
    cfg.lambda_min_ratio = 0.05;
    const PathResult path = fit_path(exact, raw, cfg);
    cfg.lambdas = path.lambdas;
    const PathResult lpath = fit_path(logistic, raw, cfg);
    for (std::size_t l = 0; l < path.models.size(); ++l) {
      const PliableModel& a = path.models[l];
      const PliableModel& b = lpath.models[l];
      worst = std::max({worst, (a.beta - b.beta).cwiseAbs().maxCoeff(), (a.theta - b.theta).cwiseAbs().maxCoeff(),
                        (a.theta0 - b.theta0).cwiseAbs().maxCoeff()});
      ++fits;
    }
  }

  const int r = 100;
  SurvivalDataset d;
  d.time = VectorXd::LinSpaced(r, 1, r);
  d.status = VectorXi::Zero(r);
  d.status(0) = 1;
  d.weight = VectorXd::Ones(r);
  d.x = MatrixXd::Zero(r, 1);
  d.z.resize(r, 0);
  const RiskSetIndex idx = validate_and_index(d);
  double gap = approximation_gap_per_time(VectorXd::Zero(r), idx, d.weight)[0];
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> spread(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    VectorXd eta(r);
    for (int j = 0; j < r; ++j) eta(j) = spread(rng);
    gap = std::max(gap, approximation_gap_per_time(eta, idx, d.weight)[0]);
  }
  return {worst <= 0.05 && gap < 0.02,
          fmt("max coefficient difference %.4f (<= 0.05) over %d matched fits, n = 200, 10 failures; "
              "max gap per time %.4f (< 0.02) at r = 100",
              worst, fits, gap)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 10. Two identical CLI runs produce identical bytes.
Outcome reproducibility() {
  const fs::path dir = fs::temp_directory_path() / ("plasso_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  SimDesign sd;
  auto rng = replicate_engine(10, 0);
  const SurvivalDataset data = generate(sd, 100, rng);
  {
    std::ofstream f(dir / "d.csv");
    f << "time,status";
    for (int k = 0; k < sd.p; ++k) f << ",x_" << k + 1;
    for (int l = 0; l < sd.nz; ++l) f << ",z_" << l + 1;
    f << '\n';
    for (Index j = 0; j < data.rows(); ++j) {
      f << format_double(data.time(j)) << ',' << data.status(j);
      for (int k = 0; k < sd.p; ++k) f << ',' << format_double(data.x(j, k));
      for (int l = 0; l < sd.nz; ++l) f << ',' << format_double(data.z(j, l));
      f << '\n';
    }
  }
  const std::string csv = (dir / "d.csv").string();
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"cv", "cv --data " + csv + " --alpha 0.5 --nfolds 5 --seed 1 --output "},
      {"fit", "fit --data " + csv + " --lambda 0.02 --engine logistic --time-basis spline:3 --risk-sample 5 --seed 4 "
              "--output "},
      {"simbench", "simbench --scenario prop_hier --n 60 --p 6 --nz 4 --reps 2 --n-test 200 --seed 7 --out csv --output "},
  };
  int identical = 0;
  std::string failed;
  for (const auto& [name, args] : commands) {
    std::string outputs[2];
    bool ok = true;
    for (int run = 0; run < 2; ++run) {
      const fs::path out = dir / (name + std::to_string(run));
      const std::string cmd = std::string(PLASSO_CLI_PATH) + " --quiet " + args + out.string();
      ok = ok && std::system(cmd.c_str()) == 0;
      outputs[run] = slurp(out);
      if (fs::exists(out.string() + ".manifest.json")) outputs[run] += slurp(out.string() + ".manifest.json");
    }
    if (ok && !outputs[0].empty() && outputs[0] == outputs[1]) {
      ++identical;
    } else {
      failed += " " + name;
    }
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return {identical == static_cast<int>(commands.size()),
          fmt("%d/%zu commands byte-identical across two runs (cv, fit, simbench)%s%s", identical, commands.size(),
              failed.empty() ? "" : "; differing:", failed.c_str())};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;  // 0 when only a target
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  const std::vector<Criterion> criteria = {
      {1, "gradient fidelity", 10, gradient_fidelity},
      {2, "unpenalized equivalence", 5, unpenalized_equivalence},
      {3, "KKT and hierarchy", 60, kkt_and_hierarchy},
      {4, "lambda_max correctness", 30, lambda_max_correctness},
      {5, "Breslow reduction", 0, breslow_reduction},
      {6, "screen soundness", 0, screen_soundness},
      {7, "simulation reproduction", 0, simulation_reproduction},
      {8, "time-varying recovery", 0, timevarying_recovery},
      {9, "logistic approximation", 0, logistic_approximation},
      {10, "reproducibility", 0, reproducibility},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (c.limit_seconds > 0 && secs >= c.limit_seconds) {
      o.pass = false;
      o.detail += fmt("; runtime %.1f s exceeds %.0f s", secs, c.limit_seconds);
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << "): " << o.detail
              << fmt(" [%.1f s]", secs) << std::endl;
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
