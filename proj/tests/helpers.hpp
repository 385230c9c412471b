#pragma once

#include "oracles.hpp"
#include "plasso/survival.hpp"

#include <random>

namespace testing {

struct RandomSpec {
  int n = 20;
  int p = 3;
  int nz = 2;
  bool ties = false;
  bool weights = false;
  double censor = 0.3;
};

/// Small random dataset. With ties, times are drawn from a handful of values.
inline plasso::SurvivalDataset random_dataset(const RandomSpec& s, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> level(1, 4);
  plasso::SurvivalDataset d;
  d.time.resize(s.n);
  d.status.resize(s.n);
  d.weight.resize(s.n);
  d.x.resize(s.n, s.p);
  d.z.resize(s.n, s.nz);
  for (int j = 0; j < s.n; ++j) {
    d.time(j) = s.ties ? static_cast<double>(level(rng)) : 0.1 + 3.0 * unif(rng);
    d.status(j) = unif(rng) < s.censor ? 0 : 1;
    d.weight(j) = s.weights ? 0.5 + 1.5 * unif(rng) : 1.0;
    for (int k = 0; k < s.p; ++k) d.x(j, k) = normal(rng);
    for (int l = 0; l < s.nz; ++l) d.z(j, l) = normal(rng);
  }
  d.status(0) = 1;
  d.complete_defaults();
  return d;
}

inline oracle::Surv surv(const plasso::SurvivalDataset& d) { return {d.time, d.status, d.weight}; }

/// Dataset with hazard exp(x' beta), exponential times and Exp(rate) censoring.
inline plasso::SurvivalDataset cox_dataset(int n, const Eigen::VectorXd& beta, int nz, std::mt19937_64& rng,
                                           double censor_rate = 0.5) {
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> expo(1.0);
  plasso::SurvivalDataset d;
  const auto p = beta.size();
  d.time.resize(n);
  d.status.resize(n);
  d.weight = Eigen::VectorXd::Ones(n);
  d.x.resize(n, p);
  d.z.resize(n, nz);
  for (int j = 0; j < n; ++j) {
    for (Eigen::Index k = 0; k < p; ++k) d.x(j, k) = normal(rng);
    for (int l = 0; l < nz; ++l) d.z(j, l) = normal(rng);
    const double y = expo(rng) * std::exp(-d.x.row(j).dot(beta));
    const double c = expo(rng) / censor_rate;
    d.time(j) = std::min(y, c);
    d.status(j) = y <= c ? 1 : 0;
  }
  d.complete_defaults();
  return d;
}

}  // namespace testing
