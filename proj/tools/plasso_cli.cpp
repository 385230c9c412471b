// Command-line front end. Uses only the C interface of libplasso.
#include "plasso/plasso.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

using nlohmann::ordered_json;

struct Failure : std::runtime_error {
  plasso_status status;
  Failure(plasso_status s, const std::string& msg) : std::runtime_error(msg), status(s) {}
};

void check(plasso_status s) {
  if (s != PLASSO_OK) throw Failure(s, plasso_last_error_message());
}

struct DatasetDeleter {
  void operator()(plasso_dataset* d) const { plasso_dataset_free(d); }
};
struct ModelDeleter {
  void operator()(plasso_model* m) const { plasso_model_free(m); }
};
struct PathDeleter {
  void operator()(plasso_path* p) const { plasso_path_free(p); }
};
using DatasetPtr = std::unique_ptr<plasso_dataset, DatasetDeleter>;
using ModelPtr = std::unique_ptr<plasso_model, ModelDeleter>;
using PathPtr = std::unique_ptr<plasso_path, PathDeleter>;

std::string take(char* s) {
  std::string out(s);
  plasso_free_string(s);
  return out;
}

DatasetPtr load_dataset(const std::string& path) {
  plasso_dataset* d = nullptr;
  check(plasso_dataset_read_csv(path.c_str(), &d));
  return DatasetPtr(d);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure(PLASSO_IO_ERROR, "IoError: cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Common {
  std::string data;
  std::string output;
  std::string engine = "exact";
  std::optional<double> alpha;
  std::string time_basis = "none";
  std::string risk_sample = "all";
  std::uint64_t seed = 1;
  bool quiet = false;
  bool verbose = false;

  // path / cv
  int nlambda = 50;
  double lambda_min_ratio = 0.01;
  std::vector<double> lambdas;
  int nfolds = 5;
  std::string rule = "min";
  std::string model_output;

  // fit
  double lambda = 0.0;

  // predict
  std::string model;
  std::vector<double> times;

  // simbench
  std::string scenario = "prop_hier";
  int n = 100;
  int p = 10;
  std::optional<int> nz;
  int reps = 20;
  int n_test = 1000;
  std::string format = "txt";
};

int env_threads() {
  const char* v = std::getenv("PLASSO_THREADS");
  const int t = v ? std::atoi(v) : 1;
  return t >= 1 ? t : 1;
}

plasso_options make_options(const Common& c) {
  plasso_options o;
  plasso_options_init(&o);
  if (c.engine == "exact") {
    o.engine = PLASSO_ENGINE_EXACT;
  } else if (c.engine == "logistic") {
    o.engine = PLASSO_ENGINE_LOGISTIC;
  } else {
    throw CLI::ValidationError("--engine", "must be exact or logistic");
  }
  if (c.time_basis == "none") {
    o.time_basis = PLASSO_BASIS_NONE;
  } else if (c.time_basis == "linear") {
    o.time_basis = PLASSO_BASIS_LINEAR;
  } else if (c.time_basis.rfind("spline:", 0) == 0) {
    o.time_basis = PLASSO_BASIS_SPLINE;
    try {
      std::size_t used = 0;
      o.spline_knots = std::stoi(c.time_basis.substr(7), &used);
      if (used != c.time_basis.size() - 7 || o.spline_knots < 1) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw CLI::ValidationError("--time-basis", "spline:<k> needs a positive integer k");
    }
  } else {
    throw CLI::ValidationError("--time-basis", "must be linear, spline:<k> or none");
  }
  if (c.risk_sample == "all") {
    o.risk_sample = 0;
  } else {
    try {
      std::size_t used = 0;
      o.risk_sample = std::stoi(c.risk_sample, &used);
      if (used != c.risk_sample.size() || o.risk_sample < 1) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw CLI::ValidationError("--risk-sample", "must be a positive integer or all");
    }
  }
  o.alpha = c.alpha ? *c.alpha : (o.time_basis == PLASSO_BASIS_NONE ? 0.5 : 0.0);
  o.lambda = c.lambda;
  o.nlambda = c.nlambda;
  o.lambda_min_ratio = c.lambda_min_ratio;
  o.lambdas = c.lambdas.empty() ? nullptr : c.lambdas.data();
  o.n_lambdas = c.lambdas.size();
  o.nfolds = c.nfolds;
  if (c.rule == "min") {
    o.rule = PLASSO_RULE_MIN;
  } else if (c.rule == "1se") {
    o.rule = PLASSO_RULE_1SE;
  } else {
    throw CLI::ValidationError("--rule", "must be min or 1se");
  }
  o.seed = c.seed;
  o.sample_seed = c.seed;
  o.threads = env_threads();
  return o;
}

ordered_json manifest(const std::string& command, const Common& c, const plasso_options* o) {
  ordered_json cfg;
  if (command == "simbench") {
    cfg = {{"scenario", c.scenario}, {"n", c.n},        {"p", c.p},           {"nz", c.nz ? *c.nz : -1},
           {"reps", c.reps},         {"n_test", c.n_test}, {"format", c.format}};
  } else if (command == "predict") {
    cfg = {{"data", c.data}, {"model", c.model}, {"times", c.times}};
  } else {
    cfg = {{"data", c.data},
           {"engine", c.engine},
           {"alpha", o->alpha},
           {"time_basis", c.time_basis},
           {"risk_sample", c.risk_sample}};
    if (command == "fit") cfg["lambda"] = c.lambda;
    if (command != "fit") {
      if (c.lambdas.empty()) {
        cfg["nlambda"] = c.nlambda;
        cfg["lambda_min_ratio"] = c.lambda_min_ratio;
      } else {
        cfg["lambdas"] = c.lambdas;
      }
    }
    if (command == "cv") {
      cfg["nfolds"] = c.nfolds;
      cfg["rule"] = c.rule;
    }
  }
  return {{"tool", "plasso"}, {"version", plasso_version()}, {"command", command}, {"seed", c.seed}, {"config", cfg}};
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure(PLASSO_IO_ERROR, "IoError: cannot write " + path);
  out << text;
  if (!out) throw Failure(PLASSO_IO_ERROR, "IoError: failed writing " + path);
}

// JSON documents carry the manifest inline.
std::string with_manifest(const std::string& json, const ordered_json& m) {
  ordered_json doc = ordered_json::parse(json);
  doc["manifest"] = m;
  return doc.dump(2) + "\n";
}

// Tabular outputs get a sidecar file, or a stderr copy when written to stdout.
void emit_manifest_sidecar(const Common& c, const ordered_json& m) {
  if (!c.output.empty() && c.output != "-") {
    write_output(c.output + ".manifest.json", m.dump(2) + "\n");
  } else if (!c.quiet) {
    std::cerr << "manifest: " << m.dump() << '\n';
  }
}

void log(const Common& c, const std::string& msg) {
  if (!c.quiet) std::cerr << msg << '\n';
}

void run_fit(const Common& c) {
  const plasso_options o = make_options(c);
  DatasetPtr data = load_dataset(c.data);
  plasso_model* raw = nullptr;
  check(plasso_fit(data.get(), &o, &raw));
  ModelPtr model(raw);
  char* json = nullptr;
  check(plasso_model_to_json(model.get(), &json));
  write_output(c.output, with_manifest(take(json), manifest("fit", c, &o)));
  if (c.verbose) {
    std::size_t p = 0, q = 0;
    check(plasso_model_dims(model.get(), &p, &q));
    std::vector<double> beta(p);
    check(plasso_model_beta(model.get(), beta.data(), p));
    std::size_t nonzero = 0;
    for (double b : beta) nonzero += b != 0.0;
    log(c, "fit: lambda " + std::to_string(c.lambda) + ", " + std::to_string(nonzero) + " of " + std::to_string(p) +
               " main effects nonzero");
  }
}

void run_path(const Common& c, bool with_cv) {
  const plasso_options o = make_options(c);
  DatasetPtr data = load_dataset(c.data);
  plasso_path* raw = nullptr;
  check(plasso_fit_path(data.get(), &o, with_cv ? 1 : 0, &raw));
  PathPtr path(raw);
  char* json = nullptr;
  check(plasso_path_to_json(path.get(), &json));
  const ordered_json m = manifest(with_cv ? "cv" : "path", c, &o);
  write_output(c.output, with_manifest(take(json), m));
  if (with_cv) {
    std::size_t idx = 0;
    check(plasso_path_selected(path.get(), &idx));
    double lam = 0.0;
    check(plasso_path_lambda(path.get(), idx, &lam));
    if (c.verbose) log(c, "cv: selected lambda " + std::to_string(lam) + " (index " + std::to_string(idx) + ")");
    if (!c.model_output.empty()) {
      plasso_model* sel = nullptr;
      check(plasso_path_model(path.get(), idx, &sel));
      ModelPtr model(sel);
      char* mj = nullptr;
      check(plasso_model_to_json(model.get(), &mj));
      write_output(c.model_output, with_manifest(take(mj), m));
    }
  } else if (c.verbose) {
    log(c, "path: " + std::to_string(plasso_path_size(path.get())) + " lambdas");
  }
}

std::string shortest(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

void run_predict(const Common& c) {
  plasso_model* raw = nullptr;
  check(plasso_model_from_json(read_file(c.model).c_str(), &raw));
  ModelPtr model(raw);
  DatasetPtr data = load_dataset(c.data);
  const std::size_t n = plasso_dataset_rows(data.get());
  const std::size_t cols = c.times.empty() ? 1 : c.times.size();
  std::vector<double> eta(n * cols);
  check(plasso_model_predict(model.get(), data.get(), c.times.empty() ? nullptr : c.times.data(), c.times.size(),
                             eta.data(), eta.size()));
  std::ostringstream out;
  out << "row";
  if (c.times.empty()) {
    out << ",eta,risk";
  } else {
    for (std::size_t t = 0; t < cols; ++t) out << ",eta_t" << t + 1 << ",risk_t" << t + 1;
  }
  out << '\n';
  for (std::size_t j = 0; j < n; ++j) {
    out << j;
    for (std::size_t t = 0; t < cols; ++t) {
      const double e = eta[j * cols + t];
      out << ',' << shortest(e) << ',' << shortest(std::exp(e));
    }
    out << '\n';
  }
  write_output(c.output, out.str());
  emit_manifest_sidecar(c, manifest("predict", c, nullptr));
}

void run_simbench(const Common& c) {
  plasso_sim_options o;
  plasso_sim_options_init(&o);
  o.scenario = c.scenario.c_str();
  o.n = c.n;
  o.p = c.p;
  const bool tv = c.scenario.rfind("tv_", 0) == 0;
  o.nz = c.nz ? *c.nz : (tv ? 0 : 4);
  o.reps = c.reps;
  o.n_test = c.n_test;
  o.seed = c.seed;
  o.threads = env_threads();
  char* table = nullptr;
  int failed = 0;
  check(plasso_simbench(&o, c.format == "csv" ? PLASSO_FORMAT_CSV : PLASSO_FORMAT_TEXT, &table, &failed));
  write_output(c.output, take(table));
  if (failed > 0) log(c, "simbench: " + std::to_string(failed) + " replicate(s) failed and were excluded");
  emit_manifest_sidecar(c, manifest("simbench", c, nullptr));
}

void add_model_flags(CLI::App* sub, Common& c) {
  sub->add_option("--data", c.data, "CSV with time, status, optional weight, x_* and z_* columns")
      ->required();
  sub->add_option("--alpha", c.alpha, "Mixing parameter (default 0.5, or 0 with a time basis)")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--engine", c.engine, "exact or logistic")->check(CLI::IsMember({"exact", "logistic"}));
  sub->add_option("--time-basis", c.time_basis, "linear, spline:<k> or none");
  sub->add_option("--risk-sample", c.risk_sample, "Controls per failure time, or all");
  sub->add_option("--seed", c.seed, "Seed for folds and risk-set sampling");
  sub->add_option("--output", c.output, "Output file (default stdout)");
}

void add_path_flags(CLI::App* sub, Common& c) {
  auto* nl = sub->add_option("--nlambda", c.nlambda, "Grid size")->check(CLI::PositiveNumber);
  auto* ratio = sub->add_option("--lambda-min-ratio", c.lambda_min_ratio, "Smallest lambda / lambda_max");
  sub->add_option("--lambda", c.lambdas, "Explicit decreasing lambda grid")->delimiter(',')->excludes(nl)->excludes(ratio);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pliable lasso for the Cox model"};
  app.require_subcommand(1);
  app.fallthrough();
  Common c;
  app.add_flag("--quiet", c.quiet, "Suppress messages on stderr");
  app.add_flag("--verbose", c.verbose, "Report fit summaries on stderr");
  app.set_version_flag("--version", std::string(plasso_version()));

  auto* fit = app.add_subcommand("fit", "Fit at one lambda and write the model as JSON");
  add_model_flags(fit, c);
  fit->add_option("--lambda", c.lambda, "Penalty level")->required()->check(CLI::NonNegativeNumber);

  auto* path = app.add_subcommand("path", "Fit a warm-started lambda path");
  add_model_flags(path, c);
  add_path_flags(path, c);

  auto* cv = app.add_subcommand("cv", "Fit a path and choose lambda by cross-validation");
  add_model_flags(cv, c);
  add_path_flags(cv, c);
  cv->add_option("--nfolds", c.nfolds, "Number of folds")->check(CLI::Range(2, 1000000));
  cv->add_option("--rule", c.rule, "min or 1se")->check(CLI::IsMember({"min", "1se"}));
  cv->add_option("--model-output", c.model_output, "Write the selected model to this file");

  auto* predict = app.add_subcommand("predict", "Linear predictor and relative risk for new rows");
  predict->add_option("--model", c.model, "Model JSON from fit or cv")->required();
  predict->add_option("--data", c.data, "CSV with the model's x_* and z_* columns")->required();
  predict->add_option("--times", c.times, "Evaluation times for time-varying models")->delimiter(',');
  predict->add_option("--output", c.output, "Output CSV (default stdout)");

  auto* sim = app.add_subcommand("simbench", "Simulation comparison of pliable lasso with lasso baselines");
  sim->add_option("--scenario", c.scenario, "prop_hier, prop_nonhier, tv_hier or tv_nonhier")
      ->check(CLI::IsMember({"prop_hier", "prop_nonhier", "tv_hier", "tv_nonhier"}));
  sim->add_option("--n", c.n, "Training rows")->check(CLI::PositiveNumber);
  sim->add_option("--p", c.p, "Covariates")->check(CLI::PositiveNumber);
  sim->add_option("--nz", c.nz, "Modifiers (default 4, or 0 for time-varying scenarios)")->check(CLI::NonNegativeNumber);
  sim->add_option("--reps", c.reps, "Replicates")->check(CLI::PositiveNumber);
  sim->add_option("--n-test", c.n_test, "Test rows")->check(CLI::PositiveNumber);
  sim->add_option("--seed", c.seed, "Base seed");
  sim->add_option("--out", c.format, "csv or txt")->check(CLI::IsMember({"csv", "txt"}));
  sim->add_option("--output", c.output, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (c.quiet && c.verbose) {
    std::cerr << "error: --quiet and --verbose are exclusive\n";
    return 2;
  }

  try {
    if (*fit) run_fit(c);
    if (*path) run_path(c, false);
    if (*cv) run_path(c, true);
    if (*predict) run_predict(c);
    if (*sim) run_simbench(c);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Failure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
