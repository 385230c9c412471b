#include "plasso/plasso.h"

#include "plasso/csv.hpp"
#include "plasso/error.hpp"
#include "plasso/model_io.hpp"
#include "plasso/simbench.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>
#include <string>

using namespace plasso;

struct plasso_dataset {
  CsvTable table;
  bool has_outcome = false;
  SurvivalDataset data;
};

struct plasso_model {
  FitSetup setup;
  PliableModel model;
};

struct plasso_path {
  FitSetup setup;
  PathConfig config;
  PathResult result;
};

namespace {

thread_local std::string last_error;

plasso_status to_status(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return PLASSO_INVALID_ARGUMENT;
    case Errc::DimensionMismatch: return PLASSO_DIMENSION_MISMATCH;
    case Errc::NoFailures: return PLASSO_NO_FAILURES;
    case Errc::NonFinite: return PLASSO_NON_FINITE;
    case Errc::NegativeWeight: return PLASSO_NEGATIVE_WEIGHT;
    case Errc::ConstantColumn: return PLASSO_CONSTANT_COLUMN;
    case Errc::AlphaOne: return PLASSO_ALPHA_ONE;
    case Errc::FoldWithoutFailures: return PLASSO_FOLD_WITHOUT_FAILURES;
    case Errc::PatternNeedsDims: return PLASSO_PATTERN_NEEDS_DIMS;
    case Errc::OneClassOnly: return PLASSO_ONE_CLASS_ONLY;
    case Errc::SchemaMismatch: return PLASSO_SCHEMA_MISMATCH;
    case Errc::MissingColumn: return PLASSO_MISSING_COLUMN;
    case Errc::ParseError: return PLASSO_PARSE_ERROR;
    case Errc::IoError: return PLASSO_IO_ERROR;
  }
  return PLASSO_INTERNAL_ERROR;
}

plasso_status fail(plasso_status s, std::string msg) {
  last_error = std::move(msg);
  return s;
}

template <class F>
plasso_status guard(F&& f) {
  try {
    last_error.clear();
    f();
    return PLASSO_OK;
  } catch (const Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(PLASSO_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(PLASSO_INTERNAL_ERROR, e.what());
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

plasso_dataset* make_dataset(CsvTable table) {
  auto* d = new plasso_dataset;
  d->table = std::move(table);
  d->has_outcome = d->table.find("time") && d->table.find("status");
  try {
    if (d->has_outcome) d->data = dataset_from_table(d->table);
  } catch (...) {
    delete d;
    throw;
  }
  return d;
}

const SurvivalDataset& outcome_data(const plasso_dataset* d) {
  if (!d->has_outcome) throw Error(Errc::MissingColumn, "dataset needs time and status columns");
  return d->data;
}

PenaltyConfig penalty_from(const plasso_options& o) {
  PenaltyConfig c;
  c.lambda = o.lambda;
  c.alpha = o.alpha;
  c.outer_max_iter = o.outer_max_iter;
  c.inner_max_iter = o.inner_max_iter;
  c.tol_outer = o.tol_outer;
  c.tol_inner = o.tol_inner;
  c.tol_kkt = o.tol_kkt;
  return c;
}

FitSetup setup_from(const SurvivalDataset& data, const plasso_options& o) {
  if (o.engine != PLASSO_ENGINE_EXACT && o.engine != PLASSO_ENGINE_LOGISTIC)
    throw Error(Errc::InvalidArgument, "unknown engine");
  BasisSpec basis;
  switch (o.time_basis) {
    case PLASSO_BASIS_NONE: break;
    case PLASSO_BASIS_LINEAR: basis = {BasisKind::Linear, 0}; break;
    case PLASSO_BASIS_SPLINE: basis = {BasisKind::LinearSpline, o.spline_knots}; break;
    default: throw Error(Errc::InvalidArgument, "unknown time basis");
  }
  if (o.risk_sample < 0) throw Error(Errc::InvalidArgument, "risk_sample must be nonnegative");
  return make_setup(data, o.engine == PLASSO_ENGINE_EXACT ? Engine::Exact : Engine::Logistic, basis,
                    {o.risk_sample, o.sample_seed}, o.standardize != 0);
}

// Rows of `d` as a dataset with the columns the model was fitted on.
SurvivalDataset covariates_for(const plasso_model* m, const plasso_dataset* d, bool need_time) {
  SurvivalDataset raw;
  raw.x = columns_by_name(d->table, m->setup.x_names);
  raw.z = columns_by_name(d->table, m->setup.z_names);
  raw.x_names = m->setup.x_names;
  raw.z_names = m->setup.z_names;
  const auto n = static_cast<Index>(d->table.rows());
  if (need_time) {
    const auto& t = d->table.column("time");
    raw.time = Eigen::Map<const VectorXd>(t.data(), n);
  } else {
    raw.time = VectorXd::Zero(n);
  }
  raw.status = VectorXi::Zero(n);
  raw.weight = VectorXd::Ones(n);
  return raw;
}

}  // namespace

extern "C" {

const char* plasso_version(void) { return PLASSO_VERSION_STRING; }

const char* plasso_status_string(plasso_status status) {
  switch (status) {
    case PLASSO_OK: return "Ok";
    case PLASSO_INVALID_ARGUMENT: return "InvalidArgument";
    case PLASSO_DIMENSION_MISMATCH: return "DimensionMismatch";
    case PLASSO_NO_FAILURES: return "NoFailures";
    case PLASSO_NON_FINITE: return "NonFinite";
    case PLASSO_NEGATIVE_WEIGHT: return "NegativeWeight";
    case PLASSO_CONSTANT_COLUMN: return "ConstantColumn";
    case PLASSO_ALPHA_ONE: return "AlphaOne";
    case PLASSO_FOLD_WITHOUT_FAILURES: return "FoldWithoutFailures";
    case PLASSO_PATTERN_NEEDS_DIMS: return "PatternNeedsDims";
    case PLASSO_ONE_CLASS_ONLY: return "OneClassOnly";
    case PLASSO_SCHEMA_MISMATCH: return "SchemaMismatch";
    case PLASSO_MISSING_COLUMN: return "MissingColumn";
    case PLASSO_PARSE_ERROR: return "ParseError";
    case PLASSO_IO_ERROR: return "IoError";
    case PLASSO_NULL_POINTER: return "NullPointer";
    case PLASSO_INDEX_OUT_OF_RANGE: return "IndexOutOfRange";
    case PLASSO_INTERNAL_ERROR: return "InternalError";
  }
  return "Unknown";
}

const char* plasso_last_error_message(void) { return last_error.c_str(); }

void plasso_free_string(char* s) { std::free(s); }

void plasso_options_init(plasso_options* o) {
  if (!o) return;
  const PenaltyConfig pc;
  const PathConfig path;
  o->engine = PLASSO_ENGINE_EXACT;
  o->alpha = pc.alpha;
  o->lambda = 0.0;
  o->nlambda = path.nlambda;
  o->lambda_min_ratio = path.lambda_min_ratio;
  o->lambdas = nullptr;
  o->n_lambdas = 0;
  o->nfolds = path.nfolds;
  o->rule = PLASSO_RULE_MIN;
  o->seed = 1;
  o->time_basis = PLASSO_BASIS_NONE;
  o->spline_knots = 5;
  o->risk_sample = 0;
  o->sample_seed = 1;
  o->standardize = 1;
  o->outer_max_iter = pc.outer_max_iter;
  o->inner_max_iter = pc.inner_max_iter;
  o->tol_outer = pc.tol_outer;
  o->tol_inner = pc.tol_inner;
  o->tol_kkt = pc.tol_kkt;
  o->threads = 1;
}

void plasso_sim_options_init(plasso_sim_options* o) {
  if (!o) return;
  const SimDesign d;
  o->scenario = "prop_hier";
  o->n = d.n;
  o->p = d.p;
  o->nz = d.nz;
  o->reps = d.n_reps;
  o->n_test = d.n_test;
  o->seed = d.seed;
  o->threads = 1;
}

plasso_status plasso_dataset_read_csv(const char* path, plasso_dataset** out) {
  if (!path || !out) return fail(PLASSO_NULL_POINTER, "null argument");
  return guard([&] { *out = make_dataset(read_csv(path)); });
}

plasso_status plasso_dataset_parse_csv(const char* text, plasso_dataset** out) {
  if (!text || !out) return fail(PLASSO_NULL_POINTER, "null argument");
  return guard([&] { *out = make_dataset(parse_csv(text)); });
}

plasso_status plasso_dataset_create(size_t n, size_t p, size_t nz, const double* time, const int* status,
                                    const double* weight, const double* x, const double* z, plasso_dataset** out) {
  if (!time || !status || !out || (p > 0 && !x) || (nz > 0 && !z)) return fail(PLASSO_NULL_POINTER, "null argument");
  return guard([&] {
    CsvTable t;
    t.names = {"time", "status"};
    t.columns.emplace_back(time, time + n);
    t.columns.emplace_back(n);
    for (size_t j = 0; j < n; ++j) t.columns[1][j] = status[j];
    if (weight) {
      t.names.push_back("weight");
      t.columns.emplace_back(weight, weight + n);
    }
    auto add = [&](const double* m, size_t cols, const char* prefix) {
      for (size_t c = 0; c < cols; ++c) {
        t.names.push_back(prefix + std::to_string(c + 1));
        std::vector<double> col(n);
        for (size_t j = 0; j < n; ++j) col[j] = m[j * cols + c];
        t.columns.push_back(std::move(col));
      }
    };
    add(x, p, "x_");
    add(z, nz, "z_");
    *out = make_dataset(std::move(t));
  });
}

size_t plasso_dataset_rows(const plasso_dataset* data) { return data ? data->table.rows() : 0; }

void plasso_dataset_free(plasso_dataset* data) { delete data; }

plasso_status plasso_fit(const plasso_dataset* data, const plasso_options* options, plasso_model** out) {
  if (!data || !options || !out) return fail(PLASSO_NULL_POINTER, "null argument");
  return guard([&] {
    const SurvivalDataset& raw = outcome_data(data);
    auto m = std::make_unique<plasso_model>();
    m->setup = setup_from(raw, *options);
    m->model = fit_single(m->setup, raw, penalty_from(*options));
    *out = m.release();
  });
}

plasso_status plasso_model_from_json(const char* json, plasso_model** out) {
  if (!json || !out) return fail(PLASSO_NULL_POINTER, "null argument");
  return guard([&] {
    LoadedModel loaded = model_from_string(json);
    *out = new plasso_model{std::move(loaded.setup), std::move(loaded.model)};
  });
}

plasso_status plasso_model_to_json(const plasso_model* model, char** out) {
  if (!model || !out) return fail(PLASSO_NULL_POINTER, "null argument");
  return guard([&] { *out = copy_string(model_to_json(model->setup, model->model).dump(2) + "\n"); });
}

plasso_status plasso_model_dims(const plasso_model* model, size_t* p, size_t* modifiers) {
  if (!model || !p || !modifiers) return fail(PLASSO_NULL_POINTER, "null argument");
  *p = static_cast<size_t>(model->setup.p());
  *modifiers = static_cast<size_t>(model->setup.modifiers());
  return PLASSO_OK;
}

plasso_status plasso_model_beta(const plasso_model* model, double* beta, size_t len) {
  if (!model || !beta) return fail(PLASSO_NULL_POINTER, "null argument");
  const auto& b = model->model.beta;
  if (len != static_cast<size_t>(b.size())) return fail(PLASSO_DIMENSION_MISMATCH, "beta buffer has wrong length");
  for (Index k = 0; k < b.size(); ++k) beta[k] = b(k);
  return PLASSO_OK;
}

plasso_status plasso_model_theta(const plasso_model* model, double* theta, size_t len) {
  if (!model || !theta) return fail(PLASSO_NULL_POINTER, "null argument");
  const auto& t = model->model.theta;
  if (len != static_cast<size_t>(t.size())) return fail(PLASSO_DIMENSION_MISMATCH, "theta buffer has wrong length");
  for (Index k = 0; k < t.rows(); ++k)
    for (Index l = 0; l < t.cols(); ++l) theta[k * t.cols() + l] = t(k, l);
  return PLASSO_OK;
}

plasso_status plasso_model_predict(const plasso_model* model, const plasso_dataset* data, const double* times,
                                   size_t n_times, double* eta, size_t len) {
  if (!model || !data || !eta || (n_times > 0 && !times)) return fail(PLASSO_NULL_POINTER, "null argument");
  return guard([&] {
    const bool tv = model->setup.time_varying();
    const SurvivalDataset raw = covariates_for(model, data, tv && n_times == 0);
    const MatrixXd e = predict_eta(model->setup, model->model, raw,
                                   tv ? std::span<const double>(times, n_times) : std::span<const double>());
    if (len != static_cast<size_t>(e.size())) throw Error(Errc::DimensionMismatch, "eta buffer has wrong length");
    for (Index j = 0; j < e.rows(); ++j)
      for (Index c = 0; c < e.cols(); ++c) eta[j * e.cols() + c] = e(j, c);
  });
}

plasso_status plasso_model_loglik(const plasso_model* model, const plasso_dataset* data, double* out) {
  if (!model || !data || !out) return fail(PLASSO_NULL_POINTER, "null argument");
  return guard([&] {
    const SurvivalDataset& raw = outcome_data(data);
    SurvivalDataset ordered = raw;
    ordered.x = columns_by_name(data->table, model->setup.x_names);
    ordered.z = columns_by_name(data->table, model->setup.z_names);
    *out = cox_loglik(model->setup, model->model, ordered);
  });
}

void plasso_model_free(plasso_model* model) { delete model; }

plasso_status plasso_fit_path(const plasso_dataset* data, const plasso_options* options, int with_cv,
                              plasso_path** out) {
  if (!data || !options || !out || (options->n_lambdas > 0 && !options->lambdas))
    return fail(PLASSO_NULL_POINTER, "null argument");
  return guard([&] {
    const SurvivalDataset& raw = outcome_data(data);
    auto p = std::make_unique<plasso_path>();
    p->setup = setup_from(raw, *options);
    p->config.penalty = penalty_from(*options);
    p->config.nlambda = options->nlambda;
    p->config.lambda_min_ratio = options->lambda_min_ratio;
    p->config.lambdas.assign(options->lambdas, options->lambdas + options->n_lambdas);
    p->config.nfolds = options->nfolds;
    p->config.rule = options->rule == PLASSO_RULE_1SE ? SelectionRule::OneSe : SelectionRule::Min;
    p->config.seed = options->seed;
    p->config.threads = options->threads;
    p->result = with_cv ? cv_path(p->setup, raw, p->config) : fit_path(p->setup, raw, p->config);
    *out = p.release();
  });
}

size_t plasso_path_size(const plasso_path* path) { return path ? path->result.lambdas.size() : 0; }

plasso_status plasso_path_lambda(const plasso_path* path, size_t index, double* lambda) {
  if (!path || !lambda) return fail(PLASSO_NULL_POINTER, "null argument");
  if (index >= path->result.lambdas.size()) return fail(PLASSO_INDEX_OUT_OF_RANGE, "path index out of range");
  *lambda = path->result.lambdas[index];
  return PLASSO_OK;
}

plasso_status plasso_path_cv(const plasso_path* path, size_t index, double* mean, double* se) {
  if (!path || !mean || !se) return fail(PLASSO_NULL_POINTER, "null argument");
  if (path->result.cv_mean.empty()) return fail(PLASSO_INVALID_ARGUMENT, "cross-validation was not run");
  if (index >= path->result.cv_mean.size()) return fail(PLASSO_INDEX_OUT_OF_RANGE, "path index out of range");
  *mean = path->result.cv_mean[index];
  *se = path->result.cv_se[index];
  return PLASSO_OK;
}

plasso_status plasso_path_selected(const plasso_path* path, size_t* index) {
  if (!path || !index) return fail(PLASSO_NULL_POINTER, "null argument");
  if (path->result.opt_index < 0) return fail(PLASSO_INVALID_ARGUMENT, "no lambda selected");
  *index = static_cast<size_t>(path->result.opt_index);
  return PLASSO_OK;
}

plasso_status plasso_path_model(const plasso_path* path, size_t index, plasso_model** out) {
  if (!path || !out) return fail(PLASSO_NULL_POINTER, "null argument");
  if (index >= path->result.models.size()) return fail(PLASSO_INDEX_OUT_OF_RANGE, "path index out of range");
  return guard([&] { *out = new plasso_model{path->setup, path->result.models[index]}; });
}

plasso_status plasso_path_to_json(const plasso_path* path, char** out) {
  if (!path || !out) return fail(PLASSO_NULL_POINTER, "null argument");
  return guard([&] { *out = copy_string(path_to_json(path->setup, path->result, path->config).dump(2) + "\n"); });
}

void plasso_path_free(plasso_path* path) { delete path; }

plasso_status plasso_export_stacked_csv(const plasso_dataset* data, const plasso_options* options, char** out) {
  if (!data || !options || !out) return fail(PLASSO_NULL_POINTER, "null argument");
  return guard([&] {
    const SurvivalDataset& raw = outcome_data(data);
    plasso_options o = *options;
    o.engine = PLASSO_ENGINE_LOGISTIC;
    const FitSetup setup = setup_from(raw, o);
    const PreparedProblem prep = prepare(setup, raw);
    std::ostringstream s;
    write_stacked_csv(s, *prep.stacked, setup.x_names, setup.modifier_names());
    *out = copy_string(s.str());
  });
}

plasso_status plasso_simbench(const plasso_sim_options* options, int format, char** out, int* failed) {
  if (!options || !out || !options->scenario) return fail(PLASSO_NULL_POINTER, "null argument");
  return guard([&] {
    SimDesign d;
    d.scenario = parse_scenario(options->scenario);
    d.n = options->n;
    d.p = options->p;
    d.nz = options->nz;
    d.n_reps = options->reps;
    d.n_test = options->n_test;
    d.seed = options->seed;
    d.threads = options->threads;
    const SimResult res = run_comparison(d);
    if (failed) *failed = static_cast<int>(res.failures.size());
    *out = copy_string(emit_table(res.mean, format == PLASSO_FORMAT_CSV ? TableFormat::Csv : TableFormat::Text));
  });
}

}  // extern "C"
