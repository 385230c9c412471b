#include "plasso/model_io.hpp"

#include "plasso/error.hpp"

#include <cmath>

namespace plasso {

using nlohmann::ordered_json;

ordered_json number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

namespace {

ordered_json vec(const VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

ordered_json vec(const std::vector<double>& v) {
  ordered_json a = ordered_json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

// Nonzero entries as [row, col, value].
ordered_json triplets(const MatrixXd& m) {
  ordered_json a = ordered_json::array();
  for (Index k = 0; k < m.rows(); ++k)
    for (Index l = 0; l < m.cols(); ++l)
      if (m(k, l) != 0.0) a.push_back(ordered_json::array({k, l, number(m(k, l))}));
  return a;
}

ordered_json scaling_json(const ColumnScaling& s) { return {{"mean", vec(s.mean)}, {"sd", vec(s.sd)}}; }

double read_double(const ordered_json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw Error(Errc::ParseError, "expected a number");
  return j.get<double>();
}

VectorXd read_vec(const ordered_json& j) {
  if (!j.is_array()) throw Error(Errc::ParseError, "expected an array");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = read_double(j[i]);
  return v;
}

MatrixXd read_triplets(const ordered_json& j, Index rows, Index cols) {
  if (!j.is_array()) throw Error(Errc::ParseError, "expected triplet array");
  MatrixXd m = MatrixXd::Zero(rows, cols);
  for (const auto& t : j) {
    if (!t.is_array() || t.size() != 3) throw Error(Errc::ParseError, "bad triplet");
    const auto k = t[0].get<Index>();
    const auto l = t[1].get<Index>();
    if (k < 0 || k >= rows || l < 0 || l >= cols) throw Error(Errc::ParseError, "triplet index out of range");
    m(k, l) = read_double(t[2]);
  }
  return m;
}

ColumnScaling read_scaling(const ordered_json& j) {
  ColumnScaling s{read_vec(j.at("mean")), read_vec(j.at("sd"))};
  if (s.mean.size() != s.sd.size()) throw Error(Errc::ParseError, "scaling mean and sd lengths differ");
  return s;
}

const char* basis_kind_name(BasisKind k) {
  switch (k) {
    case BasisKind::None: return "none";
    case BasisKind::Linear: return "linear";
    case BasisKind::LinearSpline: return "spline";
  }
  return "none";
}

BasisKind parse_basis_kind(const std::string& s) {
  if (s == "none") return BasisKind::None;
  if (s == "linear") return BasisKind::Linear;
  if (s == "spline") return BasisKind::LinearSpline;
  throw Error(Errc::ParseError, "unknown basis kind '" + s + "'");
}

ordered_json coefficients_json(const PliableModel& m) {
  return {{"theta0", vec(m.theta0)}, {"beta", vec(m.beta)}, {"theta", triplets(m.theta)},
          {"intercept", vec(m.intercept)}};
}

ordered_json diagnostics_json(const PliableModel& m) {
  return {{"converged", m.converged},
          {"outer_iterations", m.outer_iterations},
          {"inner_sweeps", m.inner_sweeps},
          {"objective", number(m.objective)},
          {"kkt_residual", number(m.kkt_residual)},
          {"max_iterations", m.max_iterations},
          {"diverging", m.diverging},
          {"step_underflow", m.step_underflow},
          {"degenerate_column", m.degenerate_column}};
}

}  // namespace

ordered_json setup_to_json(const FitSetup& s) {
  return {{"engine", engine_name(s.engine)},
          {"kind", s.time_varying() ? "time_varying" : "proportional"},
          {"x_names", s.x_names},
          {"z_names", s.z_names},
          {"basis", {{"kind", basis_kind_name(s.basis.kind)}, {"knots", vec(s.basis.knots)}}},
          {"risk_sample", {{"size", s.sample.sample_size}, {"seed", s.sample.seed}}},
          {"standardized", s.standardized},
          {"scaling",
           {{"x", scaling_json(s.scaling.x)}, {"z", scaling_json(s.scaling.z)}, {"basis", scaling_json(s.basis_scaling)}}}};
}

FitSetup setup_from_json(const ordered_json& j) {
  try {
    FitSetup s;
    s.engine = parse_engine(j.at("engine").get<std::string>());
    s.x_names = j.at("x_names").get<std::vector<std::string>>();
    s.z_names = j.at("z_names").get<std::vector<std::string>>();
    const auto& b = j.at("basis");
    s.basis.kind = parse_basis_kind(b.at("kind").get<std::string>());
    const VectorXd knots = read_vec(b.at("knots"));
    s.basis.knots.assign(knots.data(), knots.data() + knots.size());
    s.sample.sample_size = j.at("risk_sample").at("size").get<int>();
    s.sample.seed = j.at("risk_sample").at("seed").get<std::uint64_t>();
    s.standardized = j.at("standardized").get<bool>();
    const auto& sc = j.at("scaling");
    s.scaling.x = read_scaling(sc.at("x"));
    s.scaling.z = read_scaling(sc.at("z"));
    s.basis_scaling = read_scaling(sc.at("basis"));
    if (s.scaling.x.size() != static_cast<Index>(s.x_names.size()) ||
        s.scaling.z.size() != static_cast<Index>(s.z_names.size()) || s.basis_scaling.size() != s.basis.dim())
      throw Error(Errc::ParseError, "scaling lengths do not match names or basis");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("malformed model setup: ") + e.what());
  }
}

ordered_json model_to_json(const FitSetup& setup, const PliableModel& model) {
  const OriginalCoefficients orig = original_scale(setup, model);
  ordered_json j;
  j["schema"] = kModelSchema;
  j["setup"] = setup_to_json(setup);
  j["penalty"] = {{"lambda", number(model.lambda)}, {"alpha", number(model.alpha)}};
  j["coefficients"] = coefficients_json(model);
  j["original"] = {{"offset", number(orig.offset)},
                   {"beta", vec(orig.beta)},
                   {"theta0", vec(orig.theta0)},
                   {"theta", triplets(orig.theta)},
                   {"basis_main", vec(orig.basis_main)}};
  j["diagnostics"] = diagnostics_json(model);
  return j;
}

LoadedModel model_from_json(const ordered_json& j) {
  if (!j.is_object() || !j.contains("schema") || !j["schema"].is_string())
    throw Error(Errc::SchemaMismatch, "document has no schema id");
  if (j["schema"].get<std::string>() != kModelSchema)
    throw Error(Errc::SchemaMismatch, "expected schema " + std::string(kModelSchema) + ", got " +
                                          j["schema"].get<std::string>());
  try {
    LoadedModel out;
    out.setup = setup_from_json(j.at("setup"));
    const Index p = out.setup.p();
    const Index q = out.setup.modifiers();
    const auto& c = j.at("coefficients");
    PliableModel& m = out.model;
    m.theta0 = read_vec(c.at("theta0"));
    m.beta = read_vec(c.at("beta"));
    m.intercept = read_vec(c.at("intercept"));
    if (m.theta0.size() != q || m.beta.size() != p) throw Error(Errc::ParseError, "coefficient lengths do not match setup");
    m.theta = read_triplets(c.at("theta"), p, q);
    m.lambda = read_double(j.at("penalty").at("lambda"));
    m.alpha = read_double(j.at("penalty").at("alpha"));
    const auto& d = j.at("diagnostics");
    m.converged = d.at("converged").get<bool>();
    m.outer_iterations = d.at("outer_iterations").get<int>();
    m.inner_sweeps = d.at("inner_sweeps").get<int>();
    m.objective = read_double(d.at("objective"));
    m.kkt_residual = read_double(d.at("kkt_residual"));
    m.max_iterations = d.at("max_iterations").get<bool>();
    m.diverging = d.at("diverging").get<bool>();
    m.step_underflow = d.at("step_underflow").get<bool>();
    m.degenerate_column = d.at("degenerate_column").get<bool>();
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("malformed model: ") + e.what());
  }
}

LoadedModel model_from_string(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("invalid JSON: ") + e.what());
  }
  return model_from_json(j);
}

ordered_json path_to_json(const FitSetup& setup, const PathResult& path, const PathConfig& config) {
  ordered_json j;
  j["schema"] = kPathSchema;
  j["setup"] = setup_to_json(setup);
  j["alpha"] = number(config.penalty.alpha);
  j["lambda_max"] = number(path.lambda_max);
  j["lambda_max_formula"] = number(path.lambda_max_formula);
  j["lambdas"] = vec(path.lambdas);
  ordered_json models = ordered_json::array();
  for (std::size_t i = 0; i < path.models.size(); ++i) {
    const PliableModel& m = path.models[i];
    ordered_json e = coefficients_json(m);
    e["lambda"] = number(path.lambdas[i]);
    e["nonzero_beta"] = (m.beta.array() != 0.0).count();
    e["nonzero_theta"] = (m.theta.array() != 0.0).count();
    e["diagnostics"] = diagnostics_json(m);
    e["error"] = path.errors[i].empty() ? ordered_json(nullptr) : ordered_json(path.errors[i]);
    models.push_back(std::move(e));
  }
  j["models"] = std::move(models);
  if (!path.folds.empty()) {
    j["cv"] = {{"nfolds", config.nfolds},
               {"rule", rule_name(config.rule)},
               {"seed", config.seed},
               {"folds", path.folds},
               {"cv_mean", vec(path.cv_mean)},
               {"cv_se", vec(path.cv_se)},
               {"opt_index", path.opt_index},
               {"lambda_opt", number(path.lambda_opt)}};
  }
  return j;
}

}  // namespace plasso
