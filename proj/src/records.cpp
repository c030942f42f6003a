#include "sbl/records.hpp"

#include <cmath>

#include "json.hpp"
#include "sbl/errors.hpp"

namespace sbl {

using nlohmann::json;

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::input: return "input";
    case ErrorCode::config: return "config";
    case ErrorCode::numeric: return "numeric";
    case ErrorCode::insufficient_information: return "insufficient_information";
    case ErrorCode::refused: return "refused";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
  }
  return "unknown";
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec(const Eigen::Ref<const Vector>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

json mat(const Eigen::Ref<const Matrix>& M) {
  json a = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) a.push_back(vec(M.row(i).transpose()));
  return a;
}

json vec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

double read_num(const json& j, double if_null) { return j.is_null() ? if_null : j.get<double>(); }

Vector read_vec(const json& j, double if_null) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = read_num(j[i], if_null);
  return v;
}

Matrix read_mat(const json& j) {
  const auto r = static_cast<Eigen::Index>(j.size());
  const auto c = r > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Matrix M(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != c) throw Error(ErrorCode::parse, "fit record: ragged matrix");
    for (Eigen::Index k = 0; k < c; ++k) M(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return M;
}

json verdict_json(const ProprietyVerdict& v) {
  json j{{"status", to_string(v.status)}, {"rule", to_string(v.rule)}, {"explanation", v.explanation}};
  j["residual_used"] = v.residual_used ? num(*v.residual_used) : json(nullptr);
  j["n"] = v.n ? json(*v.n) : json(nullptr);
  j["inputs"] = v.inputs.empty() ? json(nullptr) : json::parse(v.inputs);
  return j;
}

json summaries_json(const std::vector<ParameterSummary>& s) {
  json a = json::array();
  for (const auto& p : s)
    a.push_back({{"name", p.name},
                 {"mean", num(p.mean)},
                 {"sd", num(p.sd)},
                 {"q05", num(p.q05)},
                 {"median", num(p.median)},
                 {"q95", num(p.q95)},
                 {"ess", num(p.ess)}});
  return a;
}

json truncation_json(const TruncationReport& r) {
  json j{{"T", vec(r.T_grid)},
         {"I", vec(r.I_values)},
         {"growth_exponent", num(r.growth_exponent)},
         {"decade_growth", num(r.decade_growth)},
         {"verdict", to_string(r.verdict)},
         {"converged", r.converged}};
  j["estimate"] = r.estimate ? num(*r.estimate) : json(nullptr);
  return j;
}

}  // namespace

std::string verdict_record(const ProprietyVerdict& v) {
  json j = verdict_json(v);
  j["record"] = "propriety_verdict";
  return j.dump();
}

std::string fit_record(const SavedFit& saved, const ProprietyVerdict& gate, const std::string& caveat,
                       const CrossValidationResult* cv) {
  const RvmFit& f = saved.fit;
  json pruned = json::array();
  for (Eigen::Index i = 0; i < f.lambda_hat.size(); ++i)
    if (std::isinf(f.lambda_hat(i))) pruned.push_back(i);
  json j{{"record", "rvm_fit"},
         {"kernel", {{"kind", to_string(saved.kernel.kind)}, {"theta", saved.kernel.theta}}},
         {"gate", verdict_json(gate)},
         {"lambda_hat", vec(f.lambda_hat)},
         {"pruned", pruned},
         {"sigma2_hat", num(f.sigma2_hat)},
         {"relevance_indices", f.relevance_indices},
         {"log_evidence", num(f.log_evidence)},
         {"iterations", f.iterations},
         {"converged", f.converged},
         {"degenerate", f.degenerate},
         {"warnings", f.warnings},
         {"beta_mean", vec(f.beta_mean)},
         {"beta_cov", mat(f.beta_cov)},
         {"X", mat(saved.X)}};
  j["caveat"] = caveat.empty() ? json(nullptr) : json(caveat);
  if (cv) j["cross_validation"] = {{"theta", vec(cv->thetas)}, {"rmse", vec(cv->rmse)}, {"best", cv->best}};
  return j.dump();
}

SavedFit parse_fit_record(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("fit record: ") + e.what());
  }
  if (!j.is_object() || j.value("record", "") != "rvm_fit")
    throw Error(ErrorCode::parse, "fit record: not an rvm_fit record");
  try {
    SavedFit s;
    s.kernel.kind = parse_kernel_kind(j.at("kernel").at("kind").get<std::string>());
    s.kernel.theta = j.at("kernel").at("theta").get<double>();
    s.fit.lambda_hat = read_vec(j.at("lambda_hat"), std::numeric_limits<double>::infinity());
    s.fit.sigma2_hat = j.at("sigma2_hat").get<double>();
    s.fit.beta_mean = read_vec(j.at("beta_mean"), 0.0);
    s.fit.beta_cov = read_mat(j.at("beta_cov"));
    s.fit.relevance_indices = j.at("relevance_indices").get<std::vector<Eigen::Index>>();
    s.fit.log_evidence = read_num(j.at("log_evidence"), std::nan(""));
    s.fit.iterations = j.at("iterations").get<int>();
    s.fit.converged = j.at("converged").get<bool>();
    s.fit.degenerate = j.at("degenerate").get<bool>();
    s.X = read_mat(j.at("X"));
    if (s.fit.beta_mean.size() != s.X.rows() + 1)
      throw Error(ErrorCode::parse, "fit record: beta_mean does not match the stored covariates");
    const auto r = static_cast<Eigen::Index>(s.fit.relevance_indices.size());
    if (s.fit.beta_cov.rows() != r || s.fit.beta_cov.cols() != r)
      throw Error(ErrorCode::parse, "fit record: beta_cov does not match relevance_indices");
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("fit record: ") + e.what());
  }
}

std::string prediction_record(const Eigen::Ref<const Vector>& x_new, const PredictiveDistribution& p) {
  return json{{"record", "prediction"}, {"x_new", vec(x_new)}, {"mean", num(p.mean)}, {"variance", num(p.variance)}}
      .dump();
}

std::string class_prediction_record(const Eigen::Ref<const Vector>& x_new, double probability, double mcse) {
  return json{{"record", "class_prediction"},
              {"x_new", vec(x_new)},
              {"probability", num(probability)},
              {"class", probability > 0.5 ? 1 : 0},
              {"mcse", num(mcse)}}
      .dump();
}

std::string trace_summary_record(const std::string& kind, const McmcTrace& trace, const ProprietyVerdict& gate) {
  json acc = json::object();
  for (const auto& [k, v] : trace.acceptance) acc[k] = num(v);
  json errs = json::array();
  for (std::size_t i = 0; i < trace.step_errors.size() && i < 20; ++i) {
    const auto& e = trace.step_errors[i];
    errs.push_back({{"iteration", e.iteration}, {"block", e.block}, {"message", e.message}});
  }
  return json{{"record", "trace_summary"},
              {"model", kind},
              {"gate", verdict_json(gate)},
              {"kept", trace.rows()},
              {"acceptance", acc},
              {"step_errors", trace.step_errors.size()},
              {"first_step_errors", errs},
              {"parameters", summaries_json(summarize(trace))}}
      .dump();
}

std::string truncation_record(const TruncationReport& r, const std::string& label) {
  json j = truncation_json(r);
  j["record"] = "truncation_report";
  j["label"] = label;
  return j.dump();
}

std::string demo_record(const DemoReport& r) {
  return json{{"record", "impropriety_demo"},
              {"gate", verdict_json(r.gate)},
              {"trace", summaries_json(r.summaries)},
              {"step_errors", r.step_errors},
              {"probe", truncation_json(r.probe)},
              {"notes", r.notes}}
      .dump();
}

std::string suites_record(const std::vector<SuiteResult>& suites) {
  json a = json::array();
  bool all = true;
  for (const auto& s : suites) {
    a.push_back({{"name", s.name}, {"cases", s.cases}, {"failures", s.failures}, {"first_failure", s.first_failure}});
    all = all && s.failures == 0;
  }
  return json{{"record", "bound_suites"}, {"passed", all}, {"suites", a}}.dump();
}

}  // namespace sbl
