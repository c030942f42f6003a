#include "sbl/sbl.h"

#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "sbl/dataset.hpp"
#include "sbl/errors.hpp"
#include "sbl/impropriety_lab.hpp"
#include "sbl/records.hpp"
#include "sbl/rvm_gibbs.hpp"
#include "sbl/rvm_regression.hpp"
#include "sbl/sparse_classifier.hpp"

struct sbl_dataset {
  sbl::Dataset data;
};

struct sbl_record {
  std::string json;
  std::string csv;
  int code = 0;
};

struct sbl_rvm_fit {
  sbl::SavedFit saved;
  std::string record;
};

struct sbl_trace {
  sbl::McmcTrace trace;
  sbl::ProprietyVerdict gate;
  std::string model;
  std::optional<sbl::ClassifierModel> classifier;
  sbl::Matrix X;
};

namespace {

thread_local std::string g_last_error;

sbl_status status_of(sbl::ErrorCode c) {
  switch (c) {
    case sbl::ErrorCode::input: return SBL_ERR_INPUT;
    case sbl::ErrorCode::config: return SBL_ERR_CONFIG;
    case sbl::ErrorCode::numeric: return SBL_ERR_NUMERIC;
    case sbl::ErrorCode::insufficient_information: return SBL_ERR_INSUFFICIENT_INFORMATION;
    case sbl::ErrorCode::refused: return SBL_ERR_REFUSED;
    case sbl::ErrorCode::unsupported: return SBL_ERR_UNSUPPORTED;
    case sbl::ErrorCode::io: return SBL_ERR_IO;
    case sbl::ErrorCode::parse: return SBL_ERR_PARSE;
  }
  return SBL_ERR_INTERNAL;
}

template <class F>
sbl_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return SBL_OK;
  } catch (const sbl::NumericError& e) {
    std::ostringstream s;
    s << e.what() << " (condition estimate " << e.condition_estimate() << ")";
    g_last_error = s.str();
    return SBL_ERR_NUMERIC;
  } catch (const sbl::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SBL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
    return SBL_ERR_INTERNAL;
  }
}

template <class T>
void need(const T* p, const char* what) {
  if (!p) sbl::throw_input(std::string(what) + " must not be NULL");
}

sbl::LambdaPrior lambda_prior(const sbl_lambda_prior& p) {
  switch (p.kind) {
    case SBL_LAMBDA_SHAPE_RATE: return sbl::LambdaPrior::from_shape_rate(p.a, p.b);
    case SBL_LAMBDA_JEFFREYS: return sbl::LambdaPrior::jeffreys();
    case SBL_LAMBDA_HALF_CAUCHY: return sbl::LambdaPrior::half_cauchy(p.scale);
    case SBL_LAMBDA_GUMBEL2: return sbl::LambdaPrior::gumbel_type2(p.scale);
  }
  sbl::throw_config("unknown lambda prior kind");
}

sbl::KernelSpec kernel_spec(const sbl_kernel* k) {
  need(k, "kernel");
  need(k->kind, "kernel kind");
  sbl::KernelSpec s{sbl::parse_kernel_kind(k->kind), k->theta};
  return s;
}

sbl::GibbsConfig chain_config(const sbl_chain_config* c) {
  need(c, "chain config");
  sbl::GibbsConfig g;
  g.n_iter = c->n_iter;
  g.burn_in = c->burn_in;
  g.thin = c->thin;
  g.seed = c->seed;
  g.allow_improper = c->allow_improper != 0;
  return g;
}

sbl::ClassifierPriorSpec classifier_priors(const sbl_classifier_priors* p) {
  need(p, "classifier priors");
  sbl::ClassifierPriorSpec s;
  s.lambda_prior = lambda_prior(p->lambda);
  s.c = p->c;
  s.d = p->d;
  s.u1 = p->u1;
  s.u2 = p->u2;
  s.lambda0 = p->lambda0;
  return s;
}

const sbl::Dataset& with_response(const sbl_dataset* d) {
  need(d, "dataset");
  if (d->data.y.size() != d->data.X.rows()) sbl::throw_input("dataset has no response column");
  return d->data;
}

sbl::Matrix design(const sbl::Dataset& d, const sbl::KernelSpec& k) {
  return sbl::build_design_matrix(sbl::CovariateSet(d.X), k).matrix();
}

std::vector<double> grid(const double* T, std::size_t len) {
  if (len == 0) return sbl::geometric_grid(1, 5);
  need(T, "T grid");
  return {T, T + len};
}

int verdict_code(sbl::ProprietyStatus s) {
  return s == sbl::ProprietyStatus::proper ? SBL_PROPER
                                            : (s == sbl::ProprietyStatus::improper ? SBL_IMPROPER : SBL_UNDETERMINED);
}

}  // namespace

extern "C" {

const char* sbl_version(void) { return "0.1.0"; }

const char* sbl_last_error(void) { return g_last_error.c_str(); }

const char* sbl_status_name(sbl_status status) {
  switch (status) {
    case SBL_OK: return "ok";
    case SBL_ERR_INPUT: return "input";
    case SBL_ERR_CONFIG: return "config";
    case SBL_ERR_NUMERIC: return "numeric";
    case SBL_ERR_INSUFFICIENT_INFORMATION: return "insufficient_information";
    case SBL_ERR_REFUSED: return "refused";
    case SBL_ERR_UNSUPPORTED: return "unsupported";
    case SBL_ERR_IO: return "io";
    case SBL_ERR_PARSE: return "parse";
    case SBL_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

sbl_chain_config sbl_chain_config_default(void) {
  const sbl::GibbsConfig g;
  return {g.n_iter, g.burn_in, g.thin, g.seed, 0};
}

sbl_classifier_priors sbl_classifier_priors_default(void) {
  const sbl::ClassifierPriorSpec s;
  return {{SBL_LAMBDA_SHAPE_RATE, s.lambda_prior.a, s.lambda_prior.b, 1.0}, s.c, s.d, s.u1, s.u2, s.lambda0};
}

sbl_fit_options sbl_fit_options_default(void) {
  const sbl::FitOptions o;
  return {o.max_iter, o.tol, o.prune_threshold};
}

sbl_status sbl_dataset_read_csv(const char* path, const char* response, sbl_dataset** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    auto d = std::make_unique<sbl_dataset>();
    d->data = sbl::ingest_csv(path, response ? response : "");
    *out = d.release();
  });
}

sbl_status sbl_dataset_from_arrays(const double* X, size_t n, size_t p, const double* y, sbl_dataset** out) {
  return guard([&] {
    need(X, "X");
    need(out, "out");
    if (n == 0 || p == 0) sbl::throw_input("dataset needs at least one row and one column");
    auto d = std::make_unique<sbl_dataset>();
    const auto rn = static_cast<Eigen::Index>(n), rp = static_cast<Eigen::Index>(p);
    d->data.source = "<arrays>";
    d->data.X = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(X, rn, rp);
    if (!d->data.X.allFinite()) sbl::throw_input("dataset: non-finite covariate");
    if (y) {
      d->data.y = Eigen::Map<const sbl::Vector>(y, rn);
      if (!d->data.y.allFinite()) sbl::throw_input("dataset: non-finite response");
      d->data.response_name = "y";
    }
    for (size_t j = 0; j < p; ++j) d->data.covariate_names.push_back("x" + std::to_string(j + 1));
    *out = d.release();
  });
}

size_t sbl_dataset_rows(const sbl_dataset* d) { return d ? static_cast<size_t>(d->data.rows()) : 0; }
size_t sbl_dataset_cols(const sbl_dataset* d) { return d ? static_cast<size_t>(d->data.cols()) : 0; }

sbl_status sbl_dataset_row(const sbl_dataset* d, size_t i, double* out, size_t p) {
  return guard([&] {
    need(d, "dataset");
    need(out, "out");
    if (i >= static_cast<size_t>(d->data.rows())) sbl::throw_input("row index out of range");
    if (p != static_cast<size_t>(d->data.cols())) sbl::throw_input("row buffer has the wrong length");
    for (size_t j = 0; j < p; ++j) out[j] = d->data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  });
}

void sbl_dataset_free(sbl_dataset* d) { delete d; }

const char* sbl_record_json(const sbl_record* r) { return r ? r->json.c_str() : ""; }
const char* sbl_record_csv(const sbl_record* r) { return r ? r->csv.c_str() : ""; }
int sbl_record_code(const sbl_record* r) { return r ? r->code : -1; }
void sbl_record_free(sbl_record* r) { delete r; }

sbl_status sbl_check_rvm_propriety(const sbl_lambda_prior* prior, double c, double d, const sbl_dataset* data,
                                   const sbl_kernel* kernel, long n, sbl_record** out) {
  return guard([&] {
    need(prior, "prior");
    need(out, "out");
    std::optional<sbl::GateData> gd;
    if (data) {
      const sbl::Dataset& ds = with_response(data);
      gd = sbl::GateData{ds.y, design(ds, kernel_spec(kernel))};
    }
    const auto v = sbl::check_rvm_propriety(lambda_prior(*prior), c, d, gd,
                                            n > 0 ? std::optional<long>(n) : std::nullopt);
    auto r = std::make_unique<sbl_record>();
    r->json = sbl::verdict_record(v);
    r->code = verdict_code(v.status);
    *out = r.release();
  });
}

sbl_status sbl_check_classifier_propriety(const sbl_classifier_priors* priors, sbl_record** out) {
  return guard([&] {
    need(out, "out");
    const auto v = sbl::check_classifier_propriety(classifier_priors(priors));
    auto r = std::make_unique<sbl_record>();
    r->json = sbl::verdict_record(v);
    r->code = verdict_code(v.status);
    *out = r.release();
  });
}

sbl_status sbl_rvm_fit_run(const sbl_dataset* data, const sbl_kernel* kernel, const double* theta_grid,
                           size_t grid_len, int folds, const sbl_fit_options* opts, const sbl_hyper* gate_hp,
                           sbl_rvm_fit** out) {
  return guard([&] {
    need(out, "out");
    const sbl::Dataset& ds = with_response(data);
    sbl::KernelSpec spec = kernel_spec(kernel);
    sbl::FitOptions fo;
    if (opts) {
      fo.max_iter = opts->max_iter;
      fo.tol = opts->tol;
      fo.prune_threshold = opts->prune_threshold;
    }
    std::optional<sbl::CrossValidationResult> cv;
    if (grid_len > 0) {
      need(theta_grid, "theta grid");
      cv = sbl::cross_validate_theta(sbl::CovariateSet(ds.X), ds.y, spec.kind, {theta_grid, theta_grid + grid_len},
                                     folds, fo);
      spec.theta = cv->thetas[cv->best];
    }
    spec.validate();
    const sbl::Matrix K = design(ds, spec);
    const sbl::RvmHyperParams hp = gate_hp ? sbl::RvmHyperParams{gate_hp->a, gate_hp->b, gate_hp->c, gate_hp->d}
                                           : sbl::RvmHyperParams{1.0, 0.0, 1.0, 0.0};
    const sbl::ProprietyVerdict gate = sbl::check_rvm_propriety(hp, sbl::GateData{ds.y, K});
    std::string caveat;
    if (gate.status != sbl::ProprietyStatus::proper)
      caveat = "the point estimates are valid for plug-in prediction with lambda and sigma2 held fixed, but read "
               "as a Bayesian model with these priors the posterior is " +
               std::string(gate.status == sbl::ProprietyStatus::improper ? "improper" : "not known to be proper") +
               "; the predictive distribution is not a posterior predictive";
    auto f = std::make_unique<sbl_rvm_fit>();
    f->saved.fit = sbl::fit_type2_ml(ds.y, K, std::nullopt, fo);
    f->saved.kernel = spec;
    f->saved.X = ds.X;
    f->record = sbl::fit_record(f->saved, gate, caveat, cv ? &*cv : nullptr);
    *out = f.release();
  });
}

sbl_status sbl_rvm_fit_record(const sbl_rvm_fit* fit, sbl_record** out) {
  return guard([&] {
    need(fit, "fit");
    need(out, "out");
    auto r = std::make_unique<sbl_record>();
    r->json = fit->record;
    *out = r.release();
  });
}

sbl_status sbl_rvm_fit_load(const char* record_json, sbl_rvm_fit** out) {
  return guard([&] {
    need(record_json, "record");
    need(out, "out");
    auto f = std::make_unique<sbl_rvm_fit>();
    f->saved = sbl::parse_fit_record(record_json);
    f->record = record_json;
    *out = f.release();
  });
}

sbl_status sbl_rvm_fit_predict(const sbl_rvm_fit* fit, const double* x, size_t p, double* mean, double* variance) {
  return guard([&] {
    need(fit, "fit");
    need(x, "x");
    if (p != static_cast<size_t>(fit->saved.X.cols())) sbl::throw_input("x has the wrong number of covariates");
    const sbl::Vector xv = Eigen::Map<const sbl::Vector>(x, static_cast<Eigen::Index>(p));
    const sbl::Vector k = sbl::build_prediction_row(sbl::CovariateSet(fit->saved.X), xv, fit->saved.kernel);
    const auto pd = sbl::predict(fit->saved.fit, k);
    if (mean) *mean = pd.mean;
    if (variance) *variance = pd.variance;
  });
}

size_t sbl_rvm_fit_relevance_count(const sbl_rvm_fit* fit) {
  return fit ? fit->saved.fit.relevance_indices.size() : 0;
}
double sbl_rvm_fit_sigma2(const sbl_rvm_fit* fit) { return fit ? fit->saved.fit.sigma2_hat : 0.0; }
double sbl_rvm_fit_theta(const sbl_rvm_fit* fit) { return fit ? fit->saved.kernel.theta : 0.0; }
void sbl_rvm_fit_free(sbl_rvm_fit* fit) { delete fit; }

sbl_status sbl_gibbs_rvm(const sbl_dataset* data, const sbl_kernel* kernel, const sbl_hyper* hp,
                         const sbl_chain_config* cfg, sbl_trace** out) {
  return guard([&] {
    need(hp, "hyperparameters");
    need(out, "out");
    const sbl::Dataset& ds = with_response(data);
    const sbl::Matrix K = design(ds, kernel_spec(kernel));
    const sbl::RvmHyperParams h{hp->a, hp->b, hp->c, hp->d};
    auto t = std::make_unique<sbl_trace>();
    t->gate = sbl::check_rvm_propriety(h, sbl::GateData{ds.y, K});
    t->trace = sbl::run_chain(ds.y, K, h, chain_config(cfg));
    t->model = "rvm";
    t->X = ds.X;
    *out = t.release();
  });
}

sbl_status sbl_classifier_run(const sbl_dataset* data, const sbl_kernel* kernel, const char* loss,
                              const sbl_classifier_priors* priors, const sbl_chain_config* cfg, sbl_trace** out) {
  return guard([&] {
    need(loss, "loss");
    need(out, "out");
    const sbl::Dataset& ds = with_response(data);
    sbl::require_binary_response(ds);
    need(kernel, "kernel");
    need(kernel->kind, "kernel kind");
    sbl::ClassifierModel model;
    model.loss = sbl::parse_loss_kind(loss);
    model.priors = classifier_priors(priors);
    model.kernel = sbl::parse_kernel_kind(kernel->kind);
    if (kernel->theta > 0.0) model.theta_init = kernel->theta;
    auto t = std::make_unique<sbl_trace>();
    t->gate = sbl::check_classifier_propriety(model.priors);
    t->trace = sbl::run_classifier_mcmc(ds.y, sbl::CovariateSet(ds.X), model, chain_config(cfg));
    t->model = "classifier";
    t->classifier = model;
    t->X = ds.X;
    *out = t.release();
  });
}

sbl_status sbl_classifier_predict(const sbl_trace* trace, const double* x, size_t p, double* probability,
                                  double* mcse) {
  return guard([&] {
    need(trace, "trace");
    need(x, "x");
    if (!trace->classifier) sbl::throw_input("trace does not come from the classifier sampler");
    if (p != static_cast<size_t>(trace->X.cols())) sbl::throw_input("x has the wrong number of covariates");
    const auto r = sbl::predict_prob(trace->trace, sbl::CovariateSet(trace->X),
                                     Eigen::Map<const sbl::Vector>(x, static_cast<Eigen::Index>(p)),
                                     *trace->classifier);
    if (probability) *probability = r.probability;
    if (mcse) *mcse = r.mcse;
  });
}

size_t sbl_trace_rows(const sbl_trace* t) { return t ? static_cast<size_t>(t->trace.rows()) : 0; }

sbl_status sbl_trace_summary(const sbl_trace* t, sbl_record** out) {
  return guard([&] {
    need(t, "trace");
    need(out, "out");
    auto r = std::make_unique<sbl_record>();
    r->json = sbl::trace_summary_record(t->model, t->trace, t->gate);
    r->code = static_cast<int>(t->trace.step_errors.size());
    *out = r.release();
  });
}

sbl_status sbl_trace_csv(const sbl_trace* t, sbl_record** out) {
  return guard([&] {
    need(t, "trace");
    need(out, "out");
    std::ostringstream s;
    sbl::write_trace_csv(t->trace, s);
    auto r = std::make_unique<sbl_record>();
    r->csv = s.str();
    *out = r.release();
  });
}

void sbl_trace_free(sbl_trace* t) { delete t; }

sbl_status sbl_verify_bounds(uint64_t seed, size_t instances, sbl_record** out) {
  return guard([&] {
    need(out, "out");
    if (instances == 0) sbl::throw_input("instances must be positive");
    const auto suites = sbl::run_bound_suites(seed, instances);
    auto r = std::make_unique<sbl_record>();
    r->json = sbl::suites_record(suites);
    r->code = 0;
    for (const auto& s : suites)
      if (s.failures) r->code = 1;
    *out = r.release();
  });
}

sbl_status sbl_estimate_marginal(const sbl_dataset* data, const sbl_kernel* kernel, const sbl_hyper* hp,
                                 const double* T_grid, size_t grid_len, sbl_record** out) {
  return guard([&] {
    need(hp, "hyperparameters");
    need(out, "out");
    const sbl::Dataset& ds = with_response(data);
    const sbl::Matrix K = design(ds, kernel_spec(kernel));
    const sbl::RvmHyperParams h{hp->a, hp->b, hp->c, hp->d};
    const auto rep = sbl::divergence_probe(ds.y, K, h, grid(T_grid, grid_len));
    std::ostringstream csv;
    rep.write_csv(csv);
    std::ostringstream label;
    label << "rvm a=" << h.a << " b=" << h.b << " c=" << h.c << " d=" << h.d;
    auto r = std::make_unique<sbl_record>();
    r->json = sbl::truncation_record(rep, label.str());
    r->csv = csv.str();
    r->code = rep.verdict == sbl::ProbeVerdict::divergence_evidence ? SBL_DIVERGENCE_EVIDENCE : SBL_CONVERGENT_ESTIMATE;
    *out = r.release();
  });
}

sbl_status sbl_demo_impropriety(const sbl_dataset* data, const sbl_kernel* kernel, const sbl_hyper* hp,
                                const sbl_chain_config* cfg, const double* T_grid, size_t grid_len,
                                sbl_record** out) {
  return guard([&] {
    need(hp, "hyperparameters");
    need(out, "out");
    const sbl::Dataset& ds = with_response(data);
    const sbl::Matrix K = design(ds, kernel_spec(kernel));
    const sbl::RvmHyperParams h{hp->a, hp->b, hp->c, hp->d};
    const auto rep = sbl::impropriety_demo(ds.y, K, h, chain_config(cfg), grid(T_grid, grid_len));
    std::ostringstream csv;
    rep.probe.write_csv(csv);
    auto r = std::make_unique<sbl_record>();
    r->json = sbl::demo_record(rep);
    r->csv = csv.str();
    r->code = rep.probe.verdict == sbl::ProbeVerdict::divergence_evidence ? SBL_DIVERGENCE_EVIDENCE
                                                                           : SBL_CONVERGENT_ESTIMATE;
    *out = r.release();
  });
}

}  // extern "C"
