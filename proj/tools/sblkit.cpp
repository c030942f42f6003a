// sblkit: command-line front end over the sbl C interface.
//
// Exit codes: 0 success / Proper, 1 error, 2 Improper, 3 Undetermined,
// 4 sampler refused by the propriety gate, 5 a verification suite failed.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sbl/sbl.h"

namespace {

constexpr int kExitError = 1;
constexpr int kExitImproper = 2;
constexpr int kExitUndetermined = 3;
constexpr int kExitRefused = 4;
constexpr int kExitSuiteFailed = 5;

struct Failure {
  sbl_status status;
};

void check(sbl_status s) {
  if (s != SBL_OK) throw Failure{s};
}

// RAII owners for the C handles.
template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
  T** out() { return &p; }
};
using Dataset = Handle<sbl_dataset, sbl_dataset_free>;
using Record = Handle<sbl_record, sbl_record_free>;
using Fit = Handle<sbl_rvm_fit, sbl_rvm_fit_free>;
using Trace = Handle<sbl_trace, sbl_trace_free>;

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw CLI::ValidationError("list", "cannot parse '" + item + "' as a number");
    v.push_back(x);
  }
  return v;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int verdict_exit(int code) {
  return code == SBL_PROPER ? 0 : (code == SBL_IMPROPER ? kExitImproper : kExitUndetermined);
}

std::string verdict_line(const std::string& json) {
  // "status":"X" and "rule":"Y" are always present in a verdict record
  auto field = [&json](const std::string& key) {
    const std::string tag = "\"" + key + "\":\"";
    const auto at = json.find(tag);
    if (at == std::string::npos) return std::string("?");
    const auto start = at + tag.size();
    return json.substr(start, json.find('"', start) - start);
  };
  return field("status") + " (" + field("rule") + ")";
}

struct DataArgs {
  std::string path;
  std::string response = "y";
  std::string kernel = "gaussian";
  double theta = 1.0;

  void add(CLI::App* app, bool data_required = true) {
    auto* o = app->add_option("--data", path, "CSV file with a header row");
    if (data_required) o->required();
    app->add_option("--response", response, "name of the response column")->capture_default_str();
    app->add_option("--kernel", kernel, "gaussian, laplace, polynomial or linear")->capture_default_str();
    app->add_option("--theta", theta, "kernel parameter")->capture_default_str();
  }
  sbl_kernel spec() const { return {kernel.c_str(), theta}; }
};

struct HyperArgs {
  double a = 1.0, b = 1.0, c = 1.0, d = 1.0;
  void add(CLI::App* app) {
    app->add_option("--a", a, "lambda prior shape")->capture_default_str();
    app->add_option("--b", b, "lambda prior rate")->capture_default_str();
    app->add_option("--c", c, "1/sigma2 prior shape")->capture_default_str();
    app->add_option("--d", d, "1/sigma2 prior rate")->capture_default_str();
  }
  sbl_hyper hyper() const { return {a, b, c, d}; }
};

struct ChainArgs {
  std::uint64_t iter = 1000, burn_in = 0, thin = 1, seed = 1;
  bool allow_improper = false;
  void add(CLI::App* app) {
    app->add_option("--iter", iter, "total iterations")->capture_default_str();
    app->add_option("--burn-in", burn_in, "discarded leading iterations")->capture_default_str();
    app->add_option("--thin", thin, "keep every thin-th iteration")->capture_default_str();
    app->add_option("--seed", seed, "random seed")->capture_default_str();
    app->add_flag("--allow-improper", allow_improper, "sample even when the gate does not say Proper");
  }
  sbl_chain_config config() const { return {iter, burn_in, thin, seed, allow_improper ? 1 : 0}; }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse Bayesian kernel learning toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sbl_version()));

  // check-propriety
  auto* check_cmd = app.add_subcommand("check-propriety", "decide posterior propriety of a prior configuration");
  HyperArgs check_hp;
  check_hp.add(check_cmd);
  std::string check_prior = "shape-rate";
  double check_scale = 1.0;
  long check_n = 0;
  bool check_classifier = false;
  double u1 = 0.1, u2 = 10.0, lambda0 = 1e-4;
  DataArgs check_data;
  check_data.add(check_cmd, false);
  check_cmd->add_option("--prior", check_prior, "shape-rate, jeffreys, half-cauchy or gumbel2")->capture_default_str();
  check_cmd->add_option("--scale", check_scale, "scale of the half-cauchy or gumbel2 prior")->capture_default_str();
  check_cmd->add_option("--n", check_n, "number of observations when no data is given");
  check_cmd->add_flag("--classifier", check_classifier, "check the kernel classifier hierarchy instead");
  check_cmd->add_option("--u1", u1, "classifier theta lower bound")->capture_default_str();
  check_cmd->add_option("--u2", u2, "classifier theta upper bound")->capture_default_str();
  check_cmd->add_option("--lambda0", lambda0, "classifier fixed intercept precision")->capture_default_str();

  // fit-rvm
  auto* fit_cmd = app.add_subcommand("fit-rvm", "type-II maximum likelihood RVM fit");
  DataArgs fit_data;
  fit_data.add(fit_cmd);
  HyperArgs fit_hp{1.0, 0.0, 1.0, 0.0};
  fit_hp.add(fit_cmd);
  std::string fit_grid, fit_out;
  int fit_folds = 5, fit_max_iter = 1000;
  double fit_tol = 1e-8;
  fit_cmd->add_option("--theta-grid", fit_grid, "comma-separated theta values for k-fold cross validation");
  fit_cmd->add_option("--folds", fit_folds, "cross-validation folds")->capture_default_str();
  fit_cmd->add_option("--max-iter", fit_max_iter, "iteration cap")->capture_default_str();
  fit_cmd->add_option("--tol", fit_tol, "relative evidence tolerance")->capture_default_str();
  fit_cmd->add_option("--out", fit_out, "fit record file (default stdout)");

  // predict
  auto* pred_cmd = app.add_subcommand("predict", "apply a saved fit to new rows");
  std::string pred_fit, pred_data, pred_response, pred_out;
  pred_cmd->add_option("--fit", pred_fit, "fit record written by fit-rvm")->required();
  pred_cmd->add_option("--data", pred_data, "CSV of covariate rows")->required();
  pred_cmd->add_option("--response", pred_response, "column to drop from the CSV, if present");
  pred_cmd->add_option("--out", pred_out, "prediction records (default stdout)");

  // gibbs-rvm
  auto* gibbs_cmd = app.add_subcommand("gibbs-rvm", "Gibbs sampler for the fully Bayesian RVM");
  DataArgs gibbs_data;
  gibbs_data.add(gibbs_cmd);
  HyperArgs gibbs_hp;
  gibbs_hp.add(gibbs_cmd);
  ChainArgs gibbs_chain;
  gibbs_chain.add(gibbs_cmd);
  std::string gibbs_trace, gibbs_summary;
  gibbs_cmd->add_option("--trace-out", gibbs_trace, "trace CSV");
  gibbs_cmd->add_option("--summary-out", gibbs_summary, "summary record (default stdout)");

  // fit-classifier
  auto* cls_cmd = app.add_subcommand("fit-classifier", "MCMC for the kernel classifier");
  DataArgs cls_data;
  cls_data.add(cls_cmd);
  cls_data.theta = 0.0;
  ChainArgs cls_chain;
  cls_chain.add(cls_cmd);
  std::string cls_loss = "logistic", cls_trace, cls_summary, cls_predict, cls_predict_out;
  double cls_a = 1.0, cls_b = 1.0, cls_c = 1.0, cls_d = 1.0;
  bool cls_jeffreys = false;
  cls_cmd->add_option("--loss", cls_loss, "logistic or hinge")->capture_default_str();
  cls_cmd->add_option("--a", cls_a, "lambda prior shape")->capture_default_str();
  cls_cmd->add_option("--b", cls_b, "lambda prior rate")->capture_default_str();
  cls_cmd->add_option("--c", cls_c, "1/sigma2 prior shape")->capture_default_str();
  cls_cmd->add_option("--d", cls_d, "1/sigma2 prior rate")->capture_default_str();
  cls_cmd->add_flag("--jeffreys", cls_jeffreys, "Jeffreys prior on every lambda_i");
  cls_cmd->add_option("--u1", u1, "theta lower bound")->capture_default_str();
  cls_cmd->add_option("--u2", u2, "theta upper bound")->capture_default_str();
  cls_cmd->add_option("--lambda0", lambda0, "fixed intercept precision")->capture_default_str();
  cls_cmd->add_option("--trace-out", cls_trace, "trace CSV");
  cls_cmd->add_option("--summary-out", cls_summary, "summary record (default stdout)");
  cls_cmd->add_option("--predict", cls_predict, "CSV of rows to classify");
  cls_cmd->add_option("--predict-out", cls_predict_out, "class prediction records (default stdout)");

  // verify-bounds
  auto* ver_cmd = app.add_subcommand("verify-bounds", "run the bound and identity property suites");
  std::uint64_t ver_seed = 7;
  std::size_t ver_instances = 1000;
  ver_cmd->add_option("--seed", ver_seed, "random seed")->capture_default_str();
  ver_cmd->add_option("--instances", ver_instances, "random instances per suite")->capture_default_str();

  // estimate-marginal
  auto* est_cmd = app.add_subcommand("estimate-marginal", "truncated marginal mass on a T grid (n <= 2)");
  DataArgs est_data;
  est_data.add(est_cmd);
  HyperArgs est_hp;
  est_hp.add(est_cmd);
  std::string est_grid, est_csv, est_out;
  est_cmd->add_option("--t-grid", est_grid, "comma-separated increasing T values (default 1e1..1e5)");
  est_cmd->add_option("--csv-out", est_csv, "(T, I(T)) CSV");
  est_cmd->add_option("--out", est_out, "report record (default stdout)");

  // demo-impropriety
  auto* demo_cmd = app.add_subcommand("demo-impropriety", "sample an improper posterior next to a divergence probe");
  DataArgs demo_data;
  demo_data.add(demo_cmd);
  HyperArgs demo_hp{1.0, 0.0, 1.0, 0.0};
  demo_hp.add(demo_cmd);
  ChainArgs demo_chain;
  demo_chain.add(demo_cmd);
  std::string demo_grid, demo_csv, demo_out;
  demo_cmd->add_option("--t-grid", demo_grid, "comma-separated increasing T values (default 1e1..1e5)");
  demo_cmd->add_option("--csv-out", demo_csv, "(T, I(T)) CSV");
  demo_cmd->add_option("--out", demo_out, "report record (default stdout)");

  CLI11_PARSE(app, argc, argv);

  auto load = [](const DataArgs& a, Dataset& d) {
    check(sbl_dataset_read_csv(a.path.c_str(), a.response.c_str(), d.out()));
  };

  try {
    if (*check_cmd) {
      sbl_lambda_prior prior{SBL_LAMBDA_SHAPE_RATE, check_hp.a, check_hp.b, check_scale};
      if (check_prior == "jeffreys") {
        prior.kind = SBL_LAMBDA_JEFFREYS;
      } else if (check_prior == "half-cauchy") {
        prior.kind = SBL_LAMBDA_HALF_CAUCHY;
      } else if (check_prior == "gumbel2") {
        prior.kind = SBL_LAMBDA_GUMBEL2;
      } else if (check_prior != "shape-rate") {
        std::cerr << "error: unknown prior '" << check_prior << "'\n";
        return kExitError;
      }
      Record r;
      if (check_classifier) {
        sbl_classifier_priors p{prior, check_hp.c, check_hp.d, u1, u2, lambda0};
        check(sbl_check_classifier_propriety(&p, r.out()));
      } else {
        Dataset d;
        const sbl_kernel k = check_data.spec();
        if (!check_data.path.empty()) load(check_data, d);
        check(sbl_check_rvm_propriety(&prior, check_hp.c, check_hp.d, d.p, d.p ? &k : nullptr, check_n, r.out()));
      }
      const std::string json = sbl_record_json(r.p);
      std::cout << verdict_line(json) << "\n" << json << "\n";
      return verdict_exit(sbl_record_code(r.p));
    }

    if (*fit_cmd) {
      Dataset d;
      load(fit_data, d);
      const std::vector<double> grid = parse_list(fit_grid);
      const sbl_kernel k = fit_data.spec();
      sbl_fit_options fo = sbl_fit_options_default();
      fo.max_iter = fit_max_iter;
      fo.tol = fit_tol;
      const sbl_hyper hp = fit_hp.hyper();
      Fit f;
      check(sbl_rvm_fit_run(d.p, &k, grid.data(), grid.size(), fit_folds, &fo, &hp, f.out()));
      Record r;
      check(sbl_rvm_fit_record(f.p, r.out()));
      const std::string json = sbl_record_json(r.p);
      if (json.find("\"caveat\":null") == std::string::npos)
        std::cerr << "caveat: with the stated priors the Bayesian reading of this model is not a proper posterior; "
                     "the fit is a plug-in estimate only (see the record's caveat and gate fields)\n";
      std::cerr << "relevance vectors: " << sbl_rvm_fit_relevance_count(f.p) << ", theta " << sbl_rvm_fit_theta(f.p)
                << ", sigma2 " << sbl_rvm_fit_sigma2(f.p) << "\n";
      write_text(fit_out, json + "\n");
      return 0;
    }

    if (*pred_cmd) {
      const std::string text = read_text(pred_fit);
      const std::string first = text.substr(0, text.find('\n'));
      Fit f;
      check(sbl_rvm_fit_load(first.c_str(), f.out()));
      Dataset d;
      check(sbl_dataset_read_csv(pred_data.c_str(), pred_response.c_str(), d.out()));
      const std::size_t p = sbl_dataset_cols(d.p);
      std::vector<double> x(p);
      std::ostringstream out;
      char buf[128];
      for (std::size_t i = 0; i < sbl_dataset_rows(d.p); ++i) {
        check(sbl_dataset_row(d.p, i, x.data(), p));
        double mean = 0.0, var = 0.0;
        check(sbl_rvm_fit_predict(f.p, x.data(), p, &mean, &var));
        std::snprintf(buf, sizeof buf, "{\"record\":\"prediction\",\"row\":%zu,\"mean\":%.17g,\"variance\":%.17g}\n",
                      i + 1, mean, var);
        out << buf;
      }
      write_text(pred_out, out.str());
      return 0;
    }

    if (*gibbs_cmd) {
      Dataset d;
      load(gibbs_data, d);
      const sbl_kernel k = gibbs_data.spec();
      const sbl_hyper hp = gibbs_hp.hyper();
      const sbl_chain_config cfg = gibbs_chain.config();
      Trace t;
      check(sbl_gibbs_rvm(d.p, &k, &hp, &cfg, t.out()));
      Record s;
      check(sbl_trace_summary(t.p, s.out()));
      write_text(gibbs_summary, std::string(sbl_record_json(s.p)) + "\n");
      if (!gibbs_trace.empty()) {
        Record c;
        check(sbl_trace_csv(t.p, c.out()));
        write_text(gibbs_trace, sbl_record_csv(c.p));
      }
      return 0;
    }

    if (*cls_cmd) {
      Dataset d;
      load(cls_data, d);
      const sbl_kernel k = cls_data.spec();
      sbl_classifier_priors pr{{cls_jeffreys ? SBL_LAMBDA_JEFFREYS : SBL_LAMBDA_SHAPE_RATE, cls_a, cls_b, 1.0},
                               cls_c, cls_d, u1, u2, lambda0};
      const sbl_chain_config cfg = cls_chain.config();
      Trace t;
      check(sbl_classifier_run(d.p, &k, cls_loss.c_str(), &pr, &cfg, t.out()));
      Record s;
      check(sbl_trace_summary(t.p, s.out()));
      write_text(cls_summary, std::string(sbl_record_json(s.p)) + "\n");
      if (!cls_trace.empty()) {
        Record c;
        check(sbl_trace_csv(t.p, c.out()));
        write_text(cls_trace, sbl_record_csv(c.p));
      }
      if (!cls_predict.empty()) {
        Dataset q;
        check(sbl_dataset_read_csv(cls_predict.c_str(), cls_data.response.c_str(), q.out()));
        const std::size_t p = sbl_dataset_cols(q.p);
        std::vector<double> x(p);
        std::ostringstream out;
        char buf[160];
        for (std::size_t i = 0; i < sbl_dataset_rows(q.p); ++i) {
          check(sbl_dataset_row(q.p, i, x.data(), p));
          double prob = 0.0, mcse = 0.0;
          check(sbl_classifier_predict(t.p, x.data(), p, &prob, &mcse));
          std::snprintf(buf, sizeof buf,
                        "{\"record\":\"class_prediction\",\"row\":%zu,\"probability\":%.17g,\"class\":%d,"
                        "\"mcse\":%.17g}\n",
                        i + 1, prob, prob > 0.5 ? 1 : 0, mcse);
          out << buf;
        }
        write_text(cls_predict_out, out.str());
      }
      return 0;
    }

    if (*ver_cmd) {
      Record r;
      check(sbl_verify_bounds(ver_seed, ver_instances, r.out()));
      std::cout << sbl_record_json(r.p) << "\n";
      return sbl_record_code(r.p) == 0 ? 0 : kExitSuiteFailed;
    }

    if (*est_cmd) {
      Dataset d;
      load(est_data, d);
      const sbl_kernel k = est_data.spec();
      const sbl_hyper hp = est_hp.hyper();
      const std::vector<double> grid = parse_list(est_grid);
      Record r;
      check(sbl_estimate_marginal(d.p, &k, &hp, grid.data(), grid.size(), r.out()));
      write_text(est_out, std::string(sbl_record_json(r.p)) + "\n");
      if (!est_csv.empty()) write_text(est_csv, sbl_record_csv(r.p));
      return 0;
    }

    if (*demo_cmd) {
      Dataset d;
      load(demo_data, d);
      const sbl_kernel k = demo_data.spec();
      const sbl_hyper hp = demo_hp.hyper();
      sbl_chain_config cfg = demo_chain.config();
      cfg.allow_improper = 1;
      const std::vector<double> grid = parse_list(demo_grid);
      Record r;
      check(sbl_demo_impropriety(d.p, &k, &hp, &cfg, grid.data(), grid.size(), r.out()));
      write_text(demo_out, std::string(sbl_record_json(r.p)) + "\n");
      if (!demo_csv.empty()) write_text(demo_csv, sbl_record_csv(r.p));
      return 0;
    }
  } catch (const Failure& f) {
    std::cerr << "error (" << sbl_status_name(f.status) << "): " << sbl_last_error() << "\n";
    return f.status == SBL_ERR_REFUSED ? kExitRefused : kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
