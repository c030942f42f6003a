// Drives the sblkit binary end to end. argv[1] is its path.
#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbl/kernel_design.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string tool;
fs::path work;
int failures = 0;

void expect(bool ok, const std::string& what) {
  std::cout << (ok ? "ok   " : "FAIL ") << what << "\n";
  if (!ok) ++failures;
}

int run(const std::string& args, const std::string& stdout_file = "") {
  const fs::path out = work / (stdout_file.empty() ? "last_stdout.txt" : stdout_file);
  const std::string cmd = "\"" + tool + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                          (work / "last_stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l))
    if (!l.empty()) out.push_back(l);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: sbl_cli_test <path-to-sblkit>\n";
    return 2;
  }
  tool = argv[1];
  work = fs::current_path() / "cli_work";
  fs::create_directories(work);

  expect(run("check-propriety --a 1 --b 0 --c 1 --d 0") == 2, "flat priors exit 2");
  expect(slurp(work / "last_stdout.txt").rfind("Improper (Thm1_necessary_violated)", 0) == 0,
         "flat priors print Improper (Thm 1)");
  expect(run("check-propriety --a 0 --b 0 --c 0 --d 0") == 2, "all-zero hyperparameters exit 2");
  expect(run("check-propriety --prior jeffreys --c 1 --d 1") == 2, "Jeffreys exit 2");
  expect(run("check-propriety --a -0.25 --b 0 --c 1 --d 1") == 3, "b = 0, a = -1/4 exit 3");
  expect(run("check-propriety --a 1 --b 1 --c 1 --d 1 --n 10") == 0, "gamma(1,1), c = d = 1 exit 0");
  expect(run("check-propriety --a 1 --b 1 --c 1 --d 0") == 1, "d = 0 without data is an error");
  expect(run("check-propriety --classifier --prior jeffreys") == 2, "classifier Jeffreys exit 2");
  expect(run("check-propriety --classifier") == 0, "classifier defaults exit 0");

  {
    std::ofstream csv(work / "train.csv");
    csv << "x1,x2,y\n";
    for (int i = 0; i < 30; ++i) {
      const double a = -2.0 + 0.14 * i, b = std::cos(0.7 * i);
      csv << a << "," << b << "," << std::sin(a) + 0.3 * b + 0.05 * std::sin(17.0 * i) << "\n";
    }
  }
  const std::string train = (work / "train.csv").string();
  const std::string fitf = (work / "fit.jsonl").string();
  const std::string predf = (work / "pred.jsonl").string();
  expect(run("fit-rvm --data \"" + train + "\" --theta-grid 0.5,1,2 --out \"" + fitf + "\"") == 0, "fit-rvm");
  expect(run("predict --fit \"" + fitf + "\" --data \"" + train + "\" --response y --out \"" + predf + "\"") == 0,
         "predict");
  try {
    const json fit = json::parse(lines(slurp(fitf)).at(0));
    expect(fit.at("gate").at("status") == "Improper", "fit record carries the gate verdict");
    expect(!fit.at("caveat").is_null(), "fit record carries a caveat");
    const auto preds = lines(slurp(predf));
    expect(preds.size() == 30, "one prediction per row");
    sbl::Matrix X(30, 2);
    for (int i = 0; i < 30; ++i)
      for (int j = 0; j < 2; ++j) X(i, j) = fit.at("X")[i][j].get<double>();
    const sbl::KernelSpec spec{sbl::parse_kernel_kind(fit.at("kernel").at("kind").get<std::string>()),
                               fit.at("kernel").at("theta").get<double>()};
    const sbl::Matrix K = sbl::build_design_matrix(sbl::CovariateSet(X), spec).matrix();
    sbl::Vector beta(31);
    for (int j = 0; j < 31; ++j) beta(j) = fit.at("beta_mean")[j].get<double>();
    const sbl::Vector fitted = K * beta;
    double worst = 0.0;
    for (int i = 0; i < 30; ++i)
      worst = std::max(worst, std::abs(json::parse(preds.at(i)).at("mean").get<double>() - fitted(i)));
    expect(worst < 1e-12, "predict on training rows reproduces fitted values");
  } catch (const std::exception& e) {
    expect(false, std::string("fit/predict records parse: ") + e.what());
  }

  const std::string g1 = (work / "trace1.csv").string(), g2 = (work / "trace2.csv").string();
  const std::string gargs = "gibbs-rvm --data \"" + train + "\" --iter 400 --burn-in 100 --seed 5 --trace-out ";
  expect(run(gargs + "\"" + g1 + "\"") == 0 && run(gargs + "\"" + g2 + "\"") == 0, "gibbs-rvm runs");
  expect(!slurp(g1).empty() && slurp(g1) == slurp(g2), "seeded gibbs traces are identical");
  expect(run("gibbs-rvm --data \"" + train + "\" --a 1 --b 0 --c 1 --d 0 --iter 50") == 4,
         "improper gibbs run refused with exit 4");

  {
    std::ofstream csv(work / "classes.csv");
    csv << "x,y\n";
    for (int i = 0; i < 20; ++i) csv << -2.0 + 0.2 * i << "," << (i >= 10 ? 1 : 0) << "\n";
  }
  const std::string classes = (work / "classes.csv").string();
  const std::string c1 = (work / "cls1.csv").string(), c2 = (work / "cls2.csv").string();
  const std::string cargs = "fit-classifier --data \"" + classes + "\" --iter 600 --burn-in 200 --seed 3 --trace-out ";
  expect(run(cargs + "\"" + c1 + "\" --predict \"" + classes + "\"", "cls_pred.jsonl") == 0, "fit-classifier");
  expect(run(cargs + "\"" + c2 + "\"") == 0 && slurp(c1) == slurp(c2), "seeded classifier traces are identical");
  expect(lines(slurp(work / "cls_pred.jsonl")).size() == 21, "summary plus one class prediction per row");
  expect(run("fit-classifier --data \"" + classes + "\" --jeffreys --iter 50") == 4, "Jeffreys classifier refused");

  expect(run("verify-bounds --seed 7 --instances 1000") == 0, "verify-bounds over 1000 instances passes");
  try {
    expect(json::parse(slurp(work / "last_stdout.txt")).at("passed") == true, "suites record says passed");
  } catch (const std::exception& e) {
    expect(false, std::string("suites record parses: ") + e.what());
  }

  {
    std::ofstream csv(work / "one.csv");
    csv << "x,y\n0.3,0.8\n";
  }
  const std::string one = (work / "one.csv").string();
  expect(run("estimate-marginal --data \"" + one + "\" --a 1 --b 0 --c 1 --d 0 --t-grid 10,100,1000,10000,100000") ==
             0,
         "estimate-marginal");
  expect(slurp(work / "last_stdout.txt").find("DivergenceEvidence") != std::string::npos ||
             slurp(work / "last_stdout.txt").find("divergence") != std::string::npos,
         "flat-prior marginal shows divergence");
  expect(run("demo-impropriety --data \"" + one + "\" --a 1 --b 0 --c 1 --d 0 --iter 500") == 0, "demo-impropriety");
  expect(run("demo-impropriety --data \"" + one + "\" --a 1 --b 1 --c 1 --d 1 --iter 500") == 4,
         "demo refuses a proper configuration");

  expect(run("fit-rvm --data \"" + (work / "missing.csv").string() + "\"") == 1, "missing file exit 1");
  {
    std::ofstream csv(work / "bad.csv");
    csv << "x,y\n1,2\n3,abc\n";
  }
  expect(run("fit-rvm --data \"" + (work / "bad.csv").string() + "\"") == 1, "bad cell exit 1");
  expect(slurp(work / "last_stderr.txt").find("row 2") != std::string::npos, "bad cell error cites row 2");

  std::cout << (failures ? "FAILED" : "all CLI checks passed") << "\n";
  return failures ? 1 : 0;
}
