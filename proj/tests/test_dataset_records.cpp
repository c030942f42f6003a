#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "sbl/dataset.hpp"
#include "sbl/errors.hpp"
#include "sbl/records.hpp"
#include "test_util.hpp"

using namespace sbl;
using nlohmann::json;

namespace {

std::string error_text(auto&& f, ErrorCode expected) {
  try {
    f();
  } catch (const Error& e) {
    CHECK(e.code() == expected);
    return e.what();
  }
  FAIL("expected an sbl::Error");
  return {};
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("three rows, two covariates") {
  const Dataset d = parse_csv("x1,x2,y\n1,2,3\n4,5,6\n\n7,8.5,-9e-1\n", "y");
  CHECK(d.rows() == 3);
  CHECK(d.cols() == 2);
  CHECK(d.covariate_names == std::vector<std::string>{"x1", "x2"});
  CHECK(d.response_name == "y");
  CHECK(d.X(2, 1) == 8.5);
  CHECK(d.y(2) == -0.9);

  const Dataset mid = parse_csv("a,y,b\r\n1,2,3\r\n", "y");
  CHECK(mid.X(0, 1) == 3.0);
  CHECK(mid.y(0) == 2.0);

  const Dataset none = parse_csv("a,b\n1,2\n", "");
  CHECK(none.cols() == 2);
  CHECK(none.y.size() == 0);
}

TEST_CASE("parse errors") {
  auto msg = error_text([] { parse_csv("x1,x2\n1,2\n", "y"); }, ErrorCode::parse);
  CHECK(msg.find("x1, x2") != std::string::npos);
  msg = error_text([] { parse_csv("x,y\n1,2\n3,abc\n", "y"); }, ErrorCode::parse);
  CHECK(msg.find("row 2") != std::string::npos);
  CHECK(msg.find("'y'") != std::string::npos);
  CHECK(msg.find("abc") != std::string::npos);
  error_text([] { parse_csv("", "y"); }, ErrorCode::parse);
  error_text([] { parse_csv("x,y\n", "y"); }, ErrorCode::parse);
  msg = error_text([] { parse_csv("x,y\n1,2,3\n", "y"); }, ErrorCode::parse);
  CHECK(msg.find("row 1") != std::string::npos);
  error_text([] { parse_csv("x,y\n1,\n", "y"); }, ErrorCode::parse);
  error_text([] { parse_csv("x,y\n1,nan\n", "y"); }, ErrorCode::parse);
  error_text([] { parse_csv("y\n1\n", "y"); }, ErrorCode::parse);
  error_text([] { ingest_csv("/nonexistent/data.csv", "y"); }, ErrorCode::io);
}

TEST_CASE("reading from disk and binary responses") {
  const std::string path = "dataset_test_tmp.csv";
  {
    std::ofstream out(path);
    out << "x,label\n0.5,1\n-0.5,0\n";
  }
  const Dataset d = ingest_csv(path, "label");
  std::remove(path.c_str());
  CHECK(d.source == path);
  CHECK(d.rows() == 2);
  require_binary_response(d);
  Dataset bad = d;
  bad.y(1) = 0.5;
  const auto msg = error_text([&] { require_binary_response(bad); }, ErrorCode::input);
  CHECK(msg.find("row 2") != std::string::npos);
}

}

TEST_SUITE("records") {

TEST_CASE("verdict record") {
  const auto v = check_rvm_propriety(RvmHyperParams{1, 0, 1, 0});
  const json j = json::parse(verdict_record(v));
  CHECK(j["record"] == "propriety_verdict");
  CHECK(j["status"] == std::string(to_string(v.status)));
  CHECK(j["rule"] == std::string(to_string(v.rule)));
  CHECK(j["residual_used"].is_null());
  CHECK(j["inputs"]["c"] == 1.0);
  CHECK(verdict_record(v).find('\n') == std::string::npos);
}

TEST_CASE("fit record round trip") {
  Rng rng(3);
  Matrix X = testutil::random_matrix(rng, 10, 1);
  Vector y(10);
  for (int i = 0; i < 10; ++i) y(i) = std::sin(X(i, 0)) + 0.1 * rng.normal();
  const KernelSpec spec{KernelKind::gaussian, 0.8};
  SavedFit saved{fit_type2_ml(y, build_design_matrix(CovariateSet(X), spec)), spec, X};
  const auto gate = check_rvm_propriety(RvmHyperParams{1, 0, 1, 0});
  const std::string text = fit_record(saved, gate, "flat-prior reading is improper");
  const json j = json::parse(text);
  CHECK(j["gate"]["status"] == std::string(to_string(gate.status)));
  CHECK(j["caveat"] == "flat-prior reading is improper");
  CHECK(j["pruned"].size() + j["relevance_indices"].size() == 11);
  for (const auto& p : j["pruned"]) CHECK(j["lambda_hat"][p.get<std::size_t>()].is_null());

  const SavedFit back = parse_fit_record(text);
  CHECK(back.kernel.kind == spec.kind);
  CHECK(back.kernel.theta == spec.theta);
  CHECK(back.X == X);
  CHECK(back.fit.beta_mean == saved.fit.beta_mean);
  CHECK(back.fit.sigma2_hat == saved.fit.sigma2_hat);
  CHECK(back.fit.relevance_indices == saved.fit.relevance_indices);
  for (Eigen::Index i = 0; i < 11; ++i)
    CHECK((std::isinf(back.fit.lambda_hat(i)) ? std::isinf(saved.fit.lambda_hat(i))
                                                : back.fit.lambda_hat(i) == saved.fit.lambda_hat(i)));
  const CovariateSet cs(X);
  for (Eigen::Index i = 0; i < 10; ++i) {
    const Vector k = build_prediction_row(cs, cs.row(i), spec);
    CHECK(predict(back.fit, k).mean == predict(saved.fit, k).mean);
    CHECK(predict(back.fit, k).variance == predict(saved.fit, k).variance);
  }
}

TEST_CASE("malformed fit records") {
  error_text([] { parse_fit_record("not json"); }, ErrorCode::parse);
  error_text([] { parse_fit_record(R"({"record":"prediction"})"); }, ErrorCode::parse);
  error_text([] { parse_fit_record(R"({"record":"rvm_fit"})"); }, ErrorCode::parse);
}

TEST_CASE("non-finite numbers become null") {
  Vector x(1);
  x << 1.0;
  const json j = json::parse(prediction_record(x, {std::numeric_limits<double>::quiet_NaN(), 2.0}));
  CHECK(j["mean"].is_null());
  CHECK(j["variance"] == 2.0);
  const json c = json::parse(class_prediction_record(x, 0.75, 0.01));
  CHECK(c["class"] == 1);
}

TEST_CASE("suite and truncation records") {
  std::vector<SuiteResult> s(2);
  s[0].name = "a";
  s[0].cases = 3;
  s[1].name = "b";
  s[1].cases = 2;
  s[1].failures = 1;
  s[1].first_failure = "instance 0";
  const json j = json::parse(suites_record(s));
  CHECK(j["passed"] == false);
  CHECK(j["suites"][1]["first_failure"] == "instance 0");

  const TruncationReport r = make_truncation_report({10, 100, 1000, 10000}, {1, 2, 4, 8});
  const json t = json::parse(truncation_record(r, "x"));
  CHECK(t["verdict"] == std::string(to_string(r.verdict)));
  CHECK(t["estimate"].is_null());
  CHECK(t["I"].size() == 4);
}

}
