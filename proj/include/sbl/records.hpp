#pragma once

#include <map>
#include <string>
#include <vector>

#include "sbl/impropriety_lab.hpp"
#include "sbl/mcmc_trace.hpp"
#include "sbl/propriety_gate.hpp"
#include "sbl/rvm_regression.hpp"

namespace sbl {

// Every record is a single line of JSON with a "record" key naming its type.
// Non-finite numbers are written as null.

struct SavedFit {
  RvmFit fit;
  KernelSpec kernel;
  Matrix X;
};

std::string verdict_record(const ProprietyVerdict& v);

std::string fit_record(const SavedFit& saved, const ProprietyVerdict& gate, const std::string& caveat,
                       const CrossValidationResult* cv = nullptr);
/// Inverse of fit_record for the fields needed to predict.
SavedFit parse_fit_record(const std::string& text);

std::string prediction_record(const Eigen::Ref<const Vector>& x_new, const PredictiveDistribution& p);
std::string class_prediction_record(const Eigen::Ref<const Vector>& x_new, double probability, double mcse);

std::string trace_summary_record(const std::string& kind, const McmcTrace& trace, const ProprietyVerdict& gate);

std::string truncation_record(const TruncationReport& r, const std::string& label);
std::string demo_record(const DemoReport& r);
std::string suites_record(const std::vector<SuiteResult>& suites);

}  // namespace sbl
