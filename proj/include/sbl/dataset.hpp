#pragma once

#include <string>
#include <vector>

#include "sbl/kernel_design.hpp"

namespace sbl {

struct Dataset {
  std::string source;
  Matrix X;
  Vector y;
  std::vector<std::string> covariate_names;
  std::string response_name;

  Eigen::Index rows() const noexcept { return X.rows(); }
  Eigen::Index cols() const noexcept { return X.cols(); }
};

/// Reads a comma-separated file with a header row. Every cell must parse as
/// a finite number; errors name the 1-based data row and the column.
/// response_column empty means "no response" (all columns are covariates).
Dataset ingest_csv(const std::string& path, const std::string& response_column);
Dataset parse_csv(const std::string& text, const std::string& response_column, const std::string& source = "<memory>");

/// Throws unless every response is exactly 0 or 1.
void require_binary_response(const Dataset& d);

}  // namespace sbl
