#include "sbl/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sbl/errors.hpp"

namespace sbl {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void parse_error(const std::string& source, const std::string& msg) {
  throw Error(ErrorCode::parse, source + ": " + msg);
}

}  // namespace

Dataset parse_csv(const std::string& text, const std::string& response_column, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split(line);
      break;
    }
  }
  if (header.empty()) parse_error(source, "empty file (no header row)");

  long response = -1;
  std::string available;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == response_column) response = static_cast<long>(j);
    available += (j ? ", " : "") + header[j];
  }
  if (!response_column.empty() && response < 0)
    parse_error(source, "response column '" + response_column + "' not found; available columns: " + available);

  std::vector<std::vector<double>> rows;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row_no;
    const auto cells = split(line);
    if (cells.size() != header.size())
      parse_error(source, "row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                              " cells, header has " + std::to_string(header.size()));
    std::vector<double> values(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string& c = cells[j];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (c.empty() || ec != std::errc() || ptr != c.data() + c.size() || !std::isfinite(v))
        parse_error(source, "row " + std::to_string(row_no) + ", column '" + header[j] + "': cannot parse '" + c +
                                "' as a finite number");
      values[j] = v;
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) parse_error(source, "no data rows");

  Dataset d;
  d.source = source;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(header.size()) - (response >= 0 ? 1 : 0);
  if (p < 1) parse_error(source, "no covariate columns");
  d.X.resize(n, p);
  d.y.resize(response >= 0 ? n : 0);
  for (std::size_t j = 0; j < header.size(); ++j)
    if (static_cast<long>(j) != response) d.covariate_names.push_back(header[j]);
  if (response >= 0) d.response_name = header[static_cast<std::size_t>(response)];
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index c = 0;
    for (std::size_t j = 0; j < header.size(); ++j) {
      const double v = rows[static_cast<std::size_t>(i)][j];
      if (static_cast<long>(j) == response) {
        d.y(i) = v;
      } else {
        d.X(i, c++) = v;
      }
    }
  }
  return d;
}

Dataset ingest_csv(const std::string& path, const std::string& response_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), response_column, path);
}

void require_binary_response(const Dataset& d) {
  for (Eigen::Index i = 0; i < d.y.size(); ++i)
    if (d.y(i) != 0.0 && d.y(i) != 1.0)
      throw Error(ErrorCode::input, d.source + ": row " + std::to_string(i + 1) + ", column '" + d.response_name +
                                        "': class labels must be 0 or 1");
}

}  // namespace sbl
