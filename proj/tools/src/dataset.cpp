#include "msda/cli/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace msda::cli {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string format_number(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

}  // namespace

CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line);
    if (t.header.empty()) {
      t.header = cells;
      for (const auto& h : t.header) {
        if (h.empty()) throw DataError(path + ": empty column name in header");
      }
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header.size()) + " fields, got " +
                      std::to_string(cells.size()));
    }
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      const auto& s = cells[c];
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (s.empty() || ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
        throw DataError(path + ":" + std::to_string(lineno) + ": column '" + t.header[c] +
                        "' has non-numeric value '" + s + "'");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw DataError(path + ": missing header row");
  return t;
}

namespace {

Matrix features_from(const CsvTable& t, std::size_t first) {
  Matrix x(static_cast<Index>(t.rows.size()), static_cast<Index>(t.header.size() - first));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = first; c < t.header.size(); ++c) {
      x(static_cast<Index>(r), static_cast<Index>(c - first)) = t.rows[r][c];
    }
  }
  return x;
}

void check_columns(const CsvTable& t, const std::string& path) {
  for (std::size_t c = 1; c < t.header.size(); ++c) {
    if (t.header[c] == "y") throw DataError(path + ": column 'y' must be the first column");
  }
}

}  // namespace

DomainData read_labeled(const std::string& path) {
  const CsvTable t = read_csv_table(path);
  check_columns(t, path);
  if (t.header.front() != "y") throw DataError(path + ": first column must be 'y'");
  if (t.header.size() < 2) throw DataError(path + ": no feature columns");
  if (t.rows.empty()) throw DataError(path + ": no data rows");
  Vector y(static_cast<Index>(t.rows.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) y(static_cast<Index>(r)) = t.rows[r][0];
  return DomainData(features_from(t, 1), std::move(y), path);
}

DomainData read_unlabeled(const std::string& path, Warnings* warnings) {
  const CsvTable t = read_csv_table(path);
  check_columns(t, path);
  std::size_t first = 0;
  if (t.header.front() == "y") {
    first = 1;
    if (warnings) warnings->push_back(path + ": outcome column 'y' ignored");
  }
  if (t.header.size() <= first) throw DataError(path + ": no feature columns");
  if (t.rows.empty()) throw DataError(path + ": no data rows");
  return DomainData(features_from(t, first), std::nullopt, path);
}

void write_domain(const std::string& path, const Matrix& x, const Vector* y) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  std::string line;
  if (y) line = "y";
  for (Index c = 0; c < x.cols(); ++c) line += (line.empty() ? "" : ",") + ("x" + std::to_string(c + 1));
  out << line << '\n';
  for (Index r = 0; r < x.rows(); ++r) {
    line.clear();
    if (y) line = format_number((*y)(r));
    for (Index c = 0; c < x.cols(); ++c) line += (line.empty() ? "" : ",") + format_number(x(r, c));
    out << line << '\n';
  }
}

}  // namespace msda::cli
