#pragma once

#include <string>
#include <vector>

#include "msda/data.hpp"

namespace msda::cli {

/// Comma-separated file with a header row. A column named `y`, when
/// present, must come first and holds the outcome; every other column is a
/// feature, in order. Lines starting with '#' are skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv_table(const std::string& path);

/// Labeled domain; the file must have a leading `y` column.
DomainData read_labeled(const std::string& path);
/// Features-only domain. A leading `y` column is dropped and reported in
/// `warnings`.
DomainData read_unlabeled(const std::string& path, Warnings* warnings);

/// Writes `y,x1..xp` (or `x1..xp` without outcomes).
void write_domain(const std::string& path, const Matrix& x, const Vector* y);

}  // namespace msda::cli
