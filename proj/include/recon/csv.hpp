#pragma once

#include "recon/linalg.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace recon::csv {

/// A numeric table with a header row and an optional leading label column
/// (`t` for panels, row names for square covariance files).
struct LabeledMatrix {
  std::string corner = "t";
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Matrix values;
};

/// Lines starting with '#' are treated as comments and skipped.
LabeledMatrix parse(const std::string& text, const std::string& source = "<string>");
LabeledMatrix read(const std::filesystem::path& path);

/// Round-trip exact: numbers are written with 17 significant digits.
std::string format(const LabeledMatrix& table, const std::vector<std::string>& comments = {});

std::string format_number(double x);

/// Writes to a sibling temp file then renames, so readers never observe a
/// partially written file.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_text(const std::filesystem::path& path);

}  // namespace recon::csv
