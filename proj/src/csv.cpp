#include "recon/csv.hpp"

#include "recon/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace recon::csv {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& cell, const std::string& source, std::size_t line_no) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    fail(ErrorCode::ParseError,
         source + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
  }
  return v;
}

}  // namespace

LabeledMatrix parse(const std::string& text, const std::string& source) {
  LabeledMatrix out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto cells = split_row(t);
    if (!have_header) {
      if (cells.size() < 2) {
        fail(ErrorCode::ParseError, source + ":" + std::to_string(line_no) +
                                        ": header needs a label column and at least one series");
      }
      out.corner = cells.front();
      out.col_labels.assign(cells.begin() + 1, cells.end());
      have_header = true;
      continue;
    }
    if (cells.size() != out.col_labels.size() + 1) {
      fail(ErrorCode::ParseError, source + ":" + std::to_string(line_no) + ": expected " +
                                      std::to_string(out.col_labels.size() + 1) + " fields, got " +
                                      std::to_string(cells.size()));
    }
    out.row_labels.push_back(cells.front());
    std::vector<double> row;
    row.reserve(cells.size() - 1);
    for (std::size_t j = 1; j < cells.size(); ++j) row.push_back(parse_double(cells[j], source, line_no));
    rows.push_back(std::move(row));
  }
  if (!have_header) fail(ErrorCode::ParseError, source + ": missing header row");
  out.values.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(out.col_labels.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

LabeledMatrix read(const std::filesystem::path& path) { return parse(read_text(path), path.string()); }

std::string format_number(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string format(const LabeledMatrix& table, const std::vector<std::string>& comments) {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  out += table.corner;
  for (const auto& c : table.col_labels) out += "," + c;
  out += "\n";
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    out += idx < table.row_labels.size() ? table.row_labels[idx] : std::to_string(i + 1);
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) out += "," + format_number(table.values(i, j));
    out += "\n";
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::IoError, "cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) fail(ErrorCode::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::IoError, "cannot rename into " + path.string());
  }
}

}  // namespace recon::csv
