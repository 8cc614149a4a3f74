#pragma once

#include "recon/linalg.hpp"

#include <string>
#include <vector>

namespace recon {

/// One aggregation constraint: parent = sum of children.
struct Constraint {
  std::string parent;
  std::vector<std::string> children;
};

/// Aggregation structure as declared by the user. Grouped structures are
/// expressed as additional explicit constraint rows.
struct HierarchySpec {
  std::vector<Constraint> constraints;
  /// Leaf labels in column order of S. Derived from first appearance as a
  /// child when parsed from text.
  std::vector<std::string> bottom_ids;

  /// Parses the `PARENT = CHILD1 + CHILD2 + ...` edge-list format. Blank
  /// lines and `#` comments are ignored.
  static HierarchySpec parse(const std::string& text);

  /// Total -> groups -> leaves. Group g is labelled with a letter (A, B, ...)
  /// and its leaves with the letter pair (AA, AB, ...).
  static HierarchySpec two_level(const std::vector<int>& group_sizes);

  /// A single bottom series with no aggregates.
  static HierarchySpec single(const std::string& id);
};

/// Summing matrix and its block operators. Rows are ordered aggregates first
/// (by level, then declaration order) and bottom series last, so that
/// S = [C; I_n], J = [0 | I_n] and U' = [I_{m*} | -C].
struct SummingMatrix {
  Matrix s;    // m x n
  Matrix c;    // m* x n
  Matrix j;    // n x m
  Matrix u_t;  // m* x m
  int m = 0;
  int n = 0;
  int m_star = 0;

  /// Row labels of S (all series in hierarchy order).
  std::vector<std::string> labels;
  /// Level index per row; 0 is the top, the bottom level is the largest.
  std::vector<int> levels;
  /// Display names per level index: "Top", "Level 1", ..., "Bottom".
  std::vector<std::string> level_names;

  Matrix u() const { return u_t.transpose(); }
  int level_count() const { return static_cast<int>(level_names.size()); }
};

SummingMatrix build_summing_matrix(const HierarchySpec& spec);

/// Builds the block operators from an explicit S whose last n rows must be
/// the identity. Labels default to s1..sm; levels to {aggregate, bottom}.
SummingMatrix summing_matrix_from(const Matrix& s, std::vector<std::string> labels = {});

/// U' = [I_{m*} | -C]. Throws OrderingViolated when the bottom block of S is
/// not I_n.
Matrix derive_null_space(const Matrix& s);

/// Observations y_t (rows) in S row order; b is the bottom slice.
struct ObservationPanel {
  Matrix y;  // T x m
  Matrix b;  // T x n
  std::vector<std::string> time_index;

  static ObservationPanel from_bottom(const Matrix& bottom, const SummingMatrix& s);
  static ObservationPanel from_all(const Matrix& y, const SummingMatrix& s,
                                   std::vector<std::string> time_index = {});
  Eigen::Index rows() const { return y.rows(); }
};

struct CoherenceReport {
  double max_violation = 0.0;
  /// max_t |y_t - S b_t| per series (row of S).
  Vector per_series;
  /// Time rows whose violation exceeds the tolerance.
  std::vector<Eigen::Index> incoherent_rows;
  bool coherent() const { return incoherent_rows.empty(); }
};

inline constexpr double kDefaultCoherenceTol = 1e-8;

CoherenceReport validate_coherence(const ObservationPanel& panel, const SummingMatrix& s,
                                   double tol = kDefaultCoherenceTol);

}  // namespace recon
