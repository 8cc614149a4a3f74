#include "recon/hierarchy.hpp"

#include "recon/error.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace recon {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> default_level_names(int count) {
  std::vector<std::string> names;
  for (int l = 0; l < count; ++l) {
    if (l == count - 1) {
      names.emplace_back("Bottom");
    } else if (l == 0) {
      names.emplace_back("Top");
    } else {
      names.push_back("Level " + std::to_string(l));
    }
  }
  return names;
}

void fill_blocks(SummingMatrix& out) {
  out.m = static_cast<int>(out.s.rows());
  out.n = static_cast<int>(out.s.cols());
  out.m_star = out.m - out.n;
  out.u_t = derive_null_space(out.s);
  out.c = out.s.topRows(out.m_star);
  out.j = Matrix::Zero(out.n, out.m);
  out.j.rightCols(out.n).setIdentity();
}

}  // namespace

HierarchySpec HierarchySpec::parse(const std::string& text) {
  HierarchySpec spec;
  std::set<std::string> parents;
  std::set<std::string> seen_children;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 'PARENT = CHILD + ...'");
    }
    Constraint c;
    c.parent = trim(line.substr(0, eq));
    if (c.parent.empty()) fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": empty parent");
    std::istringstream rhs(line.substr(eq + 1));
    std::string child;
    while (std::getline(rhs, child, '+')) {
      child = trim(child);
      if (child.empty()) fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": empty child term");
      c.children.push_back(child);
    }
    if (c.children.empty()) fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": no children");
    parents.insert(c.parent);
    spec.constraints.push_back(std::move(c));
  }
  // Bottom nodes: never on a left-hand side, in order of first appearance.
  for (const auto& c : spec.constraints) {
    for (const auto& child : c.children) {
      if (!parents.count(child) && seen_children.insert(child).second) spec.bottom_ids.push_back(child);
    }
  }
  return spec;
}

HierarchySpec HierarchySpec::two_level(const std::vector<int>& group_sizes) {
  HierarchySpec spec;
  Constraint total{"Total", {}};
  std::vector<Constraint> groups;
  for (std::size_t g = 0; g < group_sizes.size(); ++g) {
    const std::string name(1, static_cast<char>('A' + g));
    total.children.push_back(name);
    Constraint grp{name, {}};
    for (int k = 0; k < group_sizes[g]; ++k) {
      const std::string leaf = name + static_cast<char>('A' + k);
      grp.children.push_back(leaf);
      spec.bottom_ids.push_back(leaf);
    }
    groups.push_back(std::move(grp));
  }
  spec.constraints.push_back(std::move(total));
  for (auto& g : groups) spec.constraints.push_back(std::move(g));
  return spec;
}

HierarchySpec HierarchySpec::single(const std::string& id) { return HierarchySpec{{}, {id}}; }

SummingMatrix build_summing_matrix(const HierarchySpec& spec) {
  if (spec.bottom_ids.empty()) fail(ErrorCode::EmptyBottomLevel, "hierarchy has no bottom series");

  std::map<std::string, int> bottom_index;
  for (std::size_t k = 0; k < spec.bottom_ids.size(); ++k) {
    if (!bottom_index.emplace(spec.bottom_ids[k], static_cast<int>(k)).second) {
      fail(ErrorCode::DuplicateNode, "bottom node '" + spec.bottom_ids[k] + "' listed twice");
    }
  }
  std::map<std::string, int> agg_index;
  for (std::size_t a = 0; a < spec.constraints.size(); ++a) {
    const auto& c = spec.constraints[a];
    if (bottom_index.count(c.parent)) {
      fail(ErrorCode::DuplicateNode, "'" + c.parent + "' is both an aggregate and a bottom node");
    }
    if (!agg_index.emplace(c.parent, static_cast<int>(a)).second) {
      fail(ErrorCode::DuplicateNode, "aggregate '" + c.parent + "' defined twice");
    }
    if (c.children.empty()) fail(ErrorCode::ParseError, "aggregate '" + c.parent + "' has no children");
    std::set<std::string> uniq(c.children.begin(), c.children.end());
    if (uniq.size() != c.children.size()) {
      fail(ErrorCode::DuplicateNode, "aggregate '" + c.parent + "' lists a child twice");
    }
  }
  for (const auto& c : spec.constraints) {
    for (const auto& child : c.children) {
      if (!agg_index.count(child) && !bottom_index.count(child)) {
        fail(ErrorCode::ParseError, "child '" + child + "' of '" + c.parent + "' is not a declared node");
      }
    }
  }

  const int n = static_cast<int>(spec.bottom_ids.size());
  const int n_agg = static_cast<int>(spec.constraints.size());

  // Rows of S for aggregates by DFS with cycle detection.
  enum class Mark { None, Active, Done };
  std::vector<Mark> mark(static_cast<std::size_t>(n_agg), Mark::None);
  std::vector<Eigen::RowVectorXd> rows(static_cast<std::size_t>(n_agg));
  std::function<Eigen::RowVectorXd(int)> row_of = [&](int a) -> Eigen::RowVectorXd {
    const auto ua = static_cast<std::size_t>(a);
    if (mark[ua] == Mark::Done) return rows[ua];
    if (mark[ua] == Mark::Active) {
      fail(ErrorCode::CycleDetected, "cycle through '" + spec.constraints[ua].parent + "'");
    }
    mark[ua] = Mark::Active;
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n);
    for (const auto& child : spec.constraints[ua].children) {
      if (auto it = bottom_index.find(child); it != bottom_index.end()) {
        r(it->second) += 1.0;
      } else {
        r += row_of(agg_index.at(child));
      }
    }
    rows[ua] = r;
    mark[ua] = Mark::Done;
    return r;
  };
  for (int a = 0; a < n_agg; ++a) row_of(a);

  // Level = longest path from a root aggregate. The graph is acyclic here,
  // so n_agg relaxation passes suffice.
  std::vector<int> level(static_cast<std::size_t>(n_agg), 0);
  for (int pass = 0; pass < n_agg; ++pass) {
    bool changed = false;
    for (int a = 0; a < n_agg; ++a) {
      for (const auto& child : spec.constraints[static_cast<std::size_t>(a)].children) {
        if (auto it = agg_index.find(child); it != agg_index.end()) {
          const auto uc = static_cast<std::size_t>(it->second);
          const int want = level[static_cast<std::size_t>(a)] + 1;
          if (level[uc] < want) {
            level[uc] = want;
            changed = true;
          }
        }
      }
    }
    if (!changed) break;
  }

  std::vector<int> order(static_cast<std::size_t>(n_agg));
  for (int a = 0; a < n_agg; ++a) order[static_cast<std::size_t>(a)] = a;
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return level[static_cast<std::size_t>(x)] < level[static_cast<std::size_t>(y)];
  });

  SummingMatrix out;
  out.s.resize(n_agg + n, n);
  const int bottom_level = n_agg == 0 ? 0 : *std::max_element(level.begin(), level.end()) + 1;
  for (int r = 0; r < n_agg; ++r) {
    const auto a = static_cast<std::size_t>(order[static_cast<std::size_t>(r)]);
    out.s.row(r) = rows[a];
    out.labels.push_back(spec.constraints[a].parent);
    out.levels.push_back(level[a]);
  }
  out.s.bottomRows(n).setIdentity();
  for (const auto& b : spec.bottom_ids) {
    out.labels.push_back(b);
    out.levels.push_back(bottom_level);
  }
  out.level_names = default_level_names(bottom_level + 1);
  fill_blocks(out);
  return out;
}

SummingMatrix summing_matrix_from(const Matrix& s, std::vector<std::string> labels) {
  SummingMatrix out;
  out.s = s;
  fill_blocks(out);
  if (labels.empty()) {
    for (int i = 0; i < out.m; ++i) labels.push_back("s" + std::to_string(i + 1));
  }
  if (static_cast<int>(labels.size()) != out.m) {
    fail(ErrorCode::DimensionMismatch, "label count does not match rows of S");
  }
  out.labels = std::move(labels);
  const bool has_agg = out.m_star > 0;
  for (int i = 0; i < out.m; ++i) out.levels.push_back(has_agg && i < out.m_star ? 0 : (has_agg ? 1 : 0));
  out.level_names = default_level_names(has_agg ? 2 : 1);
  return out;
}

Matrix derive_null_space(const Matrix& s) {
  const Eigen::Index m = s.rows();
  const Eigen::Index n = s.cols();
  if (n == 0 || m < n) fail(ErrorCode::OrderingViolated, "S must have at least as many rows as columns");
  if (s.bottomRows(n) != Matrix::Identity(n, n)) {
    fail(ErrorCode::OrderingViolated, "bottom block of S is not the identity");
  }
  const Eigen::Index m_star = m - n;
  Matrix u_t(m_star, m);
  u_t.leftCols(m_star).setIdentity();
  u_t.rightCols(n) = -s.topRows(m_star);
  return u_t;
}

ObservationPanel ObservationPanel::from_bottom(const Matrix& bottom, const SummingMatrix& s) {
  if (bottom.cols() != s.n) fail(ErrorCode::DimensionMismatch, "bottom panel width != n");
  ObservationPanel p;
  p.b = bottom;
  p.y = bottom * s.s.transpose();
  for (Eigen::Index t = 0; t < bottom.rows(); ++t) p.time_index.push_back(std::to_string(t + 1));
  return p;
}

ObservationPanel ObservationPanel::from_all(const Matrix& y, const SummingMatrix& s,
                                            std::vector<std::string> time_index) {
  if (y.cols() != s.m) fail(ErrorCode::DimensionMismatch, "panel width != m");
  ObservationPanel p;
  p.y = y;
  p.b = y.rightCols(s.n);
  if (time_index.empty()) {
    for (Eigen::Index t = 0; t < y.rows(); ++t) time_index.push_back(std::to_string(t + 1));
  }
  p.time_index = std::move(time_index);
  return p;
}

CoherenceReport validate_coherence(const ObservationPanel& panel, const SummingMatrix& s, double tol) {
  if (panel.y.cols() != s.m || panel.b.cols() != s.n || panel.b.rows() != panel.y.rows()) {
    fail(ErrorCode::DimensionMismatch, "panel does not match the summing matrix");
  }
  CoherenceReport rep;
  rep.per_series = Vector::Zero(s.m);
  if (panel.y.rows() == 0) return rep;
  const Matrix diff = (panel.y - panel.b * s.s.transpose()).cwiseAbs();
  rep.per_series = diff.colwise().maxCoeff().transpose();
  rep.max_violation = rep.per_series.maxCoeff();
  for (Eigen::Index t = 0; t < diff.rows(); ++t) {
    if (diff.row(t).maxCoeff() > tol) rep.incoherent_rows.push_back(t);
  }
  return rep;
}

}  // namespace recon
