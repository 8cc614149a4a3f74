#include "recon/hierarchy.hpp"
#include "support.hpp"

using namespace recon;

TEST_SUITE("hierarchy") {
  TEST_CASE("figure one structure") {
    const auto spec = HierarchySpec::parse("Total = A + B\nA = AA + AB + AC\nB = BA + BB\n");
    const SummingMatrix s = build_summing_matrix(spec);
    CHECK(s.m == 8);
    CHECK(s.n == 5);
    CHECK(s.m_star == 3);
    Matrix expected(8, 5);
    expected << 1, 1, 1, 1, 1,  //
        1, 1, 1, 0, 0,          //
        0, 0, 0, 1, 1,          //
        Matrix::Identity(5, 5);
    CHECK(s.s == expected);
    CHECK(s.labels == std::vector<std::string>{"Total", "A", "B", "AA", "AB", "AC", "BA", "BB"});
    CHECK(s.level_names == std::vector<std::string>{"Top", "Level 1", "Bottom"});
    CHECK(s.levels == std::vector<int>{0, 1, 1, 2, 2, 2, 2, 2});
  }

  TEST_CASE("single series") {
    const SummingMatrix s = build_summing_matrix(HierarchySpec::single("y"));
    CHECK(s.m == 1);
    CHECK(s.n == 1);
    CHECK(s.m_star == 0);
    CHECK(s.s == Matrix::Identity(1, 1));
    CHECK(s.u_t.rows() == 0);
  }

  TEST_CASE("two leaves") {
    const SummingMatrix s = build_summing_matrix(HierarchySpec::parse("Total = A + B"));
    Matrix expected_s(3, 2);
    expected_s << 1, 1, 1, 0, 0, 1;
    Matrix expected_u(1, 3);
    expected_u << 1, -1, -1;
    CHECK(s.s == expected_s);
    CHECK(s.c == Matrix::Ones(1, 2));
    CHECK(s.u_t == expected_u);
    CHECK(derive_null_space(s.s) == expected_u);
  }

  TEST_CASE("block identities hold exactly") {
    for (const auto& s : {testing::three_node(), testing::figure_one(), testing::forty_three()}) {
      CHECK(s.j * s.s == Matrix::Identity(s.n, s.n));
      CHECK((s.u_t * s.s).cwiseAbs().maxCoeff() == 0.0);
      CHECK(s.s.topRows(s.m_star) == s.c);
      Eigen::FullPivLU<Matrix> lu(s.s);
      CHECK(lu.rank() == s.n);
    }
  }

  TEST_CASE("row sums of C count descendants") {
    const SummingMatrix s = build_summing_matrix(HierarchySpec::parse("T = X + Y\nX = X1 + X2 + X3\nY = Y1\n"));
    CHECK(s.c.rowwise().sum()(0) == 4.0);
    CHECK(s.c.rowwise().sum()(1) == 3.0);
    CHECK(s.c.rowwise().sum()(2) == 1.0);
  }

  TEST_CASE("grouped structure as explicit rows") {
    const auto spec = HierarchySpec::parse("# grouped\nTotal = AX + AY + BX + BY\nA = AX + AY\nB = BX + BY\nX = AX + BX\nY = AY + BY\n");
    const SummingMatrix s = build_summing_matrix(spec);
    CHECK(s.m == 9);
    CHECK(s.n == 4);
    CHECK((s.u_t * s.s).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("deterministic construction") {
    const auto a = build_summing_matrix(HierarchySpec::two_level({3, 2}));
    const auto b = build_summing_matrix(HierarchySpec::two_level({3, 2}));
    CHECK(a.s == b.s);
    CHECK(a.labels == b.labels);
  }

  TEST_CASE("structural errors") {
    CHECK_ERROR(build_summing_matrix(HierarchySpec::parse("A = B\nB = A\n")), ErrorCode::EmptyBottomLevel);
    CHECK_ERROR(build_summing_matrix(HierarchySpec::parse("T = A + B\nA = C + T\n")), ErrorCode::CycleDetected);
    CHECK_ERROR(build_summing_matrix(HierarchySpec::parse("T = A + A\n")), ErrorCode::DuplicateNode);
    CHECK_ERROR(build_summing_matrix(HierarchySpec{}), ErrorCode::EmptyBottomLevel);
    HierarchySpec dup;
    dup.constraints = {{"T", {"A", "B"}}};
    dup.bottom_ids = {"A", "B", "A"};
    CHECK_ERROR(build_summing_matrix(dup), ErrorCode::DuplicateNode);
  }

  TEST_CASE("null space needs bottom identity") {
    Matrix bad(3, 2);
    bad << 0, 1, 1, 1, 1, 0;
    CHECK_ERROR(derive_null_space(bad), ErrorCode::OrderingViolated);
  }

  TEST_CASE("coherence validation") {
    const SummingMatrix s = testing::figure_one();
    Matrix bottom(4, 5);
    bottom << 1, 2, 3, 4, 5, 0, 0, 0, 0, 0, -1, 2, -3, 4, -5, 0.5, 0.25, 0.125, 1, 2;
    ObservationPanel panel = ObservationPanel::from_bottom(bottom, s);
    auto report = validate_coherence(panel, s);
    CHECK(report.max_violation == 0.0);
    CHECK(report.coherent());

    panel.y(2, 1) += 1.0;
    report = validate_coherence(panel, s);
    CHECK(report.max_violation == doctest::Approx(1.0));
    CHECK(report.incoherent_rows == std::vector<Eigen::Index>{2});
    CHECK(report.per_series(1) == doctest::Approx(1.0));
    CHECK(report.per_series(0) == 0.0);

    ObservationPanel wrong = panel;
    wrong.y = Matrix::Zero(4, 7);
    CHECK_ERROR(validate_coherence(wrong, s), ErrorCode::DimensionMismatch);
  }
}
