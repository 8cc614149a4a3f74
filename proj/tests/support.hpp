#pragma once

#include "recon/error.hpp"
#include "recon/hierarchy.hpp"

#include <doctest.h>

#define CHECK_ERROR(expr, expected)                                       \
  do {                                                                    \
    bool thrown_ = false;                                                 \
    try {                                                                 \
      (void)(expr);                                                       \
    } catch (const recon::Error& e_) {                                    \
      thrown_ = true;                                                     \
      CHECK_MESSAGE(e_.code() == (expected), e_.what());                  \
    }                                                                     \
    CHECK_MESSAGE(thrown_, "expected " << recon::error_code_name(expected)); \
  } while (0)

namespace testing {

inline recon::SummingMatrix three_node() {
  return recon::build_summing_matrix(recon::HierarchySpec::parse("Total = A + B"));
}

inline recon::SummingMatrix figure_one() {
  return recon::build_summing_matrix(recon::HierarchySpec::two_level({3, 2}));
}

inline recon::SummingMatrix forty_three() {
  return recon::build_summing_matrix(recon::HierarchySpec::two_level(std::vector<int>(6, 6)));
}

inline recon::SummingMatrix seven_series() {
  return recon::build_summing_matrix(recon::HierarchySpec::two_level({2, 2}));
}

}  // namespace testing
