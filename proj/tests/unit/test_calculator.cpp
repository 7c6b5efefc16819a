// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <fstream>
#include <string>

#include "dmoa/agents.hpp"
#include "dmoa/error.hpp"

namespace {

TEST(Calculator, CorpusMatchesReferenceEvaluator) {
  std::ifstream in(std::string(DMOA_TEST_DATA) + "/calculator_corpus.tsv");
  ASSERT_TRUE(in) << "missing corpus";
  std::string line;
  int checked = 0, errors = 0;
  while (std::getline(in, line)) {
    const auto tab = line.rfind('\t');
    ASSERT_NE(tab, std::string::npos) << line;
    const std::string expr = line.substr(0, tab), want = line.substr(tab + 1);
    if (want == "error") {
      EXPECT_THROW(dmoa::evaluate_expression(expr), dmoa::Error) << expr;
      ++errors;
    } else {
      EXPECT_EQ(dmoa::evaluate_expression(expr), std::stod(want)) << expr;
    }
    ++checked;
  }
  EXPECT_EQ(checked, 200);
  EXPECT_EQ(errors, 10);
}

TEST(Calculator, UnicodeOperatorsAndUnarySigns) {
  EXPECT_EQ(dmoa::evaluate_expression("6 × 7"), 42.0);
  EXPECT_EQ(dmoa::evaluate_expression("9 ÷ 2"), 4.5);
  EXPECT_EQ(dmoa::evaluate_expression("5 − 8"), -3.0);
  EXPECT_EQ(dmoa::evaluate_expression("--3"), 3.0);
  EXPECT_EQ(dmoa::evaluate_expression("-(2 + 3) * +2"), -10.0);
}

TEST(Calculator, DivisionByZeroMessage) {
  try {
    dmoa::evaluate_expression("1/(3-3)");
    FAIL();
  } catch (const dmoa::Error& e) {
    EXPECT_STREQ(e.what(), "calculator: division by zero");
  }
}

TEST(Calculator, RendersShortestRoundTrip) {
  EXPECT_EQ(dmoa::render_number(0.1 + 0.2), "0.30000000000000004");
  EXPECT_EQ(dmoa::render_number(2.5), "2.5");
  EXPECT_EQ(dmoa::render_number(-0.0), "0");
  EXPECT_EQ(dmoa::calculator_tool("1/4"), "0.25");
}

}  // namespace
