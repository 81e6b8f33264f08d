#include <gtest/gtest.h>

#include <cmath>

#include "sasmate/dataio.hpp"
#include "sasmate/models.hpp"

using namespace sasmate;

namespace {

ErrorCode code_of(std::string_view text) {
  try {
    load_ascii(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::InvalidDataset;
}

}  // namespace

TEST(LoadAscii, TwoColumnsWithHeader) {
  const auto f = load_ascii("# q I\n0.01 100.0\n0.02 50.0");
  EXPECT_EQ(f.dataset.size(), 2u);
  EXPECT_FALSE(f.dataset.has_errors());
  EXPECT_EQ(f.skipped_lines, 1u);
  EXPECT_EQ(f.column_count, 2);
  EXPECT_EQ(f.delimiter, Delimiter::Whitespace);
  EXPECT_DOUBLE_EQ(f.dataset.intensity[1], 50.0);
}

TEST(LoadAscii, CommaSeparatedIsSorted) {
  const auto f = load_ascii("0.02,50,2\n0.01,100,3");
  EXPECT_EQ(f.delimiter, Delimiter::Comma);
  ASSERT_EQ(f.dataset.size(), 2u);
  EXPECT_DOUBLE_EQ(f.dataset.q[0], 0.01);
  EXPECT_DOUBLE_EQ(f.dataset.q[1], 0.02);
  ASSERT_TRUE(f.dataset.has_errors());
  EXPECT_DOUBLE_EQ((*f.dataset.d_intensity)[0], 3.0);
  EXPECT_DOUBLE_EQ((*f.dataset.d_intensity)[1], 2.0);
}

TEST(LoadAscii, SemicolonsTabsAndCrlf) {
  EXPECT_EQ(load_ascii("0.1;2;0.1\r\n0.2;1;0.1\r\n").delimiter, Delimiter::Semicolon);
  const auto t = load_ascii("0.1\t2\n0.2\t1\n");
  EXPECT_EQ(t.delimiter, Delimiter::Whitespace);
  EXPECT_EQ(t.dataset.size(), 2u);
}

TEST(LoadAscii, NoNumericRows) {
  EXPECT_EQ(code_of("hello\nworld"), ErrorCode::NoNumericRows);
  EXPECT_EQ(code_of(""), ErrorCode::NoNumericRows);
  EXPECT_EQ(code_of("# only\n% comments\n"), ErrorCode::NoNumericRows);
  EXPECT_EQ(code_of("1\n2\n3\n"), ErrorCode::NoNumericRows);
}

TEST(LoadAscii, InconsistentColumns) {
  EXPECT_EQ(code_of("0.1 1 0.1\n0.2 2\n"), ErrorCode::InconsistentColumnCount);
}

TEST(LoadAscii, AllNonPositiveQ) {
  EXPECT_EQ(code_of("0 1\n-0.1 2\n"), ErrorCode::NonPositiveQ);
}

TEST(LoadAscii, SomeNonPositiveQDroppedWithWarning) {
  const auto f = load_ascii("0 1\n0.1 2\n0.2 3\n");
  EXPECT_EQ(f.dataset.size(), 2u);
  EXPECT_FALSE(f.warnings.empty());
}

TEST(LoadAscii, NonFiniteAndNonPositiveErrorRowsDropped) {
  const auto f = load_ascii("0.1 1 0.1\n0.2 nan 0.1\n0.3 inf 0.1\n0.4 1 0\n0.5 2 0.2\n");
  EXPECT_EQ(f.dataset.size(), 2u);
  EXPECT_EQ(f.skipped_lines, 3u);
  EXPECT_EQ(f.total_lines, 5u);
}

TEST(LoadAscii, DqColumnIgnoredWithWarning) {
  const auto f = load_ascii("0.1 10 1 0.005\n0.2 5 0.5 0.005\n");
  EXPECT_EQ(f.column_count, 4);
  ASSERT_EQ(f.warnings.size(), 1u);
  EXPECT_NE(f.warnings[0].find("dq"), std::string::npos);
  EXPECT_EQ(f.dataset.size(), 2u);
  EXPECT_TRUE(f.dataset.has_errors());
}

TEST(LoadAscii, DuplicateQAveraged) {
  const auto f = load_ascii("0.1 10 3\n0.1 20 4\n0.2 5 1\n");
  ASSERT_EQ(f.dataset.size(), 2u);
  EXPECT_DOUBLE_EQ(f.dataset.intensity[0], 15.0);
  EXPECT_DOUBLE_EQ((*f.dataset.d_intensity)[0], 2.5);  // sqrt(9 + 16) / 2
}

TEST(LoadAscii, HeaderStartingWithNumberSkipped) {
  const auto f = load_ascii("2 columns follow\n0.1 1\n0.2 2\n");
  EXPECT_EQ(f.dataset.size(), 2u);
  EXPECT_EQ(f.skipped_lines, 1u);
}

TEST(LoadAscii, ScientificNotation) {
  const auto f = load_ascii("1.0E-03 2.5e+02 1e1\n2.0e-3 1.25E2 5\n");
  EXPECT_DOUBLE_EQ(f.dataset.q[0], 1e-3);
  EXPECT_DOUBLE_EQ(f.dataset.intensity[0], 250.0);
}

TEST(LoadAscii, OutputSatisfiesDatasetInvariants) {
  const auto f = load_ascii("0.3 1\n0.1 3\n0.2 2\n0.1 5\n0.25 7\n");
  EXPECT_NO_THROW(f.dataset.validate());
  for (std::size_t i = 1; i < f.dataset.size(); ++i) EXPECT_GT(f.dataset.q[i], f.dataset.q[i - 1]);
}

TEST(SaveAscii, RoundTrip) {
  for (double noise : {0.0, 0.05}) {
    const auto d = generate_dataset("cylinder", {{"radius", 25}, {"length", 300}}, default_qgrid(1e-3, 0.7, 137), noise, 99);
    const std::string text = save_ascii(d);
    EXPECT_EQ(text.rfind(noise > 0 ? "# q I dI\n" : "# q I\n", 0), 0u);
    const auto back = load_ascii(text).dataset;
    ASSERT_EQ(back.size(), d.size());
    EXPECT_EQ(back.has_errors(), d.has_errors());
    for (std::size_t i = 0; i < d.size(); ++i) {
      EXPECT_NEAR(back.q[i], d.q[i], 1e-8 * d.q[i]);
      EXPECT_NEAR(back.intensity[i], d.intensity[i], 1e-8 * std::abs(d.intensity[i]));
      if (d.has_errors()) {
        EXPECT_NEAR((*back.d_intensity)[i], (*d.d_intensity)[i], 1e-8 * (*d.d_intensity)[i]);
      }
    }
  }
}

TEST(SaveAscii, EmptyDatasetRejected) {
  EXPECT_THROW(save_ascii(Dataset{}), Error);
}
