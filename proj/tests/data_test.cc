// Copyright 2026 The duality-nets Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "duality_nets/data.h"

#include <filesystem>
#include <fstream>
#include <functional>

#include <gtest/gtest.h>

#include "duality_nets/error.h"

namespace dn {
namespace {

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

std::string TempPath(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "duality_nets_data_test";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

TEST(Generate, DeterministicPerSeed) {
  GeneratorSpec s;
  s.n = 6;
  s.d = 4;
  s.k = 2;
  s.seed = 9;
  const Dataset a = Generate(s), b = Generate(s);
  EXPECT_EQ(MaxAbsDiff(a.x, b.x), 0.0);
  EXPECT_EQ(MaxAbsDiff(a.labels, b.labels), 0.0);
  s.seed = 10;
  EXPECT_GT(MaxAbsDiff(a.x, Generate(s).x), 0.0);
}

TEST(Generate, RankOneCarriesItsFactor) {
  GeneratorSpec s;
  s.kind = GeneratorKind::kRankOne;
  s.n = 5;
  s.d = 3;
  const Dataset ds = Generate(s);
  ASSERT_TRUE(ds.rank_one.has_value());
  EXPECT_EQ(NumericalRank(ds.x), 1);
  for (double c : ds.rank_one->c) EXPECT_GT(c, 0.0);
  EXPECT_NO_THROW(ValidateDataset(ds));
  EXPECT_EQ(ParseGeneratorKind("teacher"), GeneratorKind::kTeacher);
  EXPECT_EQ(CodeOf([] { ParseGeneratorKind("uniform"); }), ErrorCode::kInvalidInput);
}

TEST(Whiten, RowsBecomeOrthonormal) {
  GeneratorSpec s;
  s.n = 4;
  s.d = 7;
  s.seed = 3;
  const Dataset ds = Whiten(Generate(s));
  EXPECT_TRUE(ds.whitened);
  EXPECT_LE(MaxAbsDiff(MatMulT(ds.x, ds.x), Matrix::Identity(4)), 1e-12);
  s.n = 8;
  EXPECT_EQ(CodeOf([&] { Whiten(Generate(s)); }), ErrorCode::kCannotWhiten);
}

TEST(OneHot, EncodesAndRejectsBadLabels) {
  const Matrix y = OneHot({2, 0, 1}, 3);
  EXPECT_EQ(y(0, 2), 1.0);
  EXPECT_EQ(y(1, 0), 1.0);
  EXPECT_EQ(FrobeniusDot(y, y), 3.0);
  EXPECT_EQ(CodeOf([] { OneHot({0, 3}, 3); }), ErrorCode::kInvalidLabel);
  const Matrix b = BalancedOneHot(6, 3);
  EXPECT_EQ(ClassIndex(b), (std::vector<int>{0, 0, 1, 1, 2, 2}));
  EXPECT_EQ(CodeOf([] { BalancedOneHot(5, 3); }), ErrorCode::kInvalidInput);
}

TEST(OneHot, BalancedSortsByClass) {
  const OneHotEncoding e = OneHotBalanced({1, 0, 1, 0}, 2);
  EXPECT_TRUE(e.balanced);
  EXPECT_EQ(e.order, (std::vector<int>{1, 3, 0, 2}));
  EXPECT_EQ(e.class_sizes, (std::vector<int>{2, 2}));
  EXPECT_FALSE(OneHotBalanced({1, 0, 0}, 2).balanced);
  EXPECT_EQ(CodeOf([] { OneHotBalanced({0, 0}, 2); }), ErrorCode::kInvalidLabel);
}

TEST(Csv, RoundTrip) {
  Dataset ds;
  ds.x = Matrix{{0.5, -1.25}, {1e-3, 2.0}, {3.0, 0.0}};
  ds.labels = OneHot({1, 0, 1}, 2);
  const std::string path = TempPath("round_trip.csv");
  SaveCsv(DatasetToTable(ds), path);
  const Dataset back = LoadCsvDataset(path);
  EXPECT_EQ(MaxAbsDiff(back.x, ds.x), 0.0);
  EXPECT_EQ(MaxAbsDiff(back.labels, ds.labels), 0.0);
  EXPECT_EQ(LoadCsvDataset(path, 4).k(), 4);
}

TEST(Csv, ReportsMalformedInput) {
  const std::string path = TempPath("bad.csv");
  auto write = [&](const std::string& body) {
    std::ofstream(path) << body;
  };
  write("f0,label\n1.0,0\n2.0\n");
  EXPECT_EQ(CodeOf([&] { LoadCsv(path); }), ErrorCode::kParseError);
  write("f0,label\n1.0,zero\n");
  EXPECT_EQ(CodeOf([&] { LoadCsv(path); }), ErrorCode::kParseError);
  write("f0,f1\n1.0,0\n");
  EXPECT_EQ(CodeOf([&] { LoadCsvDataset(path); }), ErrorCode::kParseError);
  write("f0,label\n1.0,0.5\n");
  EXPECT_EQ(CodeOf([&] { LoadCsvDataset(path); }), ErrorCode::kParseError);
  write("");
  EXPECT_EQ(CodeOf([&] { LoadCsv(path); }), ErrorCode::kParseError);
  EXPECT_EQ(CodeOf([] { LoadCsv("/nonexistent/x.csv"); }), ErrorCode::kIoError);
}

}  // namespace
}  // namespace dn
