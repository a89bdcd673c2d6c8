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

#include "duality_nets/experiments.h"

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>

#include <gtest/gtest.h>

#include "duality_nets/error.h"
#include "json.hpp"

namespace dn {
namespace {

// Returns the message of the dn::Error thrown by `f`, or "" if none was.
std::string ErrorText(const std::function<void()>& f, ErrorCode want) {
  try {
    f();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), want) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "no error thrown";
  return "";
}

TEST(Config, DefaultsExistForEveryExperiment) {
  for (const std::string& name : ExperimentNames()) {
    EXPECT_EQ(DefaultConfig(name).experiment, name);
  }
  ErrorText([] { DefaultConfig("fig9"); }, ErrorCode::kConfigError);
}

TEST(Config, OverridesAndSeedPropagation) {
  const ExperimentConfig c = ParseExperimentConfig(
      R"({"experiment": "construct", "seed": 7, "betas": [0.1, 0.2],
          "arch": {"depth": 3, "widths": [4, 4], "activation": "relu"},
          "dataset": {"n": 8, "whiten": true}})");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.data.seed, 7u);
  EXPECT_EQ(c.train.seed, 7u);
  EXPECT_EQ(c.betas, (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(c.arch.depth, 3);
  EXPECT_EQ(c.arch.activation, Activation::kRelu);
  EXPECT_EQ(c.data.n, 8);
  EXPECT_TRUE(c.data.whiten);
}

TEST(Config, ErrorsNameTheOffendingField) {
  auto bad = [](const std::string& json) {
    return ErrorText([&] { ParseExperimentConfig(json, "construct"); },
                     ErrorCode::kConfigError);
  };
  EXPECT_NE(bad(R"({"dataset": {"n": 0}})").find("/dataset/n"), std::string::npos);
  EXPECT_NE(bad(R"({"arch": {"widths": [2, "x"]}})").find("/arch/widths"),
            std::string::npos);
  EXPECT_NE(bad(R"({"bogus": 1})").find("/bogus: unknown field"), std::string::npos);
  EXPECT_NE(bad(R"({"beta": 1, "betas": [2]})").find("/betas"), std::string::npos);
  EXPECT_NE(bad(R"({"beta": -1})").find("/beta"), std::string::npos);
  EXPECT_NE(bad(R"({"experiment": "train"})").find("/experiment"), std::string::npos);
  EXPECT_NE(bad("{not json").find("invalid JSON"), std::string::npos);
  EXPECT_NE(bad("[1, 2]").find("expected an object"), std::string::npos);
}

TEST(Check, Operators) {
  EXPECT_TRUE(Check("a", 1.0, "<=", 1.0).pass);
  EXPECT_FALSE(Check("a", 1.1, "<=", 1.0).pass);
  EXPECT_TRUE(Check("a", 1.1, "<=", 1.0, 0.2).pass);
  EXPECT_TRUE(Check("a", 2.0, ">=", 1.0).pass);
  EXPECT_TRUE(Check("a", 3.0, "==", 3.0).pass);
  EXPECT_FALSE(Check("a", std::nan(""), ">=", 0.0).pass);
  EXPECT_THROW(Check("a", 1.0, "<", 2.0), Error);
}

TEST(ParallelFor, VisitsEveryIndexAndRethrowsTheFirstFailure) {
  std::vector<int> hits(50, 0);
  ParallelFor(50, 4, [&](int i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  try {
    ParallelFor(10, 3, [](int i) {
      if (i == 2 || i == 7) Fail(ErrorCode::kDiverged, "task " + std::to_string(i));
    });
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("task 2"), std::string::npos);
  }
}

TEST(EffectiveThreads, EnvironmentOverrides) {
  ::unsetenv("DUALITY_NETS_THREADS");
  EXPECT_EQ(EffectiveThreads(3), 3);
  EXPECT_EQ(EffectiveThreads(0), 1);
  ::setenv("DUALITY_NETS_THREADS", "2", 1);
  EXPECT_EQ(EffectiveThreads(8), 2);
  ::setenv("DUALITY_NETS_THREADS", "two", 1);
  ErrorText([] { EffectiveThreads(1); }, ErrorCode::kConfigError);
  ::unsetenv("DUALITY_NETS_THREADS");
}

TEST(BuildDataset, SplineAbscissaeAreSortedInsideTheInterval) {
  DatasetSpec s;
  s.source = "spline";
  s.n = 12;
  s.d = 1;
  const Dataset ds = BuildDataset(s);
  for (int i = 0; i < ds.n(); ++i) {
    EXPECT_GT(ds.x(i, 0), 1.0);
    EXPECT_LT(ds.x(i, 0), 3.0);
    if (i > 0) EXPECT_GT(ds.x(i, 0), ds.x(i - 1, 0));
  }
  ASSERT_TRUE(ds.rank_one.has_value());
}

TEST(Report, EmptyResultsAreRejected) {
  ExperimentResult r;
  r.experiment = "construct";
  ErrorText([&] { EmitReport(r); }, ErrorCode::kInvalidInput);
}

TEST(RunExperiment, ConstructWritesAllArtifacts) {
  ExperimentConfig c = DefaultConfig("construct");
  const ExperimentResult r = RunExperiment(c);
  EXPECT_TRUE(r.pass());
  const auto j = nlohmann::json::parse(EmitReport(r));
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["experiment"], "construct");
  EXPECT_EQ(j["config_echo"]["experiment"], "construct");
  EXPECT_TRUE(j["pass"].get<bool>());
  ASSERT_FALSE(j["assertions"].empty());
  for (const auto& a : j["assertions"]) {
    for (const char* key : {"name", "op", "expected", "actual", "tol", "pass"}) {
      EXPECT_TRUE(a.contains(key)) << key;
    }
  }
  EXPECT_EQ(RenderCsv(r).rfind("experiment,key,metric,value\n", 0), 0u);
  EXPECT_NE(RenderSvg(r.plot).find("<svg"), std::string::npos);
  const auto dir = std::filesystem::temp_directory_path() / "duality_nets_experiments_test";
  std::filesystem::remove_all(dir);
  WriteArtifacts(r, dir.string());
  for (const char* f : {"report.json", "results.csv", "plot.svg"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
}

TEST(RunExperiment, UnknownNameIsAConfigError) {
  ExperimentConfig c;
  c.experiment = "nope";
  ErrorText([&] { RunExperiment(c); }, ErrorCode::kConfigError);
}

}  // namespace
}  // namespace dn
