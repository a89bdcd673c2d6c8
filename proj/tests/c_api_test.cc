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

#include "duality_nets/c_api.h"

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace {

// Four points in ℝ² with two-dimensional labels.
dn_dataset* SmallDataset() {
  const double x[] = {1, 0, 0, 1, 1, 1, 2, -1};
  const double y[] = {1, 0, 0, 1, 1, 1, 0, 2};
  dn_dataset* ds = nullptr;
  EXPECT_EQ(dn_dataset_create(4, 2, 2, x, y, 0, &ds), DN_OK);
  return ds;
}

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STRNE(dn_version(), "");
  EXPECT_STREQ(dn_status_name(DN_OK), "Ok");
  EXPECT_STREQ(dn_status_name(99), "UnknownStatus");
  EXPECT_STRNE(dn_status_name(DN_CONFIG_ERROR), dn_status_name(DN_IO_ERROR));
  EXPECT_GE(dn_experiment_count(), 10u);
  EXPECT_EQ(dn_experiment_name(dn_experiment_count()), nullptr);
}

TEST(CApi, NullArgumentsAreRejectedWithAMessage) {
  dn_dataset* ds = nullptr;
  EXPECT_EQ(dn_dataset_create(2, 2, 1, nullptr, nullptr, 0, &ds), DN_INVALID_INPUT);
  EXPECT_EQ(ds, nullptr);
  EXPECT_NE(std::string(dn_last_error()).find("x"), std::string::npos);
  EXPECT_EQ(dn_construct(nullptr, nullptr, 0.1, 0, nullptr), DN_INVALID_INPUT);
  EXPECT_EQ(dn_network_objective(nullptr, nullptr, 0.1, nullptr), DN_INVALID_INPUT);
  EXPECT_EQ(dn_dataset_load_csv("/nonexistent.csv", 0, &ds), DN_IO_ERROR);
}

TEST(CApi, ConstructEvaluateAndPredict) {
  dn_dataset* ds = SmallDataset();
  ASSERT_NE(ds, nullptr);
  int n = 0, d = 0, k = 0;
  ASSERT_EQ(dn_dataset_shape(ds, &n, &d, &k), DN_OK);
  EXPECT_EQ(n * 100 + d * 10 + k, 422);

  const int widths[] = {2};
  const dn_arch arch = {2, 2, widths, DN_LINEAR, 0, 0, 0};
  dn_network* net = nullptr;
  ASSERT_EQ(dn_construct(ds, &arch, 0.3, 0, &net), DN_OK) << dn_last_error();
  double objective = 0.0, gap = 1.0;
  ASSERT_EQ(dn_network_objective(net, ds, 0.3, &objective), DN_OK);
  EXPECT_GT(objective, 0.0);
  ASSERT_EQ(dn_network_relative_gap(net, ds, 0.3, &gap), DN_OK);
  EXPECT_LE(std::abs(gap), 1e-8);

  int inputs = 0, outputs = 0, branches = 0;
  ASSERT_EQ(dn_network_shape(net, &inputs, &outputs, &branches), DN_OK);
  EXPECT_EQ(inputs, 2);
  EXPECT_EQ(outputs, 2);
  const double x[] = {1, 0, 0, 0};
  std::vector<double> out(4, -1.0);
  ASSERT_EQ(dn_network_predict(net, x, 2, out.data(), out.size()), DN_OK);
  EXPECT_EQ(out[2], 0.0);  // a linear net maps 0 to 0
  EXPECT_EQ(out[3], 0.0);
  EXPECT_EQ(dn_network_predict(net, x, 2, out.data(), 3), DN_SHAPE_ERROR);
  dn_network_free(net);

  const dn_arch deep_relu = {3, 1, (const int[]){2, 2}, DN_RELU, 0, 0, 0};
  EXPECT_EQ(dn_construct(ds, &deep_relu, 0.3, 0, &net), DN_NO_DUAL_CONSTRUCTION);
  EXPECT_EQ(net, nullptr);
  dn_dataset_free(ds);
}

TEST(CApi, RunExperimentReturnsAReport) {
  const auto dir = std::filesystem::temp_directory_path() / "duality_nets_c_api_test";
  std::filesystem::remove_all(dir);
  const uint64_t seed = 3;
  int pass = 0;
  char* report = nullptr;
  ASSERT_EQ(dn_run_experiment("construct", R"({"beta": 0.2})", dir.c_str(), &seed, 1,
                              &pass, &report),
            DN_OK)
      << dn_last_error();
  EXPECT_EQ(pass, 1);
  ASSERT_NE(report, nullptr);
  EXPECT_NE(std::string(report).find("\"seed\": 3"), std::string::npos);
  dn_string_free(report);
  EXPECT_TRUE(std::filesystem::exists(dir / "report.json"));

  report = nullptr;
  EXPECT_EQ(dn_run_experiment("fig9", nullptr, nullptr, nullptr, 1, &pass, &report),
            DN_CONFIG_ERROR);
  EXPECT_EQ(report, nullptr);
  EXPECT_EQ(dn_run_experiment("construct", "{", nullptr, nullptr, 1, &pass, &report),
            DN_CONFIG_ERROR);
}

}  // namespace
