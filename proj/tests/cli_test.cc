/* Copyright 2026 The Aberro Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "cli.h"

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "aberro/json_io.h"

namespace aberro {
namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "aberro");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string TempDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("aberro_cli_" + name);
  std::filesystem::remove_all(dir);
  return dir.string();
}

TEST(CliTest, UsageErrors) {
  EXPECT_EQ(Cli({}).code, 2);
  const CliRun r = Cli({"frobnicate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(Cli({"xi", "--bogus"}).code, 2);
  EXPECT_EQ(Cli({"--help"}).code, 0);
}

TEST(CliTest, RuntimeErrorExitsOne) {
  EXPECT_EQ(Cli({"ece", "--data", "/nonexistent/aberro"}).code, 1);
}

TEST(CliTest, SynthWritesTriplesAndManifest) {
  const std::string dir = TempDir("synth");
  const CliRun r = Cli({"--seed", "42", "synth", "--n", "8", "--out", dir, "--no-timestamp"});
  ASSERT_EQ(r.code, 0) << r.err;
  int tnsr = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    tnsr += e.path().extension() == ".tnsr";
  }
  EXPECT_EQ(tnsr, 24);
  EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(dir) / "manifest.json"));
  const Json report = Json::parse(r.out);
  EXPECT_EQ(report["instances"], 8);
  EXPECT_EQ(report["seed"], 42);
  EXPECT_FALSE(report.contains("generated_at"));
  std::filesystem::remove_all(dir);
}

TEST(CliTest, EceOnCalibratedInstances) {
  const std::string dir = TempDir("ece");
  ASSERT_EQ(Cli({"synth", "--n", "8", "--out", dir, "--law", "constant"}).code, 0);
  const CliRun r = Cli({"ece", "--data", dir, "--no-timestamp"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(Json::parse(r.out)["mece"].get<double>(), 0.02);
  std::filesystem::remove_all(dir);
}

TEST(CliTest, ReportsAreByteIdentical) {
  const std::vector<std::string> args = {"--seed", "3", "--no-timestamp", "optics-metrics",
                                         "--zernike", "0.1,0.05,0", "--grid", "64"};
  const CliRun a = Cli(args), b = Cli(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const CliRun stamped = Cli({"optics-metrics", "--grid", "64"});
  EXPECT_TRUE(Json::parse(stamped.out).contains("generated_at"));
}

TEST(CliTest, CalibrateAndReport) {
  const std::string train = TempDir("train"), model = TempDir("model") + ".json";
  ASSERT_EQ(Cli({"synth", "--n", "12", "--out", train, "--law", "constant", "--constant-t", "2"})
                .code,
            0);
  const CliRun cal = Cli({"calibrate", "ts", "--train", train, "--out", model});
  ASSERT_EQ(cal.code, 0) << cal.err;
  EXPECT_NEAR(Json::parse(cal.out)["temperature"].get<double>(), 2.0, 0.08);
  const CliRun rep = Cli({"report", "--model", model, "--data", train});
  ASSERT_EQ(rep.code, 0) << rep.err;
  const Json j = Json::parse(rep.out);
  EXPECT_LT(j["mece"].get<double>(), j["mece_uncalibrated"].get<double>());
  EXPECT_TRUE(j.contains("temperature_deviation"));
  std::filesystem::remove_all(train);
  std::filesystem::remove(model);
}

TEST(CliTest, XiSeriesAndFit) {
  const std::string path = TempDir("series") + ".json";
  Json series{{"schema", 1}, {"x", Json::array()}, {"y", Json::array()},
              {"sigma_y", Json::array()}};
  for (int i = 0; i < 30; ++i) {
    const double x = i / 29.0;
    series["x"].push_back(x);
    series["y"].push_back(0.4 * x + 0.1 + 0.002 * ((i * 7) % 5 - 2));
    series["sigma_y"].push_back(0.002);
  }
  WriteJsonFile(path, series);
  const CliRun xi = Cli({"xi", "--series", path});
  ASSERT_EQ(xi.code, 0) << xi.err;
  EXPECT_GT(Json::parse(xi.out)["xi"].get<double>(), 0.8);
  const CliRun fit = Cli({"fit-sensitivity", "--series", path, "--mc", "200", "--k", "2"});
  ASSERT_EQ(fit.code, 0) << fit.err;
  const Json j = Json::parse(fit.out);
  EXPECT_EQ(j["covariance_source"], "monte_carlo");
  EXPECT_EQ(j["band"].size(), 101u);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace aberro
