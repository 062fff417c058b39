// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "invlab/bench.hpp"

using namespace invlab;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

NoiseSchedule test_schedule() {
  return NoiseSchedule::build(12, 1e-3, 0.05, ScheduleKind::scaled_linear);
}

std::vector<RunSpec> two_configs() {
  RunSpec recon;
  recon.task = "reconstruct";
  recon.correction.method = Method::direct;
  RunSpec ed;
  ed.task = "edit";
  ed.correction.method = Method::ddim;
  return {recon, ed};
}

}  // namespace

TEST_CASE("suite generation is deterministic and well formed") {
  const auto a = generate_suite(16, 99, 16, 16, 2, 6.0, 3.0);
  const auto b = generate_suite(16, 99, 16, 16, 2, 6.0, 3.0);
  REQUIRE(a.size() == 16);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].seed == b[i].seed);
    CHECK((a[i].z0 - b[i].z0).abs().maxCoeff() == 0.0);
    CHECK((a[i].mask == b[i].mask).all());
    for (int k = 0; k < 2; ++k) {
      CHECK((a[i].model.mean(k) - b[i].model.mean(k)).abs().maxCoeff() == 0.0);
    }

    // nonempty mask, background at least half of the grid
    const long masked = a[i].mask.count();
    CHECK(masked > 0);
    CHECK(masked <= 128);
    CHECK(a[i].z0.allFinite());

    // the mode distance is pinned to separation * sigma
    const double dist =
        std::sqrt((a[i].model.mean(1) - a[i].model.mean(0)).square().sum());
    CHECK(dist == doctest::Approx(6.0 * 0.3).epsilon(1e-12));
  }
  const auto c = generate_suite(4, 100, 16, 16, 2, 6.0, 3.0);
  CHECK((c[0].z0 - a[0].z0).abs().maxCoeff() > 0.0);  // different master seed, different suite
}

TEST_CASE("degenerate suites are rejected") {
  CHECK_THROWS_AS(generate_suite(4, 1, 16, 16, 2, 0.0, 3.0), ConfigError);   // empty mask
  CHECK_THROWS_AS(generate_suite(4, 1, 8, 8, 2, 6.0, 4.0), ConfigError);    // blob exceeds grid
  CHECK_THROWS_AS(generate_suite(0, 1, 16, 16, 2, 6.0, 3.0), ConfigError);
}

TEST_CASE("full suite layers replicate batches") {
  SuiteParams p;
  p.n = 4;
  p.seeds = 3;
  const auto suite = generate_full_suite(p);
  REQUIRE(suite.size() == 12);
  CHECK(suite[0].id == "s000_r0");
  CHECK(suite[4].id == "s000_r1");
  CHECK((suite[0].z0 - suite[4].z0).abs().maxCoeff() > 0.0);
}

TEST_CASE("run_bench: cartesian contract and worker-count invariance") {
  const auto s = test_schedule();
  const auto suite = generate_suite(3, 7, 16, 16, 2, 6.0, 3.0);
  const auto configs = two_configs();

  const auto rows1 = run_bench(suite, configs, 1, s);
  REQUIRE(rows1.size() == 6);
  const auto rows4 = run_bench(suite, configs, 4, s);
  REQUIRE(rows4.size() == 6);

  for (std::size_t i = 0; i < rows1.size(); ++i) {
    CHECK(rows1[i].scenario_id == rows4[i].scenario_id);
    CHECK(rows1[i].method == rows4[i].method);
    CHECK(rows1[i].task == rows4[i].task);
    CHECK(rows1[i].error == rows4[i].error);
    CHECK(rows1[i].metrics.mse_all == rows4[i].metrics.mse_all);
    CHECK(rows1[i].metrics.mse_bg == rows4[i].metrics.mse_bg);
    CHECK(rows1[i].metrics.psnr_bg == rows4[i].metrics.psnr_bg);
    CHECK(rows1[i].metrics.ssim_bg == rows4[i].metrics.ssim_bg);
    CHECK(rows1[i].metrics.structure_distance == rows4[i].metrics.structure_distance);
    CHECK(rows1[i].metrics.fidelity_whole == rows4[i].metrics.fidelity_whole);
    CHECK(rows1[i].metrics.fidelity_region == rows4[i].metrics.fidelity_region);
  }
  CHECK(rows1[0].ok());
  CHECK(rows1[0].metrics.mse_all <= 1e-10);  // direct reconstruction row
}

TEST_CASE("run_bench isolates failing runs as error rows") {
  const auto s = test_schedule();
  const auto suite = generate_suite(2, 7, 16, 16, 2, 6.0, 3.0);
  auto configs = two_configs();
  // window larger than the grid makes every ssim call fail for this config
  const auto rows = run_bench(suite, configs, 2, s, /*ssim_window=*/17);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK_FALSE(r.ok());
    CHECK(r.error.find("ssim") != std::string::npos);
  }
  // and a valid window keeps everyone healthy
  const auto ok_rows = run_bench(suite, configs, 2, s, 5);
  for (const auto& r : ok_rows) CHECK(r.ok());
}

TEST_CASE("csv report: header, line counts, trailing newline, round trip") {
  const auto s = test_schedule();
  const auto suite = generate_suite(3, 7, 16, 16, 2, 6.0, 3.0);
  const auto rows = run_bench(suite, two_configs(), 2, s);
  const std::string path = temp_path("invlab_report_test.csv");

  write_report(rows, path, ReportFormat::csv);
  {
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(!content.empty());
    CHECK(content.back() == '\n');
    long lines = 0;
    for (char ch : content) {
      if (ch == '\n') ++lines;
    }
    CHECK(lines == 7);  // header + 6 rows
  }

  const auto back = read_report_csv(path);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].scenario_id == rows[i].scenario_id);
    CHECK(back[i].seed == rows[i].seed);
    CHECK(back[i].metrics.mse_all == rows[i].metrics.mse_all);  // shortest round trip is exact
    CHECK(back[i].metrics.psnr_bg == rows[i].metrics.psnr_bg);
    CHECK(back[i].metrics.fidelity_region == rows[i].metrics.fidelity_region);
    CHECK(back[i].wall_ms == rows[i].wall_ms);
    CHECK(back[i].version == kVersion);
  }

  write_report({}, path, ReportFormat::csv);
  {
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    long lines = 0;
    for (char ch : content) {
      if (ch == '\n') ++lines;
    }
    CHECK(lines == 1);  // header only
  }
  std::remove(path.c_str());
}

TEST_CASE("json report is an array of row objects") {
  const auto s = test_schedule();
  const auto suite = generate_suite(1, 7, 16, 16, 2, 6.0, 3.0);
  const auto rows = run_bench(suite, two_configs(), 1, s);
  const std::string path = temp_path("invlab_report_test.json");
  write_report(rows, path, ReportFormat::json);
  std::ifstream in(path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content.front() == '[');
  CHECK(content.find("\"scenario_id\"") != std::string::npos);
  CHECK(content.find("\"mse_bg\"") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("format_double emits shortest round trip representations") {
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.5e-7) == "-2.5e-07");
  const double v = 1.0 / 3.0;
  double parsed = 0.0;
  const std::string s = format_double(v);
  parsed = std::stod(s);
  CHECK(parsed == v);
}
