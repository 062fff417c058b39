// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "invlab/editor.hpp"
#include "invlab/metrics.hpp"

namespace invlab {

inline constexpr const char* kVersion = "invlab 0.1.0";

/// One synthetic editing task. The target means differ from the source means
/// only inside a localized blob, so the mask (cells where the means differ
/// appreciably) is nonempty and the background is nonempty.
struct Scenario {
  std::string id;
  std::uint64_t seed = 0;
  MixtureModel model;
  Condition c_src;
  Condition c_tgt;
  Latent z0;
  Mask mask;
  std::string edit_type;
};

struct SuiteParams {
  int n = 16;
  int seeds = 4;  // replicate batches, each under a derived master seed
  std::uint64_t master_seed = 20240901;
  int rows = 16;
  int cols = 16;
  int K = 2;
  double separation = 6.0;  // mode distance in units of the component sigma
  double blob_radius = 3.0;

  void validate() const;
};

/// Generates n scenarios deterministically from the master seed. Edit types
/// cycle through translate_blob, recolor_blob and background_shift.
std::vector<Scenario> generate_suite(int n, std::uint64_t master_seed, int rows, int cols, int K,
                                     double separation, double blob_radius, int replicate = 0);

/// n x seeds scenarios, one generate_suite batch per derived master seed.
std::vector<Scenario> generate_full_suite(const SuiteParams& p);

/// One expanded benchmark configuration (a method plus edit settings and a
/// guidance pair).
struct RunSpec {
  std::string task = "edit";  // "reconstruct" or "edit"
  CorrectionConfig correction;
  double rho = 0.6;
  double tau_fraction = 0.2;
  bool single_branch_variables = false;
  double w_inv = 1.0;
  double w_fwd = 7.5;
};

struct ReportRow {
  std::string scenario_id;
  std::uint64_t seed = 0;
  std::string method;
  double w_inv = 0.0;
  double w_fwd = 0.0;
  int opt_iters = 0;
  double scale = 1.0;
  int interval = 1;
  std::string target_mode;
  double rho = 0.0;
  double tau = 0.0;
  MetricsRow metrics;
  double wall_ms = 0.0;
  std::string task;
  std::string version = kVersion;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

/// CSV column headers, in output order.
const std::vector<std::string>& report_columns();

/// Runs every scenario x config pair. Rows come back in (scenario, config)
/// order regardless of the worker count; a failing run yields a row with the
/// error column set instead of aborting the sweep.
std::vector<ReportRow> run_bench(const std::vector<Scenario>& suite,
                                 const std::vector<RunSpec>& configs, int workers,
                                 const NoiseSchedule& s, int ssim_window = 5);

/// Executes one scenario/config pair and fills the metric fields.
ReportRow run_one(const Scenario& sc, const RunSpec& rs, const NoiseSchedule& s,
                  int ssim_window = 5);

enum class ReportFormat { csv, json };

ReportFormat report_format_from_string(const std::string& s);

void write_report(const std::vector<ReportRow>& rows, const std::string& path, ReportFormat fmt);
std::vector<ReportRow> read_report_csv(const std::string& path);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

}  // namespace invlab
