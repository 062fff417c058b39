// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "invlab/bench.hpp"

namespace invlab {

/// The run configuration: schedule, suite, method list, edit settings,
/// guidance grids and output target. Validated field by field on load;
/// unknown keys are rejected.
struct RunConfig {
  // schedule
  int schedule_T = 50;
  double beta_start = 2e-3;
  double beta_end = 0.4;
  ScheduleKind schedule_kind = ScheduleKind::scaled_linear;

  SuiteParams suite;

  struct MethodEntry {
    std::string task = "edit";  // "reconstruct" or "edit"
    CorrectionConfig correction;
  };
  std::vector<MethodEntry> methods;

  // edit settings
  double rho = 0.6;
  double tau_fraction = 0.2;
  bool single_branch_variables = false;
  std::vector<TargetMode> target_mode_sweep;  // empty: use each method's own target_mode

  // guidance grids
  std::vector<double> w_inv{1.0};
  std::vector<double> w_fwd{7.5};

  // output
  std::string out_path = "report.csv";
  ReportFormat out_format = ReportFormat::csv;

  int ssim_window = 5;

  /// Parses and validates; honors the INVLAB_SEED environment override.
  static RunConfig from_file(const std::string& path);
  static RunConfig from_json_text(const std::string& text);

  /// Applies a single dotted-path override such as ("edit.rho", "0.8").
  void apply_override(const std::string& key, const std::string& value);

  void validate() const;
  NoiseSchedule make_schedule() const;

  /// The cartesian expansion methods x w_inv x w_fwd (x target_mode sweep
  /// for edit entries when configured).
  std::vector<RunSpec> expand_configs() const;
};

}  // namespace invlab
