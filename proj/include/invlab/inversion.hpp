// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "invlab/sampler.hpp"

namespace invlab {

enum class Method { ddim, null_var, neg_prompt, direct };
enum class TargetMode { none, source_offset, target_offset };

Method method_from_string(const std::string& s);
std::string to_string(Method m);
TargetMode target_mode_from_string(const std::string& s);
std::string to_string(TargetMode m);

/// Per-step corrections recorded by the direct method. Entry i holds the
/// offset measured when stepping to state i, so both tracks have exactly T
/// entries for indices 0..T-1.
struct OffsetSequence {
  std::vector<Latent> src;
  std::vector<Latent> tgt;

  bool empty() const { return src.empty() && tgt.empty(); }
};

struct CorrectionConfig {
  Method method = Method::ddim;
  int opt_iters = 10;       // null_var only
  double opt_step = 0.5;    // null_var only
  double scale = 1.0;       // direct only, in [0, 1]
  int interval = 1;         // direct only, >= 1
  TargetMode target_mode = TargetMode::none;  // direct only

  void validate() const;
};

/// Objective values at one inversion step: the initial value followed by the
/// value after each accepted optimizer iteration (non-increasing).
struct NullVarTrace {
  int t = 0;
  std::vector<double> objectives;
};

struct NullVarResult {
  std::vector<Condition> variables;  // variables[t-1] is used for the step t -> t-1
  std::vector<NullVarTrace> trace;   // ordered t = T..1
  Latent z0_hat;                     // terminal state of the optimized pass
};

struct ReconstructResult {
  Latent z0_hat;
  OffsetSequence offsets;  // empty unless method == direct
};

/// Negative-prompt substitution: using the source condition in the null slot
/// collapses guidance to effective scale 1 for any w.
Condition negative_prompt_condition(const Condition& c_src);

/// Per-step descent on the null-condition logits minimizing
/// |z''_{t-1} - z*_{t-1}|^2, t = T..1. Gradients come from central finite
/// differences over the K logits; steps that would increase the objective
/// are rejected with up to 8 halvings of the step size. Each step's variable
/// is warm-started from the previous step's optimum.
NullVarResult optimize_null_variable(const Trajectory& traj_star, const Condition& cond, double w,
                                     int opt_iters, double opt_step, const MixtureModel& m,
                                     const NoiseSchedule& s);

/// The offset recursion: starting both slots from z*_T, measure
/// o_{t-1} = z*_{t-1} - forward(z''_t) per condition, then correct only the
/// source slot. With the correction applied, the source slot lands back on
/// z*_{t-1} at every step.
OffsetSequence direct_offsets(const Trajectory& traj_star, const Condition& c_src,
                              const Condition& c_tgt, const Condition& null_cond, double w_fwd,
                              const MixtureModel& m, const NoiseSchedule& s);

/// Reconstruction from an inversion trajectory under the selected method,
/// with the source condition in both slots.
ReconstructResult reconstruct(const Trajectory& traj_star, const Condition& cond,
                              const Condition& null_cond, double w_fwd,
                              const CorrectionConfig& cfg, const MixtureModel& m,
                              const NoiseSchedule& s);

}  // namespace invlab
