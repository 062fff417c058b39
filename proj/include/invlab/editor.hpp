// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "invlab/inversion.hpp"

namespace invlab {

struct EditConfig {
  double rho = 0.6;          // blend weight for the injected source noise
  double tau_fraction = 0.2; // injection cutoff as a fraction of T
  CorrectionConfig correction;
  bool single_branch_variables = false;  // apply learned null variables to the source branch only

  void validate() const;
  int tau_steps(int T) const;
};

struct EditResult {
  Latent z0_src;
  Latent z0_tgt;
  OffsetSequence offsets;
  EditConfig config;
  double w_inv = 1.0;
  double w_fwd = 7.5;
};

/// Injected noise for the target branch: rho * eps_src + (1 - rho) * eps_tgt
/// when t > tau, otherwise eps_tgt unchanged.
Latent blend_eps(const Latent& eps_src, const Latent& eps_tgt, int t, double rho, int tau);

/// The dual-branch editing loop. The source branch reconstructs z0 under the
/// configured correction method and never sees the target condition; the
/// target branch steps with blended noise and, depending on target_mode,
/// receives no offset (default), the source offset, or the target offset on
/// correction steps.
EditResult edit(const Latent& z0, const Condition& c_src, const Condition& c_tgt,
                const EditConfig& ec, double w_inv, double w_fwd, const MixtureModel& m,
                const NoiseSchedule& s);

}  // namespace invlab
