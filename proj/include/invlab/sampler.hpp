// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "invlab/model.hpp"
#include "invlab/schedule.hpp"
#include "invlab/types.hpp"

namespace invlab {

enum class Branch { inversion, unguided_recon, guided_recon, corrected, edited };

std::string to_string(Branch b);

/// A labeled sequence of latents indexed 0..T.
struct Trajectory {
  std::vector<Latent> states;
  Branch label = Branch::inversion;
  Condition cond;
  double w = 1.0;
  std::uint64_t schedule_fingerprint = 0;

  const Latent& state(int t) const { return states[static_cast<std::size_t>(t)]; }
};

/// One denoising step z_t -> z_{t-1}:
///   sqrt(abar_{t-1}/abar_t) z_t
///   + sqrt(abar_{t-1}) (sqrt(1/abar_{t-1} - 1) - sqrt(1/abar_t - 1)) eps_hat.
Latent ddim_forward_step(const Latent& z_t, int t, const Latent& eps_hat, const NoiseSchedule& s);

/// One inversion step z_{t_prev} -> z_{t_prev+1}; the exact affine inverse of
/// ddim_forward_step when eps_hat is held fixed.
Latent ddim_inverse_step(const Latent& z_prev, int t_prev, const Latent& eps_hat,
                         const NoiseSchedule& s);

/// Runs the inversion from z0 up to z_T. The noise estimate for the step
/// t-1 -> t is evaluated at state z_{t-1} with step index t; this evaluation
/// point mismatch against the forward pass is what makes the inversion
/// approximate.
Trajectory invert(const Latent& z0, const Condition& cond, const Condition& null_cond,
                  double w_inv, const MixtureModel& m, const NoiseSchedule& s);

/// Runs the deterministic sampler from z_T down to z0.
Trajectory sample(const Latent& z_T, const Condition& cond, const Condition& null_cond,
                  double w_fwd, const MixtureModel& m, const NoiseSchedule& s);

}  // namespace invlab
