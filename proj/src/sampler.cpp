// SPDX-License-Identifier: Apache-2.0
#include "invlab/sampler.hpp"

#include <cmath>

namespace invlab {

std::string to_string(Branch b) {
  switch (b) {
    case Branch::inversion: return "inversion";
    case Branch::unguided_recon: return "unguided_recon";
    case Branch::guided_recon: return "guided_recon";
    case Branch::corrected: return "corrected";
    case Branch::edited: return "edited";
  }
  return "?";
}

Latent ddim_forward_step(const Latent& z_t, int t, const Latent& eps_hat,
                         const NoiseSchedule& s) {
  if (t < 1 || t > s.step_count()) {
    throw StepError("ddim_forward_step: step " + std::to_string(t) + " outside 1.." +
                    std::to_string(s.step_count()));
  }
  require_same_shape(z_t, eps_hat, "ddim_forward_step");
  const double ab_t = s.alpha_bar(t);
  const double ab_p = s.alpha_bar(t - 1);
  const double drift = std::sqrt(ab_p / ab_t);
  const double diff = std::sqrt(ab_p) * (std::sqrt(1.0 / ab_p - 1.0) - std::sqrt(1.0 / ab_t - 1.0));
  return drift * z_t + diff * eps_hat;
}

Latent ddim_inverse_step(const Latent& z_prev, int t_prev, const Latent& eps_hat,
                         const NoiseSchedule& s) {
  if (t_prev < 0 || t_prev > s.step_count() - 1) {
    throw StepError("ddim_inverse_step: step " + std::to_string(t_prev) + " outside 0.." +
                    std::to_string(s.step_count() - 1));
  }
  require_same_shape(z_prev, eps_hat, "ddim_inverse_step");
  const int t = t_prev + 1;
  const double ab_t = s.alpha_bar(t);
  const double ab_p = s.alpha_bar(t_prev);
  const double drift = std::sqrt(ab_t / ab_p);
  const double diff = std::sqrt(ab_t) * (std::sqrt(1.0 / ab_t - 1.0) - std::sqrt(1.0 / ab_p - 1.0));
  return drift * z_prev + diff * eps_hat;
}

Trajectory invert(const Latent& z0, const Condition& cond, const Condition& null_cond,
                  double w_inv, const MixtureModel& m, const NoiseSchedule& s) {
  require_finite(z0, "invert");
  const int T = s.step_count();
  Trajectory traj;
  traj.label = Branch::inversion;
  traj.cond = cond;
  traj.w = w_inv;
  traj.schedule_fingerprint = s.fingerprint();
  traj.states.reserve(static_cast<std::size_t>(T) + 1);
  traj.states.push_back(z0);
  for (int t = 1; t <= T; ++t) {
    const Latent& prev = traj.states.back();
    const Latent eps = cfg_eps(m, prev, t, cond, null_cond, w_inv, s);
    traj.states.push_back(ddim_inverse_step(prev, t - 1, eps, s));
    require_finite(traj.states.back(), "invert");
  }
  return traj;
}

Trajectory sample(const Latent& z_T, const Condition& cond, const Condition& null_cond,
                  double w_fwd, const MixtureModel& m, const NoiseSchedule& s) {
  require_finite(z_T, "sample");
  const int T = s.step_count();
  Trajectory traj;
  traj.label = w_fwd == 1.0 ? Branch::unguided_recon : Branch::guided_recon;
  traj.cond = cond;
  traj.w = w_fwd;
  traj.schedule_fingerprint = s.fingerprint();
  traj.states.assign(static_cast<std::size_t>(T) + 1, Latent());
  traj.states[static_cast<std::size_t>(T)] = z_T;
  for (int t = T; t >= 1; --t) {
    const Latent& cur = traj.states[static_cast<std::size_t>(t)];
    const Latent eps = cfg_eps(m, cur, t, cond, null_cond, w_fwd, s);
    traj.states[static_cast<std::size_t>(t - 1)] = ddim_forward_step(cur, t, eps, s);
    require_finite(traj.states[static_cast<std::size_t>(t - 1)], "sample");
  }
  return traj;
}

}  // namespace invlab
