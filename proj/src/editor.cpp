// SPDX-License-Identifier: Apache-2.0
#include "invlab/editor.hpp"

#include <cmath>

namespace invlab {

void EditConfig::validate() const {
  if (rho < 0.0 || rho > 1.0) throw ConfigError("edit.rho: must be in [0, 1]");
  if (tau_fraction < 0.0 || tau_fraction > 1.0) {
    throw ConfigError("edit.tau_fraction: must be in [0, 1]");
  }
  correction.validate();
  if (single_branch_variables && correction.method != Method::null_var) {
    throw ConfigError("edit.single_branch_variables: requires correction.method == null_var");
  }
}

int EditConfig::tau_steps(int T) const {
  return static_cast<int>(std::llround(tau_fraction * static_cast<double>(T)));
}

Latent blend_eps(const Latent& eps_src, const Latent& eps_tgt, int t, double rho, int tau) {
  require_same_shape(eps_src, eps_tgt, "blend_eps");
  if (t <= tau || rho == 0.0) return eps_tgt;
  if (rho == 1.0) return eps_src;
  return rho * eps_src + (1.0 - rho) * eps_tgt;
}

EditResult edit(const Latent& z0, const Condition& c_src, const Condition& c_tgt,
                const EditConfig& ec, double w_inv, double w_fwd, const MixtureModel& m,
                const NoiseSchedule& s) {
  ec.validate();
  if (c_src.logits.size() != m.component_count() || c_tgt.logits.size() != m.component_count()) {
    throw ConfigError("edit: conditions must have one logit per mixture component");
  }

  const int T = s.step_count();
  const int tau = ec.tau_steps(T);
  const Condition null_cond = Condition::null_of(m.component_count());
  const CorrectionConfig& cc = ec.correction;

  const Trajectory traj_star = invert(z0, c_src, null_cond, w_inv, m, s);

  // Null slots per branch. The learned variables replace the null condition
  // in both branches unless the single-branch variant is requested; the
  // negative-prompt method substitutes each branch's own condition.
  NullVarResult nv;
  if (cc.method == Method::null_var) {
    nv = optimize_null_variable(traj_star, c_src, w_fwd, cc.opt_iters, cc.opt_step, m, s);
  }
  auto src_null = [&](int t) -> const Condition& {
    if (cc.method == Method::null_var) return nv.variables[static_cast<std::size_t>(t - 1)];
    if (cc.method == Method::neg_prompt) return c_src;
    return null_cond;
  };
  auto tgt_null = [&](int t) -> const Condition& {
    if (cc.method == Method::null_var && !ec.single_branch_variables) {
      return nv.variables[static_cast<std::size_t>(t - 1)];
    }
    if (cc.method == Method::neg_prompt) return c_tgt;
    return null_cond;
  };

  const bool track_offsets = cc.method == Method::direct;

  EditResult out;
  out.config = ec;
  out.w_inv = w_inv;
  out.w_fwd = w_fwd;
  if (track_offsets) {
    out.offsets.src.assign(static_cast<std::size_t>(T), Latent());
    out.offsets.tgt.assign(static_cast<std::size_t>(T), Latent());
  }

  Latent z_src = traj_star.state(T);
  Latent z_tgt_track = traj_star.state(T);  // plain target forward, only used to measure o_tgt
  Latent z_edit = traj_star.state(T);

  int steps_taken = 0;
  for (int t = T; t >= 1; --t) {
    const Latent eps_src = cfg_eps(m, z_src, t, c_src, src_null(t), w_fwd, s);
    const Latent f_src = ddim_forward_step(z_src, t, eps_src, s);

    ++steps_taken;
    const bool apply = track_offsets && (steps_taken % cc.interval == 0);

    Latent o_src, o_tgt;
    if (track_offsets) {
      o_src = traj_star.state(t - 1) - f_src;
      const Latent f_tgt =
          ddim_forward_step(z_tgt_track, t, cfg_eps(m, z_tgt_track, t, c_tgt, tgt_null(t), w_fwd, s), s);
      o_tgt = traj_star.state(t - 1) - f_tgt;
      out.offsets.src[static_cast<std::size_t>(t - 1)] = o_src;
      out.offsets.tgt[static_cast<std::size_t>(t - 1)] = o_tgt;
      z_tgt_track = f_tgt;
    }

    // Editing branch: blended noise, then the configured target addition.
    const Latent eps_edit_own = cfg_eps(m, z_edit, t, c_tgt, tgt_null(t), w_fwd, s);
    const Latent eps_edit = blend_eps(eps_src, eps_edit_own, t, ec.rho, tau);
    z_edit = ddim_forward_step(z_edit, t, eps_edit, s);
    if (apply && cc.target_mode == TargetMode::source_offset) z_edit = z_edit + cc.scale * o_src;
    if (apply && cc.target_mode == TargetMode::target_offset) z_edit = z_edit + cc.scale * o_tgt;

    z_src = apply ? Latent(f_src + cc.scale * o_src) : f_src;
    require_finite(z_src, "edit");
    require_finite(z_edit, "edit");
  }

  out.z0_src = std::move(z_src);
  out.z0_tgt = std::move(z_edit);
  return out;
}

}  // namespace invlab
