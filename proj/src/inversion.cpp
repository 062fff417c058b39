// SPDX-License-Identifier: Apache-2.0
#include "invlab/inversion.hpp"

#include <cmath>

namespace invlab {

Method method_from_string(const std::string& s) {
  if (s == "ddim") return Method::ddim;
  if (s == "null_var") return Method::null_var;
  if (s == "neg_prompt") return Method::neg_prompt;
  if (s == "direct") return Method::direct;
  throw ConfigError("method: unknown value '" + s + "'");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::ddim: return "ddim";
    case Method::null_var: return "null_var";
    case Method::neg_prompt: return "neg_prompt";
    case Method::direct: return "direct";
  }
  return "?";
}

TargetMode target_mode_from_string(const std::string& s) {
  if (s == "none") return TargetMode::none;
  if (s == "source_offset") return TargetMode::source_offset;
  if (s == "target_offset") return TargetMode::target_offset;
  throw ConfigError("target_mode: unknown value '" + s + "'");
}

std::string to_string(TargetMode m) {
  switch (m) {
    case TargetMode::none: return "none";
    case TargetMode::source_offset: return "source_offset";
    case TargetMode::target_offset: return "target_offset";
  }
  return "?";
}

void CorrectionConfig::validate() const {
  if (opt_iters < 0) throw ConfigError("correction.opt_iters: must be >= 0");
  if (!(opt_step > 0.0)) throw ConfigError("correction.opt_step: must be > 0");
  if (scale < 0.0 || scale > 1.0) throw ConfigError("correction.scale: must be in [0, 1]");
  if (interval < 1) throw ConfigError("correction.interval: must be >= 1");
}

namespace {

void check_inversion_input(const Trajectory& traj_star, const NoiseSchedule& s,
                           const char* where) {
  if (traj_star.label != Branch::inversion) {
    throw ConfigError(std::string(where) + ": trajectory must be labeled inversion, got " +
                      to_string(traj_star.label));
  }
  if (traj_star.schedule_fingerprint != s.fingerprint() ||
      traj_star.states.size() != static_cast<std::size_t>(s.step_count()) + 1) {
    throw ConfigError(std::string(where) +
                      ": trajectory was produced under a different schedule");
  }
}

}  // namespace

Condition negative_prompt_condition(const Condition& c_src) { return c_src; }

NullVarResult optimize_null_variable(const Trajectory& traj_star, const Condition& cond, double w,
                                     int opt_iters, double opt_step, const MixtureModel& m,
                                     const NoiseSchedule& s) {
  if (opt_iters < 0) throw ConfigError("optimize_null_variable: opt_iters must be >= 0");
  check_inversion_input(traj_star, s, "optimize_null_variable");

  const int T = s.step_count();
  const int K = m.component_count();
  const double fd_h = 1e-4;

  NullVarResult result;
  result.variables.assign(static_cast<std::size_t>(T), Condition::null_of(K));
  result.trace.reserve(static_cast<std::size_t>(T));

  Condition variable = Condition::null_of(K);
  variable.label = "null_var";
  Latent z = traj_star.state(T);

  for (int t = T; t >= 1; --t) {
    const Latent& target = traj_star.state(t - 1);
    auto objective = [&](const Condition& v) {
      const Latent step = ddim_forward_step(z, t, cfg_eps(m, z, t, cond, v, w, s), s);
      return (step - target).square().sum();
    };

    NullVarTrace tr;
    tr.t = t;
    double f = objective(variable);
    tr.objectives.push_back(f);

    for (int it = 0; it < opt_iters; ++it) {
      Eigen::VectorXd grad(K);
      for (int k = 0; k < K; ++k) {
        Condition plus = variable;
        Condition minus = variable;
        plus.logits[k] += fd_h;
        minus.logits[k] -= fd_h;
        grad[k] = (objective(plus) - objective(minus)) / (2.0 * fd_h);
      }
      double step = opt_step;
      bool accepted = false;
      for (int halve = 0; halve <= 8; ++halve) {
        Condition cand = variable;
        cand.logits -= step * grad;
        const double fc = objective(cand);
        if (fc <= f) {
          variable = cand;
          f = fc;
          tr.objectives.push_back(f);
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;  // local floor for this step; keep the variable as-is
    }

    result.variables[static_cast<std::size_t>(t - 1)] = variable;
    result.trace.push_back(std::move(tr));
    z = ddim_forward_step(z, t, cfg_eps(m, z, t, cond, variable, w, s), s);
  }
  result.z0_hat = std::move(z);
  return result;
}

OffsetSequence direct_offsets(const Trajectory& traj_star, const Condition& c_src,
                              const Condition& c_tgt, const Condition& null_cond, double w_fwd,
                              const MixtureModel& m, const NoiseSchedule& s) {
  check_inversion_input(traj_star, s, "direct_offsets");
  const int T = s.step_count();

  OffsetSequence offsets;
  offsets.src.assign(static_cast<std::size_t>(T), Latent());
  offsets.tgt.assign(static_cast<std::size_t>(T), Latent());

  Latent z_src = traj_star.state(T);
  Latent z_tgt = traj_star.state(T);
  for (int t = T; t >= 1; --t) {
    const Latent f_src = ddim_forward_step(z_src, t, cfg_eps(m, z_src, t, c_src, null_cond, w_fwd, s), s);
    const Latent f_tgt = ddim_forward_step(z_tgt, t, cfg_eps(m, z_tgt, t, c_tgt, null_cond, w_fwd, s), s);
    const Latent& target = traj_star.state(t - 1);
    offsets.src[static_cast<std::size_t>(t - 1)] = target - f_src;
    offsets.tgt[static_cast<std::size_t>(t - 1)] = target - f_tgt;
    z_src = f_src + offsets.src[static_cast<std::size_t>(t - 1)];  // only the source slot is corrected
    z_tgt = f_tgt;
  }
  return offsets;
}

ReconstructResult reconstruct(const Trajectory& traj_star, const Condition& cond,
                              const Condition& null_cond, double w_fwd,
                              const CorrectionConfig& cfg, const MixtureModel& m,
                              const NoiseSchedule& s) {
  cfg.validate();
  check_inversion_input(traj_star, s, "reconstruct");
  const int T = s.step_count();
  const Latent& z_T = traj_star.state(T);

  ReconstructResult out;
  switch (cfg.method) {
    case Method::ddim:
      out.z0_hat = sample(z_T, cond, null_cond, w_fwd, m, s).state(0);
      break;
    case Method::neg_prompt:
      out.z0_hat = sample(z_T, cond, negative_prompt_condition(cond), w_fwd, m, s).state(0);
      break;
    case Method::null_var: {
      out.z0_hat = optimize_null_variable(traj_star, cond, w_fwd, cfg.opt_iters, cfg.opt_step, m, s)
                       .z0_hat;
      break;
    }
    case Method::direct: {
      out.offsets.src.assign(static_cast<std::size_t>(T), Latent());
      out.offsets.tgt.assign(static_cast<std::size_t>(T), Latent());
      Latent z = z_T;
      int steps_taken = 0;
      for (int t = T; t >= 1; --t) {
        const Latent f = ddim_forward_step(z, t, cfg_eps(m, z, t, cond, null_cond, w_fwd, s), s);
        const Latent o = traj_star.state(t - 1) - f;
        out.offsets.src[static_cast<std::size_t>(t - 1)] = o;
        out.offsets.tgt[static_cast<std::size_t>(t - 1)] = o;  // both slots carry the source condition here
        ++steps_taken;
        z = (steps_taken % cfg.interval == 0) ? Latent(f + cfg.scale * o) : f;
      }
      out.z0_hat = std::move(z);
      break;
    }
  }
  return out;
}

}  // namespace invlab
