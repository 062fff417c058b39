// SPDX-License-Identifier: Apache-2.0
#include "invlab/schedule.hpp"

#include <cmath>
#include <cstring>

namespace invlab {

ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "linear") return ScheduleKind::linear;
  if (s == "scaled_linear") return ScheduleKind::scaled_linear;
  throw ConfigError("schedule.kind: unknown value '" + s + "' (expected linear or scaled_linear)");
}

std::string to_string(ScheduleKind k) {
  return k == ScheduleKind::linear ? "linear" : "scaled_linear";
}

namespace {

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xCBF29CE484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace

NoiseSchedule NoiseSchedule::build(int T, double beta_start, double beta_end, ScheduleKind kind) {
  if (T < 1) throw ConfigError("schedule.T: must be >= 1, got " + std::to_string(T));
  if (!(beta_start > 0.0)) {
    throw ConfigError("schedule.beta_start: must be > 0, got " + std::to_string(beta_start));
  }
  if (!(beta_end < 1.0)) {
    throw ConfigError("schedule.beta_end: must be < 1, got " + std::to_string(beta_end));
  }
  if (beta_start > beta_end) {
    throw ConfigError("schedule.beta_start: must be <= beta_end (" + std::to_string(beta_start) +
                      " > " + std::to_string(beta_end) + ")");
  }

  Eigen::VectorXd betas(T);
  if (kind == ScheduleKind::linear) {
    betas = Eigen::VectorXd::LinSpaced(T, beta_start, beta_end);
  } else {
    betas = Eigen::VectorXd::LinSpaced(T, std::sqrt(beta_start), std::sqrt(beta_end))
                .array()
                .square();
  }

  Eigen::VectorXd alpha_bars(T);
  double prod = 1.0;
  for (int i = 0; i < T; ++i) {
    prod *= 1.0 - betas[i];
    alpha_bars[i] = prod;
  }

  std::uint64_t fp = fnv1a64(&T, sizeof(T));
  fp = fnv1a64(betas.data(), sizeof(double) * static_cast<std::size_t>(T), fp);
  return NoiseSchedule(std::move(betas), std::move(alpha_bars), fp);
}

NoiseSchedule NoiseSchedule::default_for(int T) {
  if (T < 1) throw ConfigError("schedule.T: must be >= 1, got " + std::to_string(T));
  const double scale = 1000.0 / static_cast<double>(T);
  return build(T, 1e-4 * scale, 0.02 * scale, ScheduleKind::scaled_linear);
}

double NoiseSchedule::beta(int t) const {
  if (t < 1 || t > step_count()) {
    throw StepError("beta: step " + std::to_string(t) + " outside 1.." +
                    std::to_string(step_count()));
  }
  return betas_[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > step_count()) {
    throw StepError("alpha_bar: step " + std::to_string(t) + " outside 0.." +
                    std::to_string(step_count()));
  }
  return t == 0 ? 1.0 : alpha_bars_[t - 1];
}

Latent q_sample(const Latent& z0, int t, const Latent& eps, const NoiseSchedule& s) {
  require_same_shape(z0, eps, "q_sample");
  if (t < 1 || t > s.step_count()) {
    throw StepError("q_sample: step " + std::to_string(t) + " outside 1.." +
                    std::to_string(s.step_count()));
  }
  const double ab = s.alpha_bar(t);
  return std::sqrt(ab) * z0 + std::sqrt(1.0 - ab) * eps;
}

}  // namespace invlab
