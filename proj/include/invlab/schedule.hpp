// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "invlab/types.hpp"

namespace invlab {

enum class ScheduleKind { linear, scaled_linear };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind k);

/// Discrete diffusion time. Steps are 1-indexed; alpha_bar(0) == 1 so the
/// t-1 = 0 endpoint of the sampler equations is well defined. Immutable
/// after construction and safe to share across threads.
class NoiseSchedule {
 public:
  static NoiseSchedule build(int T, double beta_start, double beta_end, ScheduleKind kind);

  /// The library default: scaled_linear with the 1000-step range
  /// [1e-4, 0.02] rescaled by 1000/T so total noise is preserved at T steps.
  static NoiseSchedule default_for(int T);

  int step_count() const { return static_cast<int>(betas_.size()); }

  double beta(int t) const;       // t in 1..T
  double alpha_bar(int t) const;  // t in 0..T, alpha_bar(0) = 1

  const Eigen::VectorXd& betas() const { return betas_; }
  const Eigen::VectorXd& alpha_bars() const { return alpha_bars_; }  // entries for t = 1..T

  /// Hash of (T, betas) used to detect trajectories built on another schedule.
  std::uint64_t fingerprint() const { return fingerprint_; }

 private:
  NoiseSchedule(Eigen::VectorXd betas, Eigen::VectorXd alpha_bars, std::uint64_t fp)
      : betas_(std::move(betas)), alpha_bars_(std::move(alpha_bars)), fingerprint_(fp) {}

  Eigen::VectorXd betas_;
  Eigen::VectorXd alpha_bars_;
  std::uint64_t fingerprint_;
};

/// Forward noising: sqrt(abar_t) * z0 + sqrt(1 - abar_t) * eps, elementwise.
Latent q_sample(const Latent& z0, int t, const Latent& eps, const NoiseSchedule& s);

}  // namespace invlab
