// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations used as oracles by the tests. These
// deliberately avoid the library's code paths (and its RNG) for everything
// they check.
#pragma once

#include <cstdint>
#include <vector>

#include "invlab/model.hpp"
#include "invlab/schedule.hpp"

namespace oracles {

struct McPosterior {
  Eigen::VectorXd component_probs;  // P(component | z_t in bin)
  Eigen::VectorXd component_se;     // binomial standard errors
  double z0_mean = 0.0;             // E[z0 | z_t in bin], scalar latents only
  double z0_mean_se = 0.0;
  long hits = 0;
};

/// Monte-Carlo Bayes-rule oracle for 1x1 latents: sample z0 from the
/// cond-reweighted mixture and eps ~ N(0,1), form z_t, and keep samples whose
/// z_t lands within half_width of the target.
McPosterior mc_posterior_scalar(const invlab::MixtureModel& m, const invlab::Condition& cond,
                                double z_t_target, int t, const invlab::NoiseSchedule& s,
                                long n_samples, double half_width, std::uint64_t seed);

struct McLoss {
  double mean = 0.0;
  double se = 0.0;
};

/// Second Monte-Carlo implementation of the denoising loss (per-cell squared
/// error, uniform t), with its own generator and sampling layout.
McLoss mc_denoise_loss(const invlab::MixtureModel& m, const invlab::Condition& cond,
                       int n_samples, const invlab::NoiseSchedule& s, std::uint64_t seed);

/// Straight-loop SSIM over sliding windows fully inside the selection.
double reference_ssim(const invlab::Latent& a, const invlab::Latent& b, const invlab::Mask* sel,
                      int window, double c1, double c2);

/// Brute-force patch self-similarity distance.
double reference_structure_distance(const invlab::Latent& a, const invlab::Latent& b, int patch);

/// Scalar inversion recursion for a single-Gaussian model whose state stays
/// colinear with the mean: z0 = coeff * mu evolves through the same affine
/// steps in one dimension.
std::vector<double> single_gaussian_inversion_coeffs(double coeff0, double sigma2,
                                                     const invlab::NoiseSchedule& s);

}  // namespace oracles
