// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "invlab/model.hpp"
#include "invlab/types.hpp"

namespace invlab {

/// One record of the evaluation metrics. Column names are fixed; reports use
/// exactly these, in this order.
struct MetricsRow {
  double mse_all = 0.0;
  double mse_bg = 0.0;
  double psnr_bg = 0.0;
  double ssim_bg = 0.0;
  double structure_distance = 0.0;
  double fidelity_whole = 0.0;
  double fidelity_region = 0.0;
};

Mask mask_complement(const Mask& m);

/// Mean squared difference over the selected cells. With a mask, true cells
/// are selected; invert_mask selects the complement (the background).
double mse(const Latent& a, const Latent& b, const Mask* mask = nullptr, bool invert_mask = false);

/// 10 log10(R^2 / mse) over the selection. R is max - min of `a` over the
/// selection unless a fixed peak is given. Capped at 100 when
/// mse < R^2 * 1e-10.
double psnr(const Latent& a, const Latent& b, const Mask* mask = nullptr, bool invert_mask = false,
            std::optional<double> fixed_peak = std::nullopt);

/// Mean local SSIM over window x window patches fully inside the selection
/// (sliding, stride 1). Defaults c1 = (0.01 R)^2, c2 = (0.03 R)^2 with R the
/// dynamic range of `a` over the selection.
double ssim(const Latent& a, const Latent& b, const Mask* mask = nullptr, bool invert_mask = false,
            int window = 7, std::optional<double> c1 = std::nullopt,
            std::optional<double> c2 = std::nullopt);

/// Self-similarity distance: split both grids into non-overlapping
/// patch x patch tiles, build each grid's cosine-similarity matrix across
/// tiles, and return the mean absolute difference of the two matrices.
/// Zero-norm tiles take similarity 0. Invariant to positive rescaling.
double structure_distance(const Latent& a, const Latent& b, int patch = 4);

/// Average per-cell log-density of z under the cond-reweighted mixture,
/// restricted to the masked cells when a mask is given. Higher means better
/// alignment with the condition.
double edit_fidelity(const Latent& z, const MixtureModel& m, const Condition& cond,
                     const Mask* mask = nullptr);

}  // namespace invlab
