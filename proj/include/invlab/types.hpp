// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <string>

#include "invlab/errors.hpp"

namespace invlab {

/// All arithmetic is 64-bit; the acceptance identities assume it.
using Scalar = double;

/// A latent is a dense height x width grid of scalars.
using Latent = Eigen::ArrayXXd;

/// Boolean grid; true marks the edit region.
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

inline void require_same_shape(const Latent& a, const Latent& b, const char* where) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(where) + ": grid shapes differ (" +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
  }
}

inline void require_finite(const Latent& a, const char* where) {
  if (!a.allFinite()) {
    throw DimensionError(std::string(where) + ": latent contains non-finite entries");
  }
}

}  // namespace invlab
