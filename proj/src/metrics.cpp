// SPDX-License-Identifier: Apache-2.0
#include "invlab/metrics.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace invlab {

namespace {

Mask make_selection(Eigen::Index rows, Eigen::Index cols, const Mask* mask, bool invert) {
  if (mask == nullptr) return Mask::Constant(rows, cols, true);
  if (mask->rows() != rows || mask->cols() != cols) {
    throw DimensionError("metrics: mask shape does not match latent shape");
  }
  return invert ? Mask(!mask->array()) : *mask;
}

struct Selected {
  std::vector<double> a;
  std::vector<double> b;
};

Selected collect(const Latent& a, const Latent& b, const Mask& sel) {
  Selected out;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if (sel(r, c)) {
        out.a.push_back(a(r, c));
        out.b.push_back(b(r, c));
      }
    }
  }
  return out;
}

double dynamic_range(const std::vector<double>& v) {
  double lo = v[0], hi = v[0];
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return hi - lo;
}

}  // namespace

Mask mask_complement(const Mask& m) { return Mask(!m.array()); }

double mse(const Latent& a, const Latent& b, const Mask* mask, bool invert_mask) {
  require_same_shape(a, b, "mse");
  const Mask sel = make_selection(a.rows(), a.cols(), mask, invert_mask);
  const Selected s = collect(a, b, sel);
  if (s.a.empty()) throw MetricError("mse: empty selection");
  double acc = 0.0;
  for (std::size_t i = 0; i < s.a.size(); ++i) {
    const double d = s.a[i] - s.b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(s.a.size());
}

double psnr(const Latent& a, const Latent& b, const Mask* mask, bool invert_mask,
            std::optional<double> fixed_peak) {
  require_same_shape(a, b, "psnr");
  const Mask sel = make_selection(a.rows(), a.cols(), mask, invert_mask);
  const Selected s = collect(a, b, sel);
  if (s.a.empty()) throw MetricError("psnr: empty selection");

  double R;
  if (fixed_peak) {
    R = *fixed_peak;
    if (!(R > 0.0)) throw MetricError("psnr: fixed peak must be > 0");
  } else {
    R = dynamic_range(s.a);
    if (R == 0.0) throw MetricError("psnr: zero dynamic range in dynamic peak mode");
  }

  double err = 0.0;
  for (std::size_t i = 0; i < s.a.size(); ++i) {
    const double d = s.a[i] - s.b[i];
    err += d * d;
  }
  err /= static_cast<double>(s.a.size());

  if (err < R * R * 1e-10) return 100.0;
  return 10.0 * std::log10(R * R / err);
}

double ssim(const Latent& a, const Latent& b, const Mask* mask, bool invert_mask, int window,
            std::optional<double> c1, std::optional<double> c2) {
  require_same_shape(a, b, "ssim");
  if (window < 1 || window % 2 == 0) throw MetricError("ssim: window must be a positive odd integer");
  if (window > std::min(a.rows(), a.cols())) {
    throw MetricError("ssim: window exceeds grid dimensions");
  }
  const Mask sel = make_selection(a.rows(), a.cols(), mask, invert_mask);

  if (!c1 || !c2) {
    const Selected s = collect(a, b, sel);
    if (s.a.empty()) throw MetricError("ssim: empty selection");
    const double R = dynamic_range(s.a);
    if (R == 0.0) throw MetricError("ssim: zero dynamic range; pass explicit c1/c2");
    if (!c1) c1 = (0.01 * R) * (0.01 * R);
    if (!c2) c2 = (0.03 * R) * (0.03 * R);
  }

  const double n = static_cast<double>(window) * static_cast<double>(window);
  double acc = 0.0;
  long count = 0;
  for (Eigen::Index r0 = 0; r0 + window <= a.rows(); ++r0) {
    for (Eigen::Index c0 = 0; c0 + window <= a.cols(); ++c0) {
      if (!sel.block(r0, c0, window, window).all()) continue;
      const auto wa = a.block(r0, c0, window, window);
      const auto wb = b.block(r0, c0, window, window);
      const double mu_a = wa.mean();
      const double mu_b = wb.mean();
      const double var_a = (wa - mu_a).square().sum() / n;
      const double var_b = (wb - mu_b).square().sum() / n;
      const double cov = ((wa - mu_a) * (wb - mu_b)).sum() / n;
      const double num = (2.0 * mu_a * mu_b + *c1) * (2.0 * cov + *c2);
      const double den = (mu_a * mu_a + mu_b * mu_b + *c1) * (var_a + var_b + *c2);
      acc += num / den;
      ++count;
    }
  }
  if (count == 0) throw MetricError("ssim: no window fits fully inside the selection");
  return acc / static_cast<double>(count);
}

double structure_distance(const Latent& a, const Latent& b, int patch) {
  require_same_shape(a, b, "structure_distance");
  if (patch < 1 || a.rows() % patch != 0 || a.cols() % patch != 0) {
    throw MetricError("structure_distance: patch size must divide both grid dimensions");
  }
  const Eigen::Index pr = a.rows() / patch;
  const Eigen::Index pc = a.cols() / patch;
  const Eigen::Index np = pr * pc;
  const Eigen::Index d = static_cast<Eigen::Index>(patch) * patch;

  auto patch_matrix = [&](const Latent& x) {
    Eigen::MatrixXd p(np, d);
    Eigen::Index i = 0;
    for (Eigen::Index r = 0; r < pr; ++r) {
      for (Eigen::Index c = 0; c < pc; ++c, ++i) {
        Eigen::Index j = 0;
        for (Eigen::Index rr = 0; rr < patch; ++rr) {
          for (Eigen::Index cc = 0; cc < patch; ++cc, ++j) {
            p(i, j) = x(r * patch + rr, c * patch + cc);
          }
        }
      }
    }
    return p;
  };

  auto cosine_matrix = [&](const Eigen::MatrixXd& p) {
    const Eigen::VectorXd norms = p.rowwise().norm();
    Eigen::MatrixXd sim(np, np);
    for (Eigen::Index i = 0; i < np; ++i) {
      for (Eigen::Index j = 0; j < np; ++j) {
        sim(i, j) = (norms[i] == 0.0 || norms[j] == 0.0)
                        ? 0.0
                        : p.row(i).dot(p.row(j)) / (norms[i] * norms[j]);
      }
    }
    return sim;
  };

  const Eigen::MatrixXd sa = cosine_matrix(patch_matrix(a));
  const Eigen::MatrixXd sb = cosine_matrix(patch_matrix(b));
  return (sa - sb).cwiseAbs().mean();
}

double edit_fidelity(const Latent& z, const MixtureModel& m, const Condition& cond,
                     const Mask* mask) {
  require_same_shape(m.mean(0), z, "edit_fidelity");
  const Mask sel = make_selection(z.rows(), z.cols(), mask, false);
  long n = 0;
  for (Eigen::Index r = 0; r < sel.rows(); ++r) {
    for (Eigen::Index c = 0; c < sel.cols(); ++c) {
      if (sel(r, c)) ++n;
    }
  }
  if (n == 0) throw MetricError("edit_fidelity: empty selection");

  const Eigen::VectorXd w = m.effective_weights(cond);
  const int K = m.component_count();
  Eigen::VectorXd logp(K);
  for (int k = 0; k < K; ++k) {
    const double s2 = m.sigma2(k);
    double sq = 0.0;
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        if (!sel(r, c)) continue;
        const double d = z(r, c) - m.mean(k)(r, c);
        sq += d * d;
      }
    }
    logp[k] = (w[k] > 0.0 ? std::log(w[k]) : -std::numeric_limits<double>::infinity()) -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi * s2) -
              0.5 * sq / s2;
  }
  const double mx = logp.maxCoeff();
  const double lse = mx + std::log((logp.array() - mx).exp().sum());
  return lse / static_cast<double>(n);
}

}  // namespace invlab
