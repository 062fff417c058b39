// SPDX-License-Identifier: Apache-2.0
#include "invlab/model.hpp"

#include <cmath>
#include <numbers>

#include "invlab/rng.hpp"

namespace invlab {

MixtureModel::MixtureModel(std::vector<Latent> means, Eigen::VectorXd sigma2,
                           Eigen::VectorXd prior_weights)
    : means_(std::move(means)), sigma2_(std::move(sigma2)), prior_(std::move(prior_weights)) {
  const auto K = static_cast<Eigen::Index>(means_.size());
  if (K == 0) throw ConfigError("mixture.K: at least one component required");
  if (sigma2_.size() != K || prior_.size() != K) {
    throw ConfigError("mixture: means, sigma2 and prior_weights must all have K entries");
  }
  for (Eigen::Index k = 0; k < K; ++k) {
    if (!(sigma2_[k] > 0.0)) {
      throw ConfigError("mixture.sigma2[" + std::to_string(k) + "]: must be > 0");
    }
    if (!(prior_[k] >= 0.0)) {
      throw ConfigError("mixture.prior_weights[" + std::to_string(k) + "]: must be >= 0");
    }
    require_finite(means_[static_cast<std::size_t>(k)], "mixture.means");
    require_same_shape(means_[0], means_[static_cast<std::size_t>(k)], "mixture.means");
  }
  const double sum = prior_.sum();
  if (!(sum > 0.0)) throw ConfigError("mixture.prior_weights: must not all be zero");
  prior_ /= sum;
}

Eigen::VectorXd MixtureModel::effective_weights(const Condition& cond) const {
  const int K = component_count();
  if (cond.logits.size() != K) {
    throw ConfigError("condition '" + cond.label + "': expected " + std::to_string(K) +
                      " logits, got " + std::to_string(cond.logits.size()));
  }
  // Softmax over log prior + logits, stabilized by the max.
  Eigen::VectorXd lw(K);
  for (int k = 0; k < K; ++k) {
    lw[k] = (prior_[k] > 0.0 ? std::log(prior_[k]) : -std::numeric_limits<double>::infinity()) +
            cond.logits[k];
  }
  const double mx = lw.maxCoeff();
  Eigen::VectorXd w = (lw.array() - mx).exp();
  w /= w.sum();
  return w;
}

namespace {

void check_step(int t, const NoiseSchedule& s, const char* where) {
  if (t < 1 || t > s.step_count()) {
    throw StepError(std::string(where) + ": step " + std::to_string(t) + " outside 1.." +
                    std::to_string(s.step_count()));
  }
}

}  // namespace

Eigen::VectorXd responsibilities(const MixtureModel& m, const Condition& cond, const Latent& z_t,
                                 int t, const NoiseSchedule& s) {
  check_step(t, s, "responsibilities");
  require_same_shape(m.mean(0), z_t, "responsibilities");
  const int K = m.component_count();
  const double ab = s.alpha_bar(t);
  const double sqrt_ab = std::sqrt(ab);
  const auto D = static_cast<double>(m.cell_count());

  const Eigen::VectorXd w = m.effective_weights(cond);
  Eigen::VectorXd logp(K);
  for (int k = 0; k < K; ++k) {
    const double var = ab * m.sigma2(k) + (1.0 - ab);
    const double sq = (z_t - sqrt_ab * m.mean(k)).square().sum();
    logp[k] = (w[k] > 0.0 ? std::log(w[k]) : -std::numeric_limits<double>::infinity()) -
              0.5 * D * std::log(2.0 * std::numbers::pi * var) - 0.5 * sq / var;
  }
  const double mx = logp.maxCoeff();
  Eigen::VectorXd r = (logp.array() - mx).exp();
  r /= r.sum();
  return r;
}

Latent posterior_z0_mean(const MixtureModel& m, const Condition& cond, const Latent& z_t, int t,
                         const NoiseSchedule& s) {
  const Eigen::VectorXd r = responsibilities(m, cond, z_t, t, s);
  const double ab = s.alpha_bar(t);
  const double sqrt_ab = std::sqrt(ab);
  Latent acc = Latent::Zero(z_t.rows(), z_t.cols());
  for (int k = 0; k < m.component_count(); ++k) {
    const double s2 = m.sigma2(k);
    const double var = ab * s2 + (1.0 - ab);
    acc += r[k] * ((s2 * sqrt_ab * z_t + (1.0 - ab) * m.mean(k)) / var);
  }
  return acc;
}

Latent predict_eps(const MixtureModel& m, const Latent& z_t, int t, const Condition& cond,
                   const NoiseSchedule& s) {
  check_step(t, s, "predict_eps");
  const double ab = s.alpha_bar(t);
  const Latent ez0 = posterior_z0_mean(m, cond, z_t, t, s);
  return (z_t - std::sqrt(ab) * ez0) / std::sqrt(1.0 - ab);
}

Latent cfg_eps(const MixtureModel& m, const Latent& z_t, int t, const Condition& cond,
               const Condition& null_cond, double w, const NoiseSchedule& s) {
  if (w == 1.0 || cond.logits == null_cond.logits) {
    return predict_eps(m, z_t, t, cond, s);
  }
  if (w == 0.0) {
    return predict_eps(m, z_t, t, null_cond, s);
  }
  return w * predict_eps(m, z_t, t, cond, s) +
         (1.0 - w) * predict_eps(m, z_t, t, null_cond, s);
}

double empirical_denoise_loss(const MixtureModel& m, const Condition& cond, int n_samples,
                              std::uint64_t seed, const NoiseSchedule& s,
                              const std::optional<Latent>& perturbation) {
  if (n_samples < 1) throw ConfigError("empirical_denoise_loss: n_samples must be >= 1");
  if (perturbation) require_same_shape(m.mean(0), *perturbation, "empirical_denoise_loss");

  SplitMix64 rng(seed);
  const Eigen::VectorXd w = m.effective_weights(cond);
  Eigen::VectorXd cum(w.size());
  double run = 0.0;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    run += w[k];
    cum[k] = run;
  }

  const auto rows = m.rows();
  const auto cols = m.cols();
  const auto D = static_cast<double>(m.cell_count());
  const int T = s.step_count();

  double total = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const int t = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(T)));
    const double u = rng.next_double();
    int k = 0;
    while (k + 1 < cum.size() && u > cum[k]) ++k;
    const Latent z0 = m.mean(k) + std::sqrt(m.sigma2(k)) * rng.normal_grid(rows, cols);
    const Latent eps = rng.normal_grid(rows, cols);
    const Latent z_t = q_sample(z0, t, eps, s);
    Latent eps_hat = predict_eps(m, z_t, t, cond, s);
    if (perturbation) eps_hat += *perturbation;
    total += (eps - eps_hat).square().sum() / D;
  }
  return total / static_cast<double>(n_samples);
}

}  // namespace invlab
