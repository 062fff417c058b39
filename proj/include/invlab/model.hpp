// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "invlab/schedule.hpp"
#include "invlab/types.hpp"

namespace invlab {

/// A condition reweights the mixture prior: effective weight of component k
/// is proportional to prior_k * exp(logits_k). Zero logits reproduce the
/// prior exactly, so the null condition is logits = 0.
struct Condition {
  Eigen::VectorXd logits;
  std::string label;

  static Condition null_of(int K) { return {Eigen::VectorXd::Zero(K), "null"}; }

  static Condition one_hot(int K, int hot, double strength = 10.0, std::string label = "") {
    Eigen::VectorXd l = Eigen::VectorXd::Zero(K);
    l[hot] = strength;
    if (label.empty()) label = "one_hot_" + std::to_string(hot);
    return {std::move(l), std::move(label)};
  }
};

/// Gaussian mixture over latent grids with isotropic per-component variance.
/// Every posterior quantity is closed form, which is what makes the exact
/// noise predictor below possible. Immutable; safe to share across threads.
class MixtureModel {
 public:
  MixtureModel(std::vector<Latent> means, Eigen::VectorXd sigma2, Eigen::VectorXd prior_weights);

  int component_count() const { return static_cast<int>(means_.size()); }
  Eigen::Index rows() const { return means_[0].rows(); }
  Eigen::Index cols() const { return means_[0].cols(); }
  Eigen::Index cell_count() const { return rows() * cols(); }

  const Latent& mean(int k) const { return means_[static_cast<std::size_t>(k)]; }
  double sigma2(int k) const { return sigma2_[k]; }
  const Eigen::VectorXd& sigma2() const { return sigma2_; }
  const Eigen::VectorXd& prior_weights() const { return prior_; }

  /// Softmax of (log prior + logits); sums to 1.
  Eigen::VectorXd effective_weights(const Condition& cond) const;

 private:
  std::vector<Latent> means_;
  Eigen::VectorXd sigma2_;
  Eigen::VectorXd prior_;
};

/// Posterior probability of each component given the noised latent z_t.
/// Component k has marginal N(sqrt(abar_t) mu_k, (abar_t sigma2_k + 1 - abar_t) I),
/// reweighted by the condition's effective weights.
Eigen::VectorXd responsibilities(const MixtureModel& m, const Condition& cond, const Latent& z_t,
                                 int t, const NoiseSchedule& s);

/// Posterior mean E[z0 | z_t, cond] under the noised mixture.
Latent posterior_z0_mean(const MixtureModel& m, const Condition& cond, const Latent& z_t, int t,
                         const NoiseSchedule& s);

/// The exact conditional expectation E[eps | z_t, cond]; minimizes the
/// denoising objective over all predictors.
Latent predict_eps(const MixtureModel& m, const Latent& z_t, int t, const Condition& cond,
                   const NoiseSchedule& s);

/// Classifier-free guidance: w * eps(cond) + (1 - w) * eps(null_cond).
/// Short-circuits at w == 1, w == 0, and equal logits so those algebraic
/// identities hold bitwise.
Latent cfg_eps(const MixtureModel& m, const Latent& z_t, int t, const Condition& cond,
               const Condition& null_cond, double w, const NoiseSchedule& s);

/// Monte-Carlo denoising loss: mean over samples of per-cell squared error
/// |eps - eps_hat|^2 / D with t uniform on 1..T, eps ~ N(0,I) and z0 drawn
/// from the cond-reweighted mixture. Deterministic given the seed. When
/// `perturbation` is set it is added to every prediction, which is how the
/// optimality of the exact predictor is probed.
double empirical_denoise_loss(const MixtureModel& m, const Condition& cond, int n_samples,
                              std::uint64_t seed, const NoiseSchedule& s,
                              const std::optional<Latent>& perturbation = std::nullopt);

}  // namespace invlab
