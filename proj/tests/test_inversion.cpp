// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "invlab/inversion.hpp"
#include "invlab/rng.hpp"

using namespace invlab;

namespace {

struct Setup {
  MixtureModel model;
  Condition c_src;
  Condition c_tgt;
  Condition null_cond;
  Latent z0;
};

Setup two_mode_setup(std::uint64_t seed, int rows = 8, int cols = 8) {
  SplitMix64 rng(seed);
  Latent mu0 = rng.normal_grid(rows, cols);
  Latent mu1 = mu0;
  Latent bump = Latent::Zero(rows, cols);
  bump.block(rows / 4, cols / 4, rows / 2, cols / 2) = 1.0;
  bump *= 1.8 / std::sqrt(bump.square().sum());  // 6 sigma mode distance
  mu1 += bump;
  std::vector<Latent> means{mu0, mu1};
  MixtureModel m(std::move(means), Eigen::VectorXd::Constant(2, 0.09),
                 Eigen::VectorXd::Constant(2, 0.5));
  const Latent z0 = m.mean(0) + std::sqrt(m.sigma2(0)) * rng.normal_grid(rows, cols);
  return Setup{std::move(m), Condition::one_hot(2, 0, 10.0, "src"),
               Condition::one_hot(2, 1, 10.0, "tgt"), Condition::null_of(2), z0};
}

}  // namespace

TEST_CASE("direct reconstruction is exact for every guidance pair") {
  const auto s = NoiseSchedule::default_for(50);
  const auto su = two_mode_setup(101);
  CorrectionConfig cc;
  cc.method = Method::direct;
  for (const double wi : {1.0, 2.5, 7.5}) {
    for (const double wf : {1.0, 5.0, 7.5}) {
      const auto traj = invert(su.z0, su.c_src, su.null_cond, wi, su.model, s);
      const auto rec = reconstruct(traj, su.c_src, su.null_cond, wf, cc, su.model, s);
      CHECK((rec.z0_hat - su.z0).abs().maxCoeff() <= 1e-10);
      CHECK(rec.offsets.src.size() == 50);
      CHECK(rec.offsets.tgt.size() == 50);
    }
  }
}

TEST_CASE("ddim reconstruction at K=1 ignores the guidance scale") {
  const auto s = NoiseSchedule::default_for(50);
  SplitMix64 rng(7);
  std::vector<Latent> means{rng.normal_grid(8, 8)};
  MixtureModel m(std::move(means), Eigen::VectorXd::Constant(1, 0.25),
                 Eigen::VectorXd::Constant(1, 1.0));
  const Condition cond = Condition::one_hot(1, 0);
  const Condition null_cond = Condition::null_of(1);
  const Latent z0 = rng.normal_grid(8, 8);
  const auto traj = invert(z0, cond, null_cond, 1.0, m, s);
  CorrectionConfig cc;
  cc.method = Method::ddim;
  const auto base = reconstruct(traj, cond, null_cond, 1.0, cc, m, s);
  const auto guided = reconstruct(traj, cond, null_cond, 7.5, cc, m, s);
  CHECK((base.z0_hat - guided.z0_hat).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("reconstruct rejects foreign trajectories") {
  const auto s = NoiseSchedule::default_for(50);
  const auto other = NoiseSchedule::default_for(40);
  const auto su = two_mode_setup(102);
  const auto traj = invert(su.z0, su.c_src, su.null_cond, 1.0, su.model, s);
  CorrectionConfig cc;
  cc.method = Method::ddim;
  CHECK_THROWS_AS(reconstruct(traj, su.c_src, su.null_cond, 1.0, cc, su.model, other),
                  ConfigError);
}

TEST_CASE("negative prompt collapses guidance to scale one") {
  const auto s = NoiseSchedule::default_for(50);
  const auto su = two_mode_setup(103);
  SplitMix64 rng(4);
  const Latent z_t = rng.normal_grid(8, 8);

  const Latent plain = predict_eps(su.model, z_t, 10, su.c_src, s);
  const Latent np = cfg_eps(su.model, z_t, 10, su.c_src, negative_prompt_condition(su.c_src), 7.5, s);
  CHECK((np - plain).abs().maxCoeff() == 0.0);  // equal logits short-circuit, exact

  const auto traj = invert(su.z0, su.c_src, su.null_cond, 1.0, su.model, s);
  CorrectionConfig np_cc;
  np_cc.method = Method::neg_prompt;
  CorrectionConfig ddim_cc;
  ddim_cc.method = Method::ddim;
  const auto rec_np = reconstruct(traj, su.c_src, su.null_cond, 7.5, np_cc, su.model, s);
  const auto rec_w1 = reconstruct(traj, su.c_src, su.null_cond, 1.0, ddim_cc, su.model, s);
  CHECK((rec_np.z0_hat - rec_w1.z0_hat).abs().maxCoeff() == 0.0);  // bitwise
}

TEST_CASE("direct offsets: initialization, lengths, high-T decay") {
  const auto su = two_mode_setup(104);
  {
    const auto s = NoiseSchedule::default_for(50);
    const auto traj = invert(su.z0, su.c_src, su.null_cond, 1.0, su.model, s);
    const auto off = direct_offsets(traj, su.c_src, su.c_tgt, su.null_cond, 7.5, su.model, s);
    CHECK(off.src.size() == 50);
    CHECK(off.tgt.size() == 50);

    // z''_T = z*_T, so the top offset is exactly one forward step's deviation.
    const Latent f = ddim_forward_step(
        traj.state(50), 50, cfg_eps(su.model, traj.state(50), 50, su.c_src, su.null_cond, 7.5, s), s);
    CHECK((off.src[49] - (traj.state(49) - f)).abs().maxCoeff() == 0.0);
  }

  // With w_fwd = w_inv and a single component the offsets are pure
  // discretization residual and shrink with more steps.
  SplitMix64 rng(11);
  std::vector<Latent> means{rng.normal_grid(8, 8)};
  MixtureModel m1(std::move(means), Eigen::VectorXd::Constant(1, 0.25),
                  Eigen::VectorXd::Constant(1, 1.0));
  const Condition c1 = Condition::one_hot(1, 0);
  const Condition n1 = Condition::null_of(1);
  const Latent z0 = rng.normal_grid(8, 8);
  auto max_offset = [&](int T) {
    const auto s = NoiseSchedule::default_for(T);
    const auto traj = invert(z0, c1, n1, 1.0, m1, s);
    const auto off = direct_offsets(traj, c1, c1, n1, 1.0, m1, s);
    double worst = 0.0;
    for (const auto& o : off.src) worst = std::max(worst, o.abs().maxCoeff());
    return worst;
  };
  const double at50 = max_offset(50);
  const double at500 = max_offset(500);
  CHECK(at50 > 0.0);
  CHECK(at500 < at50);
}

TEST_CASE("direct source-branch identity holds per step, all guidance pairs") {
  const auto s = NoiseSchedule::default_for(50);
  const auto su = two_mode_setup(105);
  for (const double wi : {1.0, 7.5}) {
    for (const double wf : {1.0, 7.5}) {
      const auto traj = invert(su.z0, su.c_src, su.null_cond, wi, su.model, s);
      const auto off = direct_offsets(traj, su.c_src, su.c_tgt, su.null_cond, wf, su.model, s);
      // Replaying the corrected recursion must land on z* at every step.
      Latent z = traj.state(50);
      for (int t = 50; t >= 1; --t) {
        const Latent f =
            ddim_forward_step(z, t, cfg_eps(su.model, z, t, su.c_src, su.null_cond, wf, s), s);
        z = f + off.src[static_cast<std::size_t>(t - 1)];
        CHECK((z - traj.state(t - 1)).abs().maxCoeff() <= 1e-10);
      }
    }
  }
}

TEST_CASE("direct with scale=0 reproduces plain ddim bitwise") {
  const auto s = NoiseSchedule::default_for(50);
  const auto su = two_mode_setup(106);
  const auto traj = invert(su.z0, su.c_src, su.null_cond, 1.0, su.model, s);
  CorrectionConfig direct_cc;
  direct_cc.method = Method::direct;
  direct_cc.scale = 0.0;
  CorrectionConfig ddim_cc;
  ddim_cc.method = Method::ddim;
  const auto a = reconstruct(traj, su.c_src, su.null_cond, 7.5, direct_cc, su.model, s);
  const auto b = reconstruct(traj, su.c_src, su.null_cond, 7.5, ddim_cc, su.model, s);
  CHECK((a.z0_hat - b.z0_hat).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("null variable optimization: budget zero and K=1 degeneracy") {
  const auto s = NoiseSchedule::default_for(50);
  const auto su = two_mode_setup(107);
  const auto traj = invert(su.z0, su.c_src, su.null_cond, 1.0, su.model, s);

  CorrectionConfig nv0;
  nv0.method = Method::null_var;
  nv0.opt_iters = 0;
  CorrectionConfig ddim_cc;
  ddim_cc.method = Method::ddim;
  const auto a = reconstruct(traj, su.c_src, su.null_cond, 7.5, nv0, su.model, s);
  const auto b = reconstruct(traj, su.c_src, su.null_cond, 7.5, ddim_cc, su.model, s);
  CHECK((a.z0_hat - b.z0_hat).abs().maxCoeff() == 0.0);  // all-null variables, same pass

  const auto nv = optimize_null_variable(traj, su.c_src, 7.5, 0, 0.5, su.model, s);
  for (const auto& v : nv.variables) CHECK(v.logits.isZero(0.0));

  // K=1: no logit has any effect, so variables stay at the null value.
  SplitMix64 rng(3);
  std::vector<Latent> means{rng.normal_grid(8, 8)};
  MixtureModel m1(std::move(means), Eigen::VectorXd::Constant(1, 0.25),
                  Eigen::VectorXd::Constant(1, 1.0));
  const Condition c1 = Condition::one_hot(1, 0);
  const auto traj1 = invert(rng.normal_grid(8, 8), c1, Condition::null_of(1), 1.0, m1, s);
  const auto nv1 = optimize_null_variable(traj1, c1, 7.5, 10, 0.5, m1, s);
  for (const auto& v : nv1.variables) CHECK(v.logits.isZero(0.0));
}

TEST_CASE("null variable optimization: monotone objectives and strict improvement") {
  const auto s = NoiseSchedule::default_for(50);
  const auto su = two_mode_setup(108);
  const auto traj = invert(su.z0, su.c_src, su.null_cond, 1.0, su.model, s);

  const auto nv20 = optimize_null_variable(traj, su.c_src, 7.5, 20, 0.5, su.model, s);
  const auto nv0 = optimize_null_variable(traj, su.c_src, 7.5, 0, 0.5, su.model, s);
  REQUIRE(nv20.trace.size() == 50);
  REQUIRE(nv0.trace.size() == 50);

  // Within a step, accepted iterations never increase the objective.
  for (const auto& tr : nv20.trace) {
    for (std::size_t i = 1; i < tr.objectives.size(); ++i) {
      CHECK(tr.objectives[i] <= tr.objectives[i - 1]);
    }
  }

  // Across budgets, the optimized pass lands strictly below the zero-budget
  // pass at every step whose unoptimized objective is nonnegligible.
  for (std::size_t i = 0; i < nv20.trace.size(); ++i) {
    const double f0 = nv0.trace[i].objectives.back();
    const double f20 = nv20.trace[i].objectives.back();
    if (f0 > 1e-14) CHECK(f20 < f0);
  }

  // And the end-to-end reconstruction is better with the budget.
  CHECK((nv20.z0_hat - su.z0).square().mean() < (nv0.z0_hat - su.z0).square().mean());
}

TEST_CASE("correction config validation") {
  CorrectionConfig cc;
  cc.opt_iters = -1;
  CHECK_THROWS_AS(cc.validate(), ConfigError);
  cc = CorrectionConfig{};
  cc.scale = 1.5;
  CHECK_THROWS_AS(cc.validate(), ConfigError);
  cc = CorrectionConfig{};
  cc.interval = 0;
  CHECK_THROWS_AS(cc.validate(), ConfigError);
}
