#include <gtest/gtest.h>

#include <cmath>

#include "c3ae/nn/grad_check.hpp"
#include "c3ae/nn/losses.hpp"
#include "c3ae/rng.hpp"

using namespace c3ae;
using namespace c3ae::nn;

TEST(BceLoss, AnalyticValueAtHalf) {
  Tensor64 p = Tensor64::full({2, 8}, 0.5);
  Tensor64 t = Tensor64::full({2, 8}, 0.5);
  EXPECT_NEAR(bce_loss(p, t), std::log(2.0), 1e-12);
}

TEST(BceLoss, VanishesAtMatchedExtremes) {
  Tensor64 p({1, 4});
  Tensor64 t({1, 4});
  p.data = {1e-9, 1e-9, 1.0 - 1e-9, 1.0 - 1e-9};
  t.data = {0, 0, 1, 1};
  EXPECT_NEAR(bce_loss(p, t), 0.0, 1e-5);
}

TEST(BceLoss, NonNegativeAndEntropyAtMatch) {
  Rng rng(1);
  Tensor64 p = Tensor64::uniform({4, 9}, rng, 0.05, 0.95);
  Tensor64 t = p;
  double entropy = 0;
  for (double v : p.data)
    entropy -= v * std::log(v) + (1 - v) * std::log(1 - v);
  entropy /= static_cast<double>(p.numel());
  const double loss = bce_loss(p, t);
  EXPECT_GE(loss, 0.0);
  EXPECT_NEAR(loss, entropy, 1e-12);

  Tensor64 q = Tensor64::uniform({4, 9}, rng, 0.05, 0.95);
  EXPECT_GE(bce_loss(q, t), 0.0);
}

TEST(BceLoss, ShapeMismatchThrows) {
  Tensor64 p({2, 3});
  Tensor64 t({3, 2});
  EXPECT_THROW(bce_loss(p, t), DomainError);
}

TEST(BceLoss, GradientCheck) {
  Rng rng(2);
  Tensor64 p = Tensor64::uniform({3, 7}, rng, 0.1, 0.9);
  Tensor64 t = Tensor64::uniform({3, 7}, rng, 0.0, 1.0);
  Tensor64 g;
  bce_loss(p, t, &g);
  p.grad = g.data;
  auto fn = [&] { return bce_loss(p, t); };
  EXPECT_LT(grad_check<double>(fn, {&p}), 1e-3);
}

TEST(RaeLoss, NearZeroAtMatch) {
  Tensor64 est({2, 3});
  Tensor64 gt({2, 3});
  est.data = {0.5, 0.7, 0.3, 1.0, 1.0, 1.0};
  gt.data = est.data;
  EXPECT_LE(rae_loss(est, gt), 0.01);
}

TEST(RaeLoss, ScaleInvariant) {
  Rng rng(3);
  Tensor64 gt = Tensor64::uniform({4, 3}, rng, 0.1, 1.0);
  Tensor64 est = Tensor64::uniform({4, 3}, rng, 0.1, 1.0);
  Tensor64 est2 = est;
  for (auto& v : est2.data) v *= 2.0;
  EXPECT_NEAR(rae_loss(est, gt), rae_loss(est2, gt), 1e-9);
}

TEST(RaeLoss, ZeroNormRowThrows) {
  Tensor64 est({1, 3});
  Tensor64 gt = Tensor64::full({1, 3}, 1.0);
  EXPECT_THROW(rae_loss(est, gt), DomainError);
  Tensor64 bad_gt({1, 3});
  Tensor64 ok_est = Tensor64::full({1, 3}, 1.0);
  EXPECT_THROW(rae_loss(ok_est, bad_gt), DomainError);
}

TEST(RaeLoss, GradientCheckAwayFromAlignment) {
  Rng rng(4);
  // rows at least ~5 degrees away from the ground truth
  Tensor64 gt({5, 3});
  Tensor64 est({5, 3});
  for (int n = 0; n < 5; ++n) {
    for (int j = 0; j < 3; ++j) {
      gt.at2(n, j) = rng.uniform(0.3, 1.0);
      est.at2(n, j) = rng.uniform(0.3, 1.0);
    }
    // push the estimate off-axis deterministically
    est.at2(n, n % 3) += 0.5;
  }
  ASSERT_GT(rae_loss(est, gt), 5.0 / 5);  // mean over 5 rows
  Tensor64 g;
  rae_loss(est, gt, &g);
  est.grad = g.data;
  auto fn = [&] { return rae_loss(est, gt); };
  EXPECT_LT(grad_check<double>(fn, {&est}), 1e-3);
}

TEST(RaeLoss, MeanOverBatch) {
  Tensor64 est({2, 3});
  Tensor64 gt({2, 3});
  // row 0 aligned, row 1 at 45 degrees in the r-g plane
  est.data = {1, 1, 1, 1, 1e-12, 1e-12};
  gt.data = {1, 1, 1, 1, 1, 1e-12};
  EXPECT_NEAR(rae_loss(est, gt), 45.0 / 2.0, 0.01);
}
