#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fragsplat/metrics/image_metrics.h"
#include "fragsplat/metrics/trajectory_metrics.h"
#include "fragsplat/render/photometric_loss.h"
#include "test_util.h"

namespace fragsplat {
namespace {

using testing::ExpectError;
using testing::RandomPose;
using testing::RandomVec;

Image RandomImage(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image image(w, h);
  for (double& v : image.data()) v = u(rng);
  return image;
}

// Direct per-window SSIM with a 2-D Gaussian, no separable filtering.
double SsimOracle(const Image& a, const Image& b) {
  const int r = kSsimWindow / 2;
  std::vector<double> w(kSsimWindow * kSsimWindow);
  double total = 0.0;
  for (int j = 0; j < kSsimWindow; ++j) {
    for (int i = 0; i < kSsimWindow; ++i) {
      const double d2 = (i - r) * (i - r) + (j - r) * (j - r);
      w[j * kSsimWindow + i] = std::exp(-0.5 * d2 / (kSsimSigma * kSsimSigma));
      total += w[j * kSsimWindow + i];
    }
  }
  for (double& v : w) v /= total;
  double sum = 0.0;
  int count = 0;
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y + kSsimWindow <= a.height(); ++y) {
      for (int x = 0; x + kSsimWindow <= a.width(); ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int j = 0; j < kSsimWindow; ++j) {
          for (int i = 0; i < kSsimWindow; ++i) {
            const double k = w[j * kSsimWindow + i];
            const double va = a.at(x + i, y + j, c), vb = b.at(x + i, y + j, c);
            ma += k * va;
            mb += k * vb;
            saa += k * va * va;
            sbb += k * vb * vb;
            sab += k * va * vb;
          }
        }
        const double var_a = saa - ma * ma, var_b = sbb - mb * mb, cov = sab - ma * mb;
        sum += ((2 * ma * mb + kSsimC1) * (2 * cov + kSsimC2)) /
               ((ma * ma + mb * mb + kSsimC1) * (var_a + var_b + kSsimC2));
        ++count;
      }
    }
  }
  return sum / count;
}

TEST(PsnrTest, KnownValues) {
  Image a(4, 4, 0.5), b(4, 4, 0.5);
  EXPECT_TRUE(std::isinf(Psnr(a, b)));
  for (double& v : b.data()) v += 0.1;  // MSE 0.01
  EXPECT_NEAR(Psnr(a, b), 20.0, 1e-9);
  b.data()[0] += 0.3;  // one channel of 48 off by 0.4
  const double mse = (47 * 0.01 + 0.16) / 48;
  EXPECT_NEAR(Psnr(a, b), -10 * std::log10(mse), 1e-9);
  ExpectError(ErrorCode::kDimensionMismatch, [&] { Psnr(a, Image(4, 5)); });
}

TEST(SsimTest, MatchesDirectWindowSum) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const Image a = RandomImage(rng, 13 + trial, 11 + 2 * trial);
    Image b = a;
    std::normal_distribution<double> n(0.0, 0.05 * (trial + 1));
    for (double& v : b.data()) v += n(rng);
    EXPECT_NEAR(Ssim(a, b), SsimOracle(a, b), 1e-12);
  }
}

TEST(SsimTest, IdentitySymmetryAndErrors) {
  std::mt19937_64 rng(2);
  const Image a = RandomImage(rng, 16, 12), b = RandomImage(rng, 16, 12);
  EXPECT_NEAR(Ssim(a, a), 1.0, 1e-12);
  EXPECT_NEAR(Ssim(a, b), Ssim(b, a), 1e-12);
  EXPECT_LT(Ssim(a, b), 0.5);
  ExpectError(ErrorCode::kDimensionMismatch, [&] { Ssim(a, Image(16, 13)); });
  ExpectError(ErrorCode::kInvalidArgument, [&] { Ssim(Image(10, 20), Image(10, 20)); });
}

TEST(SsimTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  const Image a = RandomImage(rng, 14, 12), b = RandomImage(rng, 14, 12);
  Image grad;
  Ssim(a, b, &grad);
  ASSERT_TRUE(grad.SameShape(a));
  const double h = 1e-6;
  for (std::size_t i = 0; i < a.data().size(); i += 7) {
    Image plus = a, minus = a;
    plus.data()[i] += h;
    minus.data()[i] -= h;
    const double fd = (Ssim(plus, b) - Ssim(minus, b)) / (2 * h);
    EXPECT_NEAR(grad.data()[i], fd, 1e-8 + 1e-6 * std::abs(fd)) << i;
  }
}

TEST(LossTest, ValueAndGradient) {
  std::mt19937_64 rng(4);
  const Image r = RandomImage(rng, 15, 13), t = RandomImage(rng, 15, 13);
  const PhotometricLoss loss = ComputePhotometricLoss(r, t);
  double l1 = 0.0;
  for (std::size_t i = 0; i < r.data().size(); ++i) l1 += std::abs(r.data()[i] - t.data()[i]);
  l1 /= r.data().size();
  EXPECT_NEAR(loss.l1, l1, 1e-14);
  EXPECT_NEAR(loss.value, 0.8 * l1 + 0.2 * (1 - SsimOracle(r, t)), 1e-12);
  EXPECT_TRUE(ComputePhotometricLoss(r, t, false).gradient.data().empty());
  const double h = 1e-7;
  for (std::size_t i = 0; i < r.data().size(); i += 5) {
    Image plus = r, minus = r;
    plus.data()[i] += h;
    minus.data()[i] -= h;
    const double fd = (ComputePhotometricLoss(plus, t, false).value -
                       ComputePhotometricLoss(minus, t, false).value) /
                      (2 * h);
    EXPECT_NEAR(loss.gradient.data()[i], fd, 1e-7) << i;
  }
  EXPECT_NEAR(ComputePhotometricLoss(t, t).value, 0.0, 1e-12);
  ExpectError(ErrorCode::kDimensionMismatch, [&] { ComputePhotometricLoss(r, Image(3, 3)); });
}

Pose WithCenter(std::mt19937_64& rng, const Vec3& center) {
  const Eigen::Quaterniond q = QuaternionFromAngleAxis(RandomVec(rng, 0.5));
  return Pose(q, -(q * center));
}

TEST(AteTest, SimilarityInvariant) {
  std::mt19937_64 rng(5);
  Trajectory ref, est;
  const SimTransform s{RandomPose(rng, 1.0, 3.0), 0.37};
  for (int f = 1; f <= 10; ++f) {
    const Vec3 c = RandomVec(rng, 2.0);
    ref.Append(f, WithCenter(rng, c));
    est.Append(f, WithCenter(rng, s.Inverse().Apply(c)));
  }
  const TrajectoryAlignment a = AlignTrajectories(est, ref);
  EXPECT_LT(a.rmse, 1e-9);
  EXPECT_NEAR(a.transform.scale, 0.37, 1e-9);
  EXPECT_EQ(a.residuals.size(), 10u);
}

// Perturbing the closed-form transform in any direction never helps.
TEST(AteTest, ClosedFormIsOptimal) {
  std::mt19937_64 rng(6);
  Trajectory ref, est;
  std::vector<Vec3> src, dst;
  for (int f = 1; f <= 12; ++f) {
    const Vec3 c = RandomVec(rng, 2.0);
    ref.Append(f, WithCenter(rng, c));
    const Vec3 noisy = 1.7 * c + Vec3(1, 0, 0) + RandomVec(rng, 0.2);
    est.Append(f, WithCenter(rng, noisy));
    src.push_back(est.entries().back().pose.Center());
    dst.push_back(c);
  }
  const TrajectoryAlignment a = AlignTrajectories(est, ref);
  auto rmse = [&](const SimTransform& t) {
    double sum = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) sum += (t.Apply(src[i]) - dst[i]).squaredNorm();
    return std::sqrt(sum / src.size());
  };
  EXPECT_NEAR(rmse(a.transform), a.rmse, 1e-12);
  for (int trial = 0; trial < 2000; ++trial) {
    const double size = trial < 1000 ? 1e-3 : 1e-1;
    SimTransform t = a.transform;
    t.pose = Pose(QuaternionFromAngleAxis(RandomVec(rng, size)) * t.pose.rotation(),
                  t.pose.translation() + RandomVec(rng, size));
    t.scale *= std::exp(std::normal_distribution<double>(0.0, size)(rng));
    EXPECT_GE(rmse(t), a.rmse - 1e-12);
  }
  EXPECT_EQ(Ate(est, ref), a.rmse);
}

TEST(AteTest, Errors) {
  Trajectory a, b;
  for (int f = 1; f <= 2; ++f) {
    a.Append(f, Pose());
    b.Append(f, Pose());
  }
  ExpectError(ErrorCode::kTooFewPoses, [&] { Ate(a, b); });
  a.Append(3, Pose());
  ExpectError(ErrorCode::kIndexMismatch, [&] { Ate(a, b); });
  b.Append(4, Pose());
  ExpectError(ErrorCode::kIndexMismatch, [&] { Ate(a, b); });
}

}  // namespace
}  // namespace fragsplat
