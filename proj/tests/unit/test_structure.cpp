#include "helpers.hpp"

#include "kolmo/structure.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace kolmo;
using kolmo::test::vec;

TEST(Structure, LangevinBlocks) {
  const BlockStructure s = block_decompose(Eigen::MatrixXd(test::langevin_B()), 1);
  EXPECT_TRUE(s.hoermander_ok);
  EXPECT_EQ(s.dims, (std::vector<int>{1, 1}));
  EXPECT_EQ(s.cumdims, (std::vector<int>{1, 2}));
  EXPECT_EQ(s.Q, 4);
  EXPECT_EQ(s.r(), 1);
}

TEST(Structure, ThreeChainBlocks) {
  const BlockStructure s = block_decompose(Eigen::MatrixXd(test::chain3_B()), 1);
  EXPECT_EQ(s.dims, (std::vector<int>{1, 1, 1}));
  EXPECT_EQ(s.Q, 9);
  EXPECT_EQ(s.block_of(0), 0);
  EXPECT_EQ(s.block_of(2), 2);
}

TEST(Structure, WiderBlocksAndStarEntries) {
  // d = 2, one degenerate block of size 1; diagonal and upper (starred) entries are allowed.
  Eigen::MatrixXd B(3, 3);
  B << 0.3, -1.0, 0.5,
       0.0, 0.2, 0.0,
       1.0, 2.0, -0.4;
  const BlockStructure s = block_decompose(B, 2);
  EXPECT_TRUE(s.hoermander_ok);
  EXPECT_EQ(s.dims, (std::vector<int>{2, 1}));
  EXPECT_EQ(s.Q, 2 + 3);
}

TEST(Structure, KalmanFailureIsReportedNotThrown) {
  const BlockStructure s = block_decompose(Eigen::MatrixXd::Zero(2, 2), 1);
  EXPECT_FALSE(s.hoermander_ok);
  EXPECT_LT(kalman_rank(Eigen::MatrixXd::Zero(2, 2), 1).rank, 2);
}

TEST(Structure, NonCanonicalFormIsRejected) {
  Eigen::MatrixXd B(2, 2);
  B << 0.0, 1.0, 0.0, 0.0;
  Eigen::MatrixXd C(2, 2);
  C << 1.0, 0.0, 1.0, 0.0;
  EXPECT_FALSE(kalman_rank(B, 1).ok);
  EXPECT_TRUE(kalman_rank(C, 1).ok);
  Eigen::MatrixXd Bs(3, 3);  // Kalman holds, but block (2,0) is nonzero
  Bs << 0, 0, 0,
        1, 0, 0,
        1, 1, 0;
  EXPECT_TRUE(kalman_rank(Bs, 1).ok);
  EXPECT_THROW(block_decompose(Bs, 1), ConfigError);
}

TEST(Structure, DilationAndBLength) {
  const BlockStructure s = block_decompose(Eigen::MatrixXd(test::chain3_B()), 1);
  const Mat D = dilation(2.0, s);
  EXPECT_DOUBLE_EQ(D(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(D(1, 1), 8.0);
  EXPECT_DOUBLE_EQ(D(2, 2), 32.0);
  const int nu[] = {1, 0, 1};
  EXPECT_EQ(b_length(nu, s), 1 + 5);
}

TEST(Structure, NormHomogeneityProperty) {
  const BlockStructure s = block_decompose(Eigen::MatrixXd(test::chain3_B()), 1);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-4.0, 4.0), l(0.01, 50.0);
  for (int k = 0; k < 2000; ++k) {
    const Vec x = vec({u(rng), u(rng), u(rng)});
    EXPECT_TRUE(norm_homogeneity_check(x, l(rng), s));
  }
  EXPECT_DOUBLE_EQ(anisotropic_norm(vec({-1.0, 8.0, -32.0}), s), 1.0 + 2.0 + 2.0);
}
