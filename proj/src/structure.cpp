#include "kolmo/structure.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace kolmo {

namespace {

int numerical_rank(const Eigen::MatrixXd& M, double tol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cut = tol * sv(0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) ++rank;
  return rank;
}

void check_shape(const Eigen::MatrixXd& B, int d) {
  if (B.rows() != B.cols() || B.rows() == 0)
    throw ConfigError("drift matrix B must be square and non-empty");
  if (B.rows() > kMaxDim) {
    std::ostringstream os;
    os << "dimension N=" << B.rows() << " exceeds supported maximum " << kMaxDim;
    throw ConfigError(os.str());
  }
  if (d < 1 || d > B.rows()) throw ConfigError("d out of range: need 1 <= d <= N");
}

// Kalman blocks [R, BR, ..., B^k R] for k = 0..N-1.
std::vector<Eigen::MatrixXd> kalman_prefixes(const Eigen::MatrixXd& B, int d) {
  const int N = static_cast<int>(B.rows());
  std::vector<Eigen::MatrixXd> out;
  Eigen::MatrixXd power_R = Eigen::MatrixXd::Identity(N, N).leftCols(d);
  Eigen::MatrixXd K(N, 0);
  for (int k = 0; k < N; ++k) {
    Eigen::MatrixXd next(N, K.cols() + d);
    next << K, power_R;
    K = std::move(next);
    out.push_back(K);
    power_R = B * power_R;
  }
  return out;
}

}  // namespace

int BlockStructure::block_of(int i) const {
  for (std::size_t j = 0; j < cumdims.size(); ++j)
    if (i < cumdims[j]) return static_cast<int>(j);
  return static_cast<int>(cumdims.size()) - 1;
}

KalmanResult kalman_rank(const Eigen::MatrixXd& B, int d, double tol) {
  check_shape(B, d);
  if (!(tol > 0.0)) throw ConfigError("rank tolerance must be positive");
  const auto prefixes = kalman_prefixes(B, d);
  KalmanResult res;
  res.rank = numerical_rank(prefixes.back(), tol);
  res.ok = res.rank == B.rows();
  return res;
}

BlockStructure block_decompose(const Eigen::MatrixXd& B, int d, double tol) {
  check_shape(B, d);
  const int N = static_cast<int>(B.rows());
  const auto prefixes = kalman_prefixes(B, d);

  BlockStructure s;
  s.N = N;
  s.d = d;
  int prev_rank = 0;
  for (const auto& K : prefixes) {
    const int rk = numerical_rank(K, tol);
    if (rk == prev_rank) break;
    s.dims.push_back(rk - prev_rank);
    prev_rank = rk;
    if (rk == N) break;
  }
  int acc = 0;
  for (int dj : s.dims) {
    acc += dj;
    s.cumdims.push_back(acc);
  }
  for (std::size_t j = 0; j < s.dims.size(); ++j) s.Q += static_cast<int>(2 * j + 1) * s.dims[j];
  s.hoermander_ok = (acc == N);
  if (!s.hoermander_ok) return s;

  for (std::size_t j = 1; j < s.dims.size(); ++j)
    if (s.dims[j] > s.dims[j - 1]) throw ConfigError("not in canonical block form: block chain is not monotone");
  if (s.dims[0] != d) throw ConfigError("not in canonical block form: first block differs from d");

  // Zero blocks below the first sub-diagonal, full-rank sub-diagonal blocks B_j.
  const double scale = std::max(1.0, B.cwiseAbs().maxCoeff());
  const int r = s.r();
  for (int h = 0; h <= r; ++h) {
    const int row0 = h == 0 ? 0 : s.cumdims[h - 1];
    for (int k = 0; k <= r; ++k) {
      const int col0 = k == 0 ? 0 : s.cumdims[k - 1];
      const auto blk = B.block(row0, col0, s.dims[h], s.dims[k]);
      if (h > k + 1 && blk.cwiseAbs().maxCoeff() > tol * scale) {
        std::ostringstream os;
        os << "not in canonical block form: block (" << h << "," << k << ") must vanish";
        throw ConfigError(os.str());
      }
      if (h == k + 1 && numerical_rank(blk, tol) != s.dims[h]) {
        std::ostringstream os;
        os << "not in canonical block form: sub-diagonal block B_" << h << " is rank deficient";
        throw ConfigError(os.str());
      }
    }
  }
  return s;
}

double anisotropic_norm(std::span<const double> x, const BlockStructure& s) {
  double sum = 0.0;
  int j = 0;
  for (int i = 0; i < static_cast<int>(x.size()); ++i) {
    while (j + 1 < static_cast<int>(s.cumdims.size()) && i >= s.cumdims[j]) ++j;
    const double e = 1.0 / (2.0 * j + 1.0);
    sum += j == 0 ? std::abs(x[i]) : std::pow(std::abs(x[i]), e);
  }
  return sum;
}

double anisotropic_norm(const Vec& x, const BlockStructure& s) {
  return anisotropic_norm(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), s);
}

Mat dilation(double lambda, const BlockStructure& s) {
  Mat D = Mat::Zero(s.N, s.N);
  for (int i = 0; i < s.N; ++i) D(i, i) = std::pow(lambda, 2 * s.block_of(i) + 1);
  return D;
}

int b_length(std::span<const int> nu, const BlockStructure& s) {
  if (static_cast<int>(nu.size()) != s.N) throw ConfigError("multi-index length must equal N");
  int len = 0;
  for (int i = 0; i < s.N; ++i) {
    if (nu[i] < 0) throw ConfigError("multi-index entries must be non-negative");
    len += (2 * s.block_of(i) + 1) * nu[i];
  }
  return len;
}

bool norm_homogeneity_check(const Vec& x, double lambda, const BlockStructure& s, double rel_tol) {
  const Vec dx = dilation(lambda, s) * x;
  const double lhs = anisotropic_norm(dx, s);
  const double rhs = lambda * anisotropic_norm(x, s);
  return std::abs(lhs - rhs) <= rel_tol * std::max(std::abs(rhs), 1e-300) || lhs == rhs;
}

}  // namespace kolmo
