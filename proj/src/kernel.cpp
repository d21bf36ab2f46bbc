#include "kolmo/kernel.hpp"

#include "kolmo/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>
#include <sstream>

namespace kolmo {

namespace {

int nilpotency_index(const Mat& B) {
  const int N = static_cast<int>(B.rows());
  const double nb = std::max(1.0, B.cwiseAbs().maxCoeff());
  Mat P = B;
  for (int k = 1; k <= N; ++k) {
    if (P.cwiseAbs().maxCoeff() <= 1e-14 * std::pow(nb, k)) return k;
    P = P * B;
  }
  return 0;
}

Mat check_finite(const Mat& M) {
  if (!M.allFinite()) throw NumericalError("matrix exponential overflow");
  return M;
}

Mat series_exp(const std::vector<Mat>& pf, double t) {
  Mat E = pf[0];
  double tk = 1.0;
  for (std::size_t k = 1; k < pf.size(); ++k) {
    tk *= t;
    E += tk * pf[k];
  }
  return E;
}

Mat eigen_exp(const Mat& B, double t) {
  const Eigen::MatrixXd M = t * Eigen::MatrixXd(B);
  const Eigen::MatrixXd E = M.exp();
  return check_finite(Mat(E));
}

// Integrand e^{sB} R R^* e^{sB*} of C(t), with R the first d columns of the identity.
Mat cov_integrand(const Drift& drift, double s) {
  const Mat E = drift.exp(s);
  const int d = drift.d();
  return E.leftCols(d) * E.leftCols(d).transpose();
}

Mat gl_cov(const Drift& drift, double a, double b, int n) {
  const Rule1D r = gauss_legendre_on(n, a, b);
  Mat C = Mat::Zero(drift.N(), drift.N());
  for (int i = 0; i < n; ++i) C += r.w[static_cast<std::size_t>(i)] * cov_integrand(drift, r.x[static_cast<std::size_t>(i)]);
  return C;
}

Mat adaptive_cov(const Drift& drift, double a, double b, const Mat& whole, int depth) {
  const double m = 0.5 * (a + b);
  const Mat left = gl_cov(drift, a, m, 64), right = gl_cov(drift, m, b, 64);
  const Mat both = left + right;
  const double scale = std::max(both.cwiseAbs().maxCoeff(), 1e-300);
  if ((both - whole).cwiseAbs().maxCoeff() <= 1e-14 * scale || depth >= 24) return both;
  return adaptive_cov(drift, a, m, left, depth + 1) + adaptive_cov(drift, m, b, right, depth + 1);
}

}  // namespace

Mat expm(const Mat& B, double t) {
  if (!B.allFinite() || !std::isfinite(t)) throw NumericalError("expm: non-finite input");
  const int N = static_cast<int>(B.rows());
  if (t == 0.0) return Mat::Identity(N, N);
  const int k = nilpotency_index(B);
  if (k > 0) {
    Mat E = Mat::Identity(N, N), P = Mat::Identity(N, N);
    for (int j = 1; j < k; ++j) {
      P = P * (t * B) / j;
      E += P;
    }
    return check_finite(E);
  }
  return eigen_exp(B, t);
}

Drift::Drift(const Mat& B, int d, double rank_tol) : B_(B) {
  s_ = block_decompose(Eigen::MatrixXd(B), d, rank_tol);
  if (!s_.hoermander_ok) throw ConfigError("drift matrix fails the Kalman rank condition");
  init_powers();
}

void Drift::init_powers() {
  nil_index_ = nilpotency_index(B_);
  powers_over_factorial_.clear();
  Mat P = Mat::Identity(N(), N());
  for (int j = 0; j < nil_index_; ++j) {
    powers_over_factorial_.push_back(P);
    P = P * B_ / (j + 1);
  }
}

Mat Drift::exp(double t) const {
  if (nil_index_ > 0) return series_exp(powers_over_factorial_, t);
  if (t == 0.0) return Mat::Identity(N(), N());
  return eigen_exp(B_, t);
}

Drift Drift::reduced() const {
  Mat B0 = Mat::Zero(N(), N());
  for (int j = 1; j <= s_.r(); ++j) {
    const int row0 = s_.cumdims[j - 1], col0 = j >= 2 ? s_.cumdims[j - 2] : 0;
    B0.block(row0, col0, s_.dims[j], s_.dims[j - 1]) = B_.block(row0, col0, s_.dims[j], s_.dims[j - 1]);
  }
  Drift out;
  out.B_ = B0;
  out.s_ = s_;
  out.init_powers();
  return out;
}

Mat covariance_const(double delta, double dt, const Drift& drift) {
  if (!(dt > 0.0)) throw ConfigError("covariance_const: dt must be positive");
  if (!(delta > 0.0)) throw ConfigError("covariance_const: delta must be positive");
  Mat C;
  if (drift.nilpotent()) {
    // Polynomial integrand of degree <= 2(N-1): exact with N+1 Gauss-Legendre nodes.
    C = gl_cov(drift, 0.0, dt, drift.N() + 1);
  } else {
    C = adaptive_cov(drift, 0.0, dt, gl_cov(drift, 0.0, dt, 64), 0);
  }
  C = 0.5 * (C + C.transpose()).eval();
  return delta * C;
}

double gauss_density(const Mat& C, const Vec& z) {
  Eigen::LLT<Mat> llt(C);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance not positive definite");
  const Mat& L = llt.matrixL().toDenseMatrix();
  double logdet = 0.0;
  for (int i = 0; i < C.rows(); ++i) {
    if (!(L(i, i) > 0.0)) throw NumericalError("covariance not positive definite");
    logdet += 2.0 * std::log(L(i, i));
  }
  const Vec w = llt.matrixL().solve(z);
  const double N = static_cast<double>(C.rows());
  return std::exp(-0.5 * w.squaredNorm() - 0.5 * logdet - 0.5 * N * std::log(2.0 * std::numbers::pi));
}

double gamma_delta(double delta, double t, const Vec& x, double T, const Vec& y, const Drift& drift, double min_dt) {
  const double h = T - t;
  if (!(h >= min_dt)) throw ConfigError("gamma_delta: need T - t >= minimum time step");
  const Mat C = covariance_const(delta, h, drift);
  const Vec z = y - drift.exp(h) * x;
  return gauss_density(C, z);
}

PanelTable::PanelTable(const Drift& drift, double h, int panels) : drift_(drift), h_(h) {
  if (!(h > 0.0)) throw ConfigError("panel table: interval length must be positive");
  if (panels < 1) throw ConfigError("panel table: need at least one panel");
  const int d = drift.d();
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) pair_.emplace_back(i, j);
  gl_nodes_ = drift.nilpotent() ? std::max(drift.N(), 1) : 8;
  lo_.resize(static_cast<std::size_t>(panels));
  hi_.resize(static_cast<std::size_t>(panels));
  back_.resize(static_cast<std::size_t>(panels));
  mom_.resize(static_cast<std::size_t>(panels) * pair_.size());
  for (int k = 0; k < panels; ++k) {
    lo_[static_cast<std::size_t>(k)] = h * k / panels;
    hi_[static_cast<std::size_t>(k)] = h * (k + 1) / panels;
    back_[static_cast<std::size_t>(k)] = drift.exp(-mid(k));
    for (int p = 0; p < pairs(); ++p) mom_[static_cast<std::size_t>(k * pairs() + p)] = moment_on(lo(k), hi(k), p);
  }
  exp_hB_ = drift.exp(h);
}

Mat PanelTable::moment_on(double a, double b, int p) const {
  const auto [i, j] = pair(p);
  const Rule1D r = gauss_legendre_on(gl_nodes_, a, b);
  const int N = drift_.N();
  Mat M = Mat::Zero(N, N);
  for (int q = 0; q < r.size(); ++q) {
    const Mat E = drift_.exp(r.x[static_cast<std::size_t>(q)]);
    const double w = r.w[static_cast<std::size_t>(q)];
    if (i == j) {
      M.noalias() += w * E.col(i) * E.col(i).transpose();
    } else {
      M.noalias() += w * (E.col(i) * E.col(j).transpose() + E.col(j) * E.col(i).transpose());
    }
  }
  return M;
}

namespace {

void coeff_pairs(const CoefficientField& c, const PanelTable& tab, double tau, const Vec& x, double* out) {
  for (int p = 0; p < tab.pairs(); ++p) {
    const auto [i, j] = tab.pair(p);
    out[p] = c.a2_entry(i, j, tau, x);
    if (!std::isfinite(out[p])) throw NumericalError("non-finite coefficient value");
  }
}

double max_diff(const double* u, const double* v, int n) {
  double m = 0.0;
  for (int p = 0; p < n; ++p) m = std::max(m, std::abs(u[p] - v[p]));
  return m;
}

}  // namespace

Mat covariance_frozen_table(const CoefficientField& c, const PanelTable& tab, double T, const Vec& v_T) {
  const int n = tab.panels(), np = tab.pairs(), N = tab.drift().N();
  std::vector<double> vals(static_cast<std::size_t>(n * np));
  for (int k = 0; k < n; ++k) {
    const Vec x = tab.back_flow(k) * v_T;
    coeff_pairs(c, tab, T - tab.mid(k), x, &vals[static_cast<std::size_t>(k * np)]);
  }
  Mat C = Mat::Zero(N, N);
  for (int k = 0; k < n; ++k)
    for (int p = 0; p < np; ++p) C.noalias() += vals[static_cast<std::size_t>(k * np + p)] * tab.moment(k, p);

  if (c.a2_may_jump() && n >= 2) {
    std::vector<double> jump(static_cast<std::size_t>(n - 1));
    double scale = 0.0;
    for (double v : vals) scale = std::max(scale, std::abs(v));
    for (int k = 0; k + 1 < n; ++k)
      jump[static_cast<std::size_t>(k)] =
          max_diff(&vals[static_cast<std::size_t>(k * np)], &vals[static_cast<std::size_t>((k + 1) * np)], np);
    std::vector<double> left(static_cast<std::size_t>(np)), right(static_cast<std::size_t>(np)),
        mid(static_cast<std::size_t>(np));
    for (int k = 0; k + 1 < n; ++k) {
      const double dk = jump[static_cast<std::size_t>(k)];
      const double nb = std::max(k > 0 ? jump[static_cast<std::size_t>(k - 1)] : 0.0,
                                 k + 2 < n ? jump[static_cast<std::size_t>(k + 1)] : 0.0);
      if (!(dk > 1e-12 * std::max(scale, 1.0) && dk > 10.0 * nb)) continue;
      // Bisect between the two midpoints for the point where the coefficient switches.
      double a = tab.mid(k), b = tab.mid(k + 1);
      const double* va = &vals[static_cast<std::size_t>(k * np)];
      const double* vb = &vals[static_cast<std::size_t>((k + 1) * np)];
      for (int it = 0; it < 60 && b - a > 1e-15 * tab.h(); ++it) {
        const double m = 0.5 * (a + b);
        const Vec x = tab.drift().exp(-m) * v_T;
        coeff_pairs(c, tab, T - m, x, mid.data());
        if (max_diff(mid.data(), va, np) <= max_diff(mid.data(), vb, np))
          a = m;
        else
          b = m;
      }
      const double sj = 0.5 * (a + b);
      const int q = sj < tab.hi(k) ? k : k + 1;
      const double lo = tab.lo(q), hi = tab.hi(q);
      if (!(sj > lo && sj < hi)) continue;
      for (int p = 0; p < np; ++p) C.noalias() -= vals[static_cast<std::size_t>(q * np + p)] * tab.moment(q, p);
      for (int side = 0; side < 2; ++side) {
        const double s0 = side == 0 ? lo : sj, s1 = side == 0 ? sj : hi;
        const double sm = 0.5 * (s0 + s1);
        const Vec x = tab.drift().exp(-sm) * v_T;
        coeff_pairs(c, tab, T - sm, x, side == 0 ? left.data() : right.data());
        const double* v = side == 0 ? left.data() : right.data();
        for (int p = 0; p < np; ++p) C.noalias() += v[p] * tab.moment_on(s0, s1, p);
      }
    }
  }
  return 0.5 * (C + C.transpose());
}

FrozenCovariance covariance_frozen(const CoefficientField& c, const Drift& drift, double s_freeze, const Vec& v,
                                   double t, double T, int panels) {
  if (!(T > t)) throw ConfigError("covariance_frozen: need t < T");
  if (panels < 2) throw ConfigError("covariance_frozen: need at least 2 panels");
  const double h = T - t;
  const Vec v_T = drift.exp(T - s_freeze) * v;
  FrozenCovariance out;
  const PanelTable fine(drift, h, panels);
  out.C = covariance_frozen_table(c, fine, T, v_T);
  if (c.a2_constant()) return out;
  const PanelTable coarse(drift, h, panels / 2);
  const Mat Cc = covariance_frozen_table(c, coarse, T, v_T);
  out.error_estimate = (out.C - Cc).cwiseAbs().maxCoeff() / 3.0;
  return out;
}

FrozenKernel::FrozenKernel(const Mat& C, const Mat& E) : C_(C), E_(E) {
  llt_.compute(C_);
  if (llt_.info() != Eigen::Success) throw NumericalError("covariance not positive definite");
  const Mat L = llt_.matrixL();
  logdet_ = 0.0;
  for (int i = 0; i < C.rows(); ++i) {
    if (!(L(i, i) > 0.0) || !std::isfinite(L(i, i))) throw NumericalError("covariance not positive definite");
    logdet_ += 2.0 * std::log(L(i, i));
  }
  // K = E^* C^{-1} E = (L^{-1} E)^* (L^{-1} E)
  const Mat LiE = llt_.matrixL().solve(E_);
  K_ = LiE.transpose() * LiE;
}

Mat FrozenKernel::H() const {
  const Mat Ei = E_.inverse();
  return Ei * C_ * Ei.transpose();
}

FrozenKernel::Point FrozenKernel::eval(const Vec& x, const Vec& y) const {
  const Vec z = y - E_ * x;
  const Vec w = llt_.solve(z);
  const double quad = z.dot(w);
  Point p;
  p.value = std::exp(-0.5 * quad - 0.5 * logdet_ - 0.5 * N() * std::log(2.0 * std::numbers::pi));
  p.v = E_.transpose() * w;
  return p;
}

namespace {

// d^S Gamma / Gamma for multiset S: first index either stands alone (factor v) or pairs with a later one (factor -K).
double hermite_factor(const Vec& v, const Mat& K, const int* idx, int n) {
  if (n == 0) return 1.0;
  if (n == 1) return v(idx[0]);
  const int i0 = idx[0];
  double acc = v(i0) * hermite_factor(v, K, idx + 1, n - 1);
  int rest[4];
  for (int j = 1; j < n; ++j) {
    int m = 0;
    for (int k = 1; k < n; ++k)
      if (k != j) rest[m++] = idx[k];
    acc -= K(i0, idx[j]) * hermite_factor(v, K, rest, n - 2);
  }
  return acc;
}

}  // namespace

double FrozenKernel::deriv(const Point& p, std::span<const int> idx) const {
  if (idx.size() > 4) throw ConfigError("derivative order above 4 is not supported");
  int buf[4];
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= N()) throw ConfigError("derivative index out of range");
    buf[k] = idx[k];
  }
  return p.value * hermite_factor(p.v, K_, buf, static_cast<int>(idx.size()));
}

double gamma_frozen_derivs(const FrozenKernel& k, const BlockStructure& s, const Vec& x, const Vec& y,
                           std::span<const int> nu) {
  if (b_length(nu, s) > 4) throw ConfigError("derivative B-length above 4 is not supported");
  std::vector<int> idx;
  for (int i = 0; i < s.N; ++i)
    for (int r = 0; r < nu[static_cast<std::size_t>(i)]; ++r) idx.push_back(i);
  const auto p = k.eval(x, y);
  return k.deriv(p, idx);
}

double min_generalized_eigenvalue(const Mat& A, const Mat& B) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(A), Eigen::MatrixXd(B),
                                                               Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("generalized eigenproblem failed");
  return es.eigenvalues().minCoeff();
}

}  // namespace kolmo
