#include "kolmo/mc_oracle.hpp"

#include "kolmo/parallel.hpp"
#include "kolmo/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace kolmo {

namespace {

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct ChunkStats {
  std::vector<long> counts;
  long outside = 0;
  long n = 0;
  Eigen::VectorXd s1;
  Eigen::MatrixXd s2, s4;
};

}  // namespace

McResult mc_simulate(const CoefficientField& c, const Drift& drift, double t, const Vec& x, double T,
                     const McConfig& cfg) {
  if (cfg.paths < 2) throw ConfigError("mc: paths must be >= 2");
  if (cfg.steps < 1) throw ConfigError("mc: steps must be >= 1");
  if (cfg.bins < 1 || cfg.bins > 1000) throw ConfigError("mc: bins must be in [1, 1000]");
  if (cfg.chunk < 1) throw ConfigError("mc: chunk must be >= 1");
  if (!(cfg.range_sigmas > 0.0)) throw ConfigError("mc: range_sigmas must be positive");
  if (!(T > t)) throw ConfigError("mc: need t < T");
  if (!c.a1_zero()) throw ConfigError("mc: first-order coefficients must vanish");
  if (!c.a0_constant()) throw ConfigError("mc: zeroth-order coefficient must be constant");
  const int N = drift.N(), d = drift.d();
  if (x.size() != N) throw ConfigError("mc: x has the wrong dimension");
  long total_bins = 1;
  for (int i = 0; i < N; ++i) {
    total_bins *= cfg.bins;
    if (total_bins > 50000000) throw ConfigError("mc: too many histogram bins");
  }

  const double h = T - t;
  const double dt = h / cfg.steps;
  const Mat E = drift.exp(dt);

  // Joint covariance of G_l = int_0^dt e^{uB} e_l dW_u (one Brownian component), l < d.
  const int J = N * d;
  Eigen::MatrixXd Sig = Eigen::MatrixXd::Zero(J, J);
  const Rule1D gl = gauss_legendre_on(20, 0.0, dt);
  for (std::size_t q = 0; q < gl.x.size(); ++q) {
    const Mat Eu = drift.exp(gl.x[q]);
    Eigen::MatrixXd cols(N, d);
    for (int l = 0; l < d; ++l) cols.col(l) = Eu.col(l);
    const Eigen::Map<const Eigen::VectorXd> v(cols.data(), J);
    Sig += gl.w[q] * v * v.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Sig + Sig.transpose()));
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd Lj = es.eigenvectors() * ev.asDiagonal();

  // Histogram box from the covariance frozen at the mean.
  const Vec mref = drift.exp(h) * x;
  const PanelTable tab(drift, h, c.a2_constant() ? 1 : 64);
  const Mat Cref = covariance_frozen_table(c, tab, T, mref);
  McResult res;
  res.paths = cfg.paths;
  res.steps = cfg.steps;
  res.bins = cfg.bins;
  res.weight = std::exp(c.a0_constant_value() * h);
  res.lo.resize(N);
  res.width.resize(N);
  for (int i = 0; i < N; ++i) {
    const double half = cfg.range_sigmas * std::sqrt(Cref(i, i));
    res.lo(i) = mref(i) - half;
    res.width(i) = 2.0 * half / cfg.bins;
  }

  const bool const_a2 = c.a2_constant();
  Mat sigma_const;
  if (const_a2) {
    Eigen::LLT<Mat> llt(c.a2(t, x));
    if (llt.info() != Eigen::Success) throw NumericalError("mc: a2 is not positive definite");
    sigma_const = llt.matrixL();
  }

  const long nchunks = (cfg.paths + cfg.chunk - 1) / cfg.chunk;
  std::vector<ChunkStats> stats(static_cast<std::size_t>(nchunks));
  parallel_for(stats.size(), [&](std::size_t ci) {
    ChunkStats& st = stats[ci];
    st.counts.assign(static_cast<std::size_t>(total_bins), 0);
    st.s1 = Eigen::VectorXd::Zero(N);
    st.s2 = Eigen::MatrixXd::Zero(N, N);
    st.s4 = Eigen::MatrixXd::Zero(N, N);
    const long first = static_cast<long>(ci) * cfg.chunk;
    const long n = std::min(cfg.chunk, cfg.paths - first);
    st.n = n;
    std::mt19937_64 rng(splitmix(cfg.seed ^ splitmix(static_cast<std::uint64_t>(ci) + 1)));
    std::normal_distribution<double> normal;
    Eigen::VectorXd xi(J), g(J);
    Vec X(N), Z(N);
    Mat sigma = sigma_const;
    for (long pth = 0; pth < n; ++pth) {
      X = x;
      for (int k = 0; k < cfg.steps; ++k) {
        if (!const_a2) {
          const Mat A = c.a2(t + k * dt, X);
          Eigen::LLT<Mat> llt(A);
          if (llt.info() != Eigen::Success) throw NumericalError("mc: sigma factorization failed (a2 not positive definite)");
          sigma = llt.matrixL();
        }
        Z.setZero();
        for (int b = 0; b < d; ++b) {
          for (int j = 0; j < J; ++j) xi(j) = normal(rng);
          g.noalias() = Lj * xi;
          for (int l = 0; l < d; ++l) {
            const double s = sigma(l, b);
            if (s != 0.0) Z += s * g.segment(l * N, N);
          }
        }
        X = (E * X + Z).eval();
      }
      long idx = 0, stride = 1;
      bool inside = true;
      for (int i = 0; i < N; ++i) {
        const double u = (X(i) - res.lo(i)) / res.width(i);
        if (!(u >= 0.0 && u < cfg.bins)) {
          inside = false;
          break;
        }
        idx += static_cast<long>(u) * stride;
        stride *= cfg.bins;
      }
      if (inside)
        ++st.counts[static_cast<std::size_t>(idx)];
      else
        ++st.outside;
      const Eigen::VectorXd yv = (X - mref).cast<double>();
      st.s1 += yv;
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          const double p = yv(i) * yv(j);
          st.s2(i, j) += p;
          st.s4(i, j) += p * p;
        }
    }
  });

  std::vector<long> counts(static_cast<std::size_t>(total_bins), 0);
  long outside = 0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(N);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(N, N), s4 = Eigen::MatrixXd::Zero(N, N);
  for (const ChunkStats& st : stats) {
    for (std::size_t b = 0; b < counts.size(); ++b) counts[b] += st.counts[b];
    outside += st.outside;
    s1 += st.s1;
    s2 += st.s2;
    s4 += st.s4;
  }
  const double n = static_cast<double>(cfg.paths);
  const Eigen::VectorXd m = s1 / n;
  const Eigen::MatrixXd raw2 = s2 / n;
  res.mean = mref + m;
  res.cov = raw2 - m * m.transpose();
  res.cov *= n / (n - 1.0);
  res.mean_se.resize(N);
  res.cov_se.resize(N, N);
  for (int i = 0; i < N; ++i) res.mean_se(i) = std::sqrt(std::max(res.cov(i, i), 0.0) / n);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) res.cov_se(i, j) = std::sqrt(std::max(s4(i, j) / n - raw2(i, j) * raw2(i, j), 0.0) / n);
  res.mass.resize(counts.size());
  for (std::size_t b = 0; b < counts.size(); ++b) res.mass[b] = res.weight * static_cast<double>(counts[b]) / n;
  res.outside = res.weight * static_cast<double>(outside) / n;
  return res;
}

Vec mc_bin_center(const McResult& mc, std::size_t b) {
  const int N = static_cast<int>(mc.lo.size());
  Vec c(N);
  for (int i = 0; i < N; ++i) {
    const auto k = b % static_cast<std::size_t>(mc.bins);
    b /= static_cast<std::size_t>(mc.bins);
    c(i) = mc.lo(i) + (static_cast<double>(k) + 0.5) * mc.width(i);
  }
  return c;
}

namespace {

template <class F>
double box_integral(const Vec& lo, const Vec& hi, int sub, F&& f) {
  const int N = static_cast<int>(lo.size());
  const Rule1D& gl = gauss_legendre(sub);
  std::vector<int> idx(static_cast<std::size_t>(N), 0);
  double vol = 1.0;
  for (int i = 0; i < N; ++i) vol *= 0.5 * (hi(i) - lo(i));
  std::vector<double> parts;
  do {
    Vec y(N);
    double w = vol;
    for (int i = 0; i < N; ++i) {
      const auto j = static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]);
      y(i) = 0.5 * (lo(i) + hi(i)) + 0.5 * (hi(i) - lo(i)) * gl.x[j];
      w *= gl.w[j];
    }
    parts.push_back(w * f(y));
  } while (next_multi_index(idx, sub));
  return pairwise_sum(parts);
}

}  // namespace

BinMassFn bin_mass_quadrature(const DensityEvaluator& p, double t, const Vec& x, double T, int sub) {
  if (sub < 1) throw ConfigError("bin quadrature: sub must be >= 1");
  return [&p, t, x, T, sub](const Vec& lo, const Vec& hi) {
    return box_integral(lo, hi, sub, [&](const Vec& y) { return p.p(t, x, T, y, kWantValue).value; });
  };
}

BinMassFn bin_mass_levi(const LeviEvaluator& p, double t, const Vec& x, double T, int sub, double phi_threshold) {
  if (sub < 1) throw ConfigError("bin quadrature: sub must be >= 1");
  return [&p, t, x, T, sub, phi_threshold](const Vec& lo, const Vec& hi) {
    const CoefficientField& c = p.coeffs();
    const QuadratureConfig& q = p.config();
    const double pm = box_integral(lo, hi, sub, [&](const Vec& y) {
      return parametrix_eval(c, p.drift(), t, x, T, y, kWantValue, q.time_panels, q.min_dt).value;
    });
    if (p.collapses() || pm < phi_threshold) return pm;
    const Vec centre = 0.5 * (lo + hi);
    double vol = 1.0;
    for (int i = 0; i < lo.size(); ++i) vol *= hi(i) - lo(i);
    return pm + vol * p.solution(T, centre)->big_phi(t, x, kWantValue).value;
  };
}

McComparison mc_compare(const McResult& mc, const BinMassFn& bin_mass, double expected_total) {
  McComparison out;
  out.p_mass.assign(mc.mass.size(), 0.0);
  parallel_for(mc.mass.size(), [&](std::size_t b) {
    const Vec c = mc_bin_center(mc, b);
    out.p_mass[b] = bin_mass(c - 0.5 * mc.width, c + 0.5 * mc.width);
  });
  std::vector<double> diffs(mc.mass.size());
  for (std::size_t b = 0; b < diffs.size(); ++b) diffs[b] = std::abs(mc.mass[b] - out.p_mass[b]);
  out.p_inside = pairwise_sum(out.p_mass);
  out.l1 = pairwise_sum(diffs) + std::abs(mc.outside - (expected_total - out.p_inside));
  return out;
}

}  // namespace kolmo
