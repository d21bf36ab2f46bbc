#include "kolmo/quadrature.hpp"

#include "kolmo/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace kolmo {

namespace {

// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights from first eigenvector components.
Rule1D golub_welsch(int n, const Eigen::VectorXd& offdiag, double mu0) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericalError("quadrature eigen-solver failed");
  Rule1D r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    r.x[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    r.w[i] = mu0 * v0 * v0;
  }
  return r;
}

// Newton polish on the Legendre polynomial, then exact symmetric weights.
void polish_legendre(Rule1D& r) {
  const int n = r.size();
  for (int i = 0; i < n; ++i) {
    double x = r.x[i];
    double dp = 1.0;
    for (int it = 0; it < 4; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 0 ? 1.0 : (n == 1 ? x : p1);
      const double pnm1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.x[i] = x;
    r.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  for (int i = 0; i < n / 2; ++i) {
    const double xs = 0.5 * (r.x[n - 1 - i] - r.x[i]);
    const double ws = 0.5 * (r.w[n - 1 - i] + r.w[i]);
    r.x[i] = -xs;
    r.x[n - 1 - i] = xs;
    r.w[i] = r.w[n - 1 - i] = ws;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
}

Rule1D build_gl(int n) {
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  Rule1D r = golub_welsch(n, off, 2.0);
  polish_legendre(r);
  return r;
}

Rule1D build_gh(int n) {
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(static_cast<double>(k));
  Rule1D r = golub_welsch(n, off, 1.0);
  for (int i = 0; i < n / 2; ++i) {
    const double xs = 0.5 * (r.x[n - 1 - i] - r.x[i]);
    const double ws = 0.5 * (r.w[n - 1 - i] + r.w[i]);
    r.x[i] = -xs;
    r.x[n - 1 - i] = xs;
    r.w[i] = r.w[n - 1 - i] = ws;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  double s = 0.0;
  for (double w : r.w) s += w;
  for (double& w : r.w) w /= s;
  return r;
}

const Rule1D& cached(int n, bool legendre) {
  static std::mutex m;
  static std::map<std::pair<bool, int>, std::unique_ptr<Rule1D>> cache;
  if (n < 1 || n > 512) throw ConfigError("quadrature order out of range [1, 512]");
  std::lock_guard<std::mutex> lock(m);
  auto& slot = cache[{legendre, n}];
  if (!slot) slot = std::make_unique<Rule1D>(legendre ? build_gl(n) : build_gh(n));
  return *slot;
}

}  // namespace

const Rule1D& gauss_legendre(int n) { return cached(n, true); }
const Rule1D& gauss_hermite(int n) { return cached(n, false); }

Rule1D gauss_legendre_on(int n, double a, double b) {
  const Rule1D& g = gauss_legendre(n);
  Rule1D r;
  r.x.resize(n);
  r.w.resize(n);
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    r.x[i] = c + h * g.x[i];
    r.w[i] = h * g.w[i];
  }
  return r;
}

double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n <= 8) {
    double s = 0.0;
    for (double e : v) s += e;
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

std::vector<double> barycentric_weights(std::span<const double> nodes) {
  const std::size_t n = nodes.size();
  std::vector<double> w(n, 1.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      if (k != j) w[j] /= (nodes[j] - nodes[k]);
  return w;
}

void barycentric_basis(std::span<const double> nodes, std::span<const double> bw, double x, std::span<double> out) {
  const std::size_t n = nodes.size();
  for (std::size_t j = 0; j < n; ++j) {
    if (x == nodes[j]) {
      std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
      out[j] = 1.0;
      return;
    }
  }
  double denom = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = bw[j] / (x - nodes[j]);
    denom += out[j];
  }
  for (std::size_t j = 0; j < n; ++j) out[j] /= denom;
}

double EndpointMap::operator()(double u) const {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double a = std::pow(u, p), b = std::pow(1.0 - u, p);
  return a / (a + b);
}

double EndpointMap::deriv(double u) const {
  if (u <= 0.0 || u >= 1.0) return p == 1.0 ? 1.0 : 0.0;
  const double a = std::pow(u, p), b = std::pow(1.0 - u, p);
  const double den = (a + b) * (a + b);
  return p * std::pow(u, p - 1.0) * std::pow(1.0 - u, p - 1.0) / den;
}

double EndpointMap::inverse(double s) const {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double r = std::pow(s / (1.0 - s), 1.0 / p);
  return r / (1.0 + r);
}

double endpoint_exponent(double alpha) {
  if (!(alpha > 0.0)) return 4.0;
  return std::clamp(2.0 / alpha, 1.0, 4.0);
}

bool next_multi_index(std::vector<int>& idx, int n) {
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (++idx[k] < n) return true;
    idx[k] = 0;
  }
  return false;
}

double halton(std::uint64_t i, int dim) {
  static constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  if (dim < 0 || dim >= 12) throw ConfigError("halton: dimension out of range");
  const auto base = static_cast<std::uint64_t>(kPrimes[dim]);
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

}  // namespace kolmo
