#include "kolmo/parametrix.hpp"

#include <cstdlib>
#include <list>
#include <map>
#include <mutex>

namespace kolmo {

namespace {

// LRU memo of frozen kernels keyed by the full numeric input.
class KernelCache {
 public:
  KernelCache() {
    std::size_t mb = 64;
    if (const char* env = std::getenv("KOLMO_CACHE_MB")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end != env && v >= 0) mb = static_cast<std::size_t>(v);
    }
    budget_ = mb * 1024 * 1024;
  }

  template <class Build>
  std::shared_ptr<const FrozenKernel> get(const std::vector<double>& key, Build&& build) {
    {
      std::lock_guard<std::mutex> lock(m_);
      auto it = map_.find(key);
      if (it != map_.end()) {
        lru_.splice(lru_.begin(), lru_, it->second.pos);
        ++hits_;
        return it->second.value;
      }
      ++misses_;
    }
    auto value = std::make_shared<const FrozenKernel>(build());
    if (budget_ == 0) return value;
    std::lock_guard<std::mutex> lock(m_);
    if (map_.count(key)) return map_[key].value;
    lru_.push_front(key);
    map_[key] = Entry{value, lru_.begin()};
    used_ += entry_bytes(key);
    while (used_ > budget_ && !lru_.empty()) {
      const auto& victim = lru_.back();
      used_ -= entry_bytes(victim);
      map_.erase(victim);
      lru_.pop_back();
    }
    return value;
  }

  CacheStats stats() {
    std::lock_guard<std::mutex> lock(m_);
    return CacheStats{hits_, misses_, map_.size(), budget_};
  }

  void clear() {
    std::lock_guard<std::mutex> lock(m_);
    map_.clear();
    lru_.clear();
    used_ = 0;
  }

 private:
  static std::size_t entry_bytes(const std::vector<double>& key) {
    return sizeof(FrozenKernel) + 2 * key.size() * sizeof(double) + 128;
  }
  struct Entry {
    std::shared_ptr<const FrozenKernel> value;
    std::list<std::vector<double>>::iterator pos;
  };
  std::mutex m_;
  std::map<std::vector<double>, Entry> map_;
  std::list<std::vector<double>> lru_;
  std::size_t budget_ = 0, used_ = 0, hits_ = 0, misses_ = 0;
};

KernelCache& cache() {
  static KernelCache c;
  return c;
}

}  // namespace

std::shared_ptr<const FrozenKernel> parametrix_kernel(const CoefficientField& c, const Drift& drift, double t,
                                                      double T, const Vec& y, int panels, double min_dt) {
  const double h = T - t;
  if (!(h >= min_dt)) throw ConfigError("parametrix: T - t below the minimum time step");
  std::vector<double> key;
  key.reserve(static_cast<std::size_t>(4 + y.size() + drift.B().size()));
  key.push_back(static_cast<double>(c.id()));
  key.push_back(panels);
  key.push_back(t);
  key.push_back(T);
  for (int i = 0; i < y.size(); ++i) key.push_back(y(i));
  for (int i = 0; i < drift.B().size(); ++i) key.push_back(drift.B().data()[i]);
  return cache().get(key, [&] {
    // Constant coefficients: one panel already gives the exact integral.
    const PanelTable tab(drift, h, c.a2_constant() ? 1 : panels);
    const Mat C = covariance_frozen_table(c, tab, T, y);
    return FrozenKernel(C, tab.exp_hB());
  });
}

ParametrixEval eval_kernel(const FrozenKernel& k, const BlockStructure& s, const Vec& x, const Vec& y, int want) {
  const auto pt = k.eval(x, y);
  ParametrixEval e;
  e.value = pt.value;
  const int d = s.d;
  if (want & (kWantGrad | kWantHess | kWantExtended)) {
    e.grad = pt.v.head(d) * pt.value;
  }
  if (want & kWantHess) {
    e.hess.resize(d, d);
    const Mat& K = k.K();
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) e.hess(i, j) = e.hess(j, i) = (pt.v(i) * pt.v(j) - K(i, j)) * pt.value;
  }
  if (want & kWantExtended) {
    const int n = std::min(s.N, d + s.first_degenerate_dim());
    e.extended_grad = pt.v.head(n) * pt.value;
  }
  return e;
}

ParametrixEval parametrix_eval(const CoefficientField& c, const Drift& drift, double t, const Vec& x, double T,
                               const Vec& y, int want, int panels, double min_dt) {
  const auto k = parametrix_kernel(c, drift, t, T, y, panels, min_dt);
  return eval_kernel(*k, drift.structure(), x, y, want);
}

double frozen_apply(const CoefficientField& c, const Drift& drift, double s_freeze, const Vec& v, double t,
                    const ParametrixEval& e) {
  if (e.hess.rows() != c.d()) throw ConfigError("frozen_apply: evaluation carries no Hessian");
  const Vec z = drift.exp(t - s_freeze) * v;
  const Mat A = c.a2(t, z);
  return 0.5 * (A.cwiseProduct(e.hess)).sum();
}

double mismatch_from_eval(const CoefficientField& c, const Drift& drift, double t, const Vec& x, double T,
                          const Vec& y, const ParametrixEval& e) {
  const Vec z = drift.exp(t - T) * y;
  const Mat D = c.a2(t, x) - c.a2(t, z);
  double r = 0.5 * (D.cwiseProduct(e.hess)).sum();
  if (!c.a1_zero()) r += c.a1(t, x).dot(e.grad);
  r += c.a0(t, x) * e.value;
  return r;
}

double parametrix_mismatch(const CoefficientField& c, const Drift& drift, double t, const Vec& x, double T,
                           const Vec& y, int panels, double min_dt) {
  const auto e = parametrix_eval(c, drift, t, x, T, y, kWantGrad | kWantHess, panels, min_dt);
  return mismatch_from_eval(c, drift, t, x, T, y, e);
}

CacheStats parametrix_cache_stats() { return cache().stats(); }
void parametrix_cache_clear() { cache().clear(); }

}  // namespace kolmo
