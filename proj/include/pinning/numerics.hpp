#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string_view>
#include <thread>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "pinning/error.hpp"

namespace pinning {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// log(sum_i exp(x_i)); -inf for an empty range or when every term is -inf.
inline double log_sum_exp(std::span<const double> xs) {
  double top = -kInf;
  for (double x : xs) top = std::max(top, x);
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - top);
  return top + std::log(sum);
}

inline double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (a == -kInf) return a;
  return a + std::log1p(std::exp(b - a));
}

// Closed interval [lo, hi] known to contain a sign change of a monotone predicate.
struct Bracket {
  double lo = 0.0;
  double hi = 0.0;

  double center() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

// Bisection for a predicate that is true on (-inf, t) and false on [t, inf).
// Requires pred(lo) == true and pred(hi) == false; returns a bracket around t of
// width <= tol.
inline Bracket bisect_threshold(const std::function<bool(double)>& pred, double lo,
                                double hi, double tol) {
  require(tol > 0.0, "bisection tolerance must be positive");
  require(lo < hi, "bisection needs lo < hi");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (pred(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {lo, hi};
}

// Root of a continuous function with f(lo) and f(hi) of opposite sign.
inline double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                          double tol, int max_iter = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw ConvergenceError("root is not bracketed");
  for (int i = 0; i < max_iter && hi - lo > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// SplitMix64 finalizer. Sub-stream seeds are splitmix64(root ^ splitmix64(index + tag)),
// so a stream depends only on (root seed, tag, index), never on evaluation order.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t substream_seed(std::uint64_t root, std::uint64_t index,
                                              std::uint64_t tag = 0) {
  return splitmix64(root ^ splitmix64(index + 0xD1B54A32D192ED03ULL * (tag + 1)));
}

inline constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Runs job(i) for i in [0, n) on up to `threads` workers. Jobs write their own
// slot of a caller-owned result vector, so any reduction done afterwards in index
// order is independent of the thread count.
inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t)>& job) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) job(i);
    });
  }
}

// Adaptive double-exponential quadrature; handles integrable endpoint singularities.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-12) {
  static thread_local boost::math::quadrature::tanh_sinh<double> q;
  return q.integrate(std::forward<F>(f), a, b, rel_tol);
}

template <class F>
double integrate_to_infinity(F&& f, double a, double rel_tol = 1e-12) {
  static thread_local boost::math::quadrature::exp_sinh<double> q;
  return q.integrate(std::forward<F>(f), a, kInf, rel_tol);
}

}  // namespace pinning
