#pragma once

// Exact laws of the Bessel random walk: first-return law K(n), the low-height
// local-limit weights c(k), and the potential-weighted sums c*[phi^p] built on them.

#include <cmath>
#include <vector>

#include "pinning/error.hpp"
#include "pinning/model.hpp"

namespace pinning {

struct ReturnLaw {
  double alpha = 0.5;
  int L = 0;
  std::vector<double> K;         // K[n] = P(tau_1 = n), K[0] = 0
  std::vector<double> survival;  // survival[n] = P(tau_1 > n)
  double reflected_mass = 0.0;   // mass redirected by the truncation boundary
  bool truncation_warning = false;

  long n_max() const { return static_cast<long>(K.size()) - 1; }

  double total() const {
    double s = 0.0;
    for (double k : K) s += k;
    return s;
  }
  double missing_mass() const { return 1.0 - total(); }
};

// Default truncation bound: mass that felt the reflecting boundary.
inline constexpr double kReturnLawTruncationBound = 1e-10;

// First-passage recursion for |S| on the folded lattice 0..walk.L_max.
inline ReturnLaw return_law(const WalkSpec& walk, long n_max,
                            double truncation_bound = kReturnLawTruncationBound) {
  require(n_max >= 1, "return_law needs n_max >= 1");
  require(static_cast<double>(walk.L_max) >= std::sqrt(static_cast<double>(n_max)),
          "return_law needs L_max >= sqrt(n_max)");
  const LatticeChain chain(walk, {walk.L_max, true});
  const auto& up = chain.up();
  const auto& down = chain.down();
  const std::size_t top = chain.size() - 1;

  ReturnLaw law;
  law.alpha = walk.alpha;
  law.L = walk.L_max;
  law.K.assign(n_max + 1, 0.0);
  law.survival.assign(n_max + 1, 0.0);
  law.survival[0] = 1.0;

  std::vector<double> v(chain.size(), 0.0), next(chain.size(), 0.0);
  v[1] = 1.0;  // first step leaves 0 surely
  law.survival[1] = 1.0;
  double alive = 1.0;
  for (long n = 2; n <= n_max; ++n) {
    const std::size_t reach = std::min<std::size_t>(static_cast<std::size_t>(n), top);
    law.K[n] = v[1] * down[1];
    if (reach == top) law.reflected_mass += chain.reflected_mass(v.data());
    next[0] = 0.0;
    for (std::size_t i = 1; i <= reach; ++i) {
      const double from_below = i >= 2 ? v[i - 1] * up[i - 1] : 0.0;
      const double from_above = i + 1 <= top ? v[i + 1] * down[i + 1] : 0.0;
      next[i] = from_below + from_above;
    }
    std::swap(v, next);
    alive -= law.K[n];
    law.survival[n] = alive;
  }
  law.truncation_warning = law.reflected_mass > truncation_bound;
  return law;
}

// Estimated low-height local-limit weights c(0..k_max).
struct CWeights {
  double alpha = 0.5;
  long n_probe = 0;
  std::vector<double> c;

  long k_max() const { return static_cast<long>(c.size()) - 1; }
  double operator[](long k) const { return c[static_cast<std::size_t>(k)]; }
};

// c(k) ~ n^(1-alpha) P(|S_n| = k) / 2, read at n = n_probe for even k and
// n = n_probe + 1 for odd k. The bias is O(n^-delta); callers treat it as an estimate.
inline CWeights estimate_c_weights(const WalkSpec& walk, long k_max, long n_probe) {
  require(n_probe >= 4096 && n_probe % 2 == 0, "n_probe must be even and >= 4096");
  require(k_max >= 0 && static_cast<double>(k_max) <= std::sqrt(static_cast<double>(n_probe)),
          "k_max must be at most sqrt(n_probe)");
  const int L = std::max(walk.L_max, HeightLattice::horizon_L(n_probe + 1));
  const LatticeChain chain(walk, {L, true});
  std::vector<double> v(chain.size(), 0.0), next(chain.size(), 0.0);
  v[0] = 1.0;

  CWeights w;
  w.alpha = walk.alpha;
  w.n_probe = n_probe;
  w.c.assign(static_cast<std::size_t>(k_max) + 1, 0.0);
  for (long n = 1; n <= n_probe + 1; ++n) {
    chain.step(v.data(), next.data());
    std::swap(v, next);
    if (n >= n_probe) {
      const double scale = 0.5 * std::pow(static_cast<double>(n), 1.0 - walk.alpha);
      for (long k = (n % 2 == 0) ? 0 : 1; k <= k_max; k += 2) w.c[k] = scale * v[k];
    }
  }
  return w;
}

// Leading large-k behaviour c(k) ~ 2^alpha / Gamma(1 - alpha) * k^(1 - 2 alpha).
inline double c_weight_asymptote(double alpha, double k) {
  return std::pow(2.0, alpha) / std::tgamma(1.0 - alpha) * std::pow(k, 1.0 - 2.0 * alpha);
}

// Limit weights from the reversible measure of |S|: mu(0) = 1,
// mu(1) = 1 / p(1 -> 0), mu(k + 1) = mu(k) p(k -> k + 1) / p(k + 1 -> k). The ratio
// limit theorem makes c(k) proportional to mu(k); the constant is fixed by the
// large-k asymptote. For the pure drift -(alpha - 1/2)/x the product telescopes into
// Gamma functions, mu(k) ~ 2 Gamma(1 + a) / Gamma(1 - a) k^(1 - 2 alpha), a = alpha - 1/2.
inline CWeights stationary_c_weights(const WalkSpec& walk, long k_max) {
  walk.validate();
  require(k_max >= 0, "k_max must be non-negative");
  auto up = [&](long k) { return 0.5 * (1.0 + walk.drift(k)); };
  auto down = [&](long k) { return 0.5 * (1.0 - walk.drift(k)); };

  double norm = 0.0;
  if (walk.corr_amplitude == 0.0) {
    const double a = walk.alpha - 0.5;
    const double mu_coeff = 2.0 * std::tgamma(1.0 + a) / std::tgamma(1.0 - a);
    norm = c_weight_asymptote(walk.alpha, 1.0) / mu_coeff;
  } else {
    // mu(k) k^(2 alpha - 1) converges at rate k^-min(1, eps); read it off at two
    // scales and keep the far one.
    const long far = 1L << 22;
    double mu = 1.0 / down(1);
    for (long k = 1; k < far; ++k) mu *= up(k) / down(k + 1);
    norm = c_weight_asymptote(walk.alpha, static_cast<double>(far)) / mu;
  }

  CWeights w;
  w.alpha = walk.alpha;
  w.n_probe = 0;
  w.c.assign(static_cast<std::size_t>(k_max) + 1, 0.0);
  double mu = 1.0;
  w.c[0] = norm;
  for (long k = 1; k <= k_max; ++k) {
    mu = k == 1 ? 1.0 / down(1) : mu * up(k - 1) / down(k);
    w.c[k] = norm * mu;
  }
  return w;
}

struct CStar {
  double value = 0.0;       // truncated sum up to k_max
  double tail_error = 0.0;  // bound on the omitted heights
};

// c*[phi^power]: the weight that local-limit occupation puts on phi^power.
// Heights are summed with P(S_n = +-k) = P(|S_n| = k) / 2, i.e.
//   c(0) phi(0)^p + 1/2 sum_{k >= 1} c(k) (phi(k)^p + phi(-k)^p),
// which is sum_{k >= 0} c(k) phi(k)^p for symmetric phi.
inline CStar c_star(const PotentialSpec& spec, const CWeights& weights, int power) {
  require(power == 1 || power == 2, "c_star power must be 1 or 2");
  const double alpha = weights.alpha;
  const long k_max = weights.k_max();
  require(k_max >= 1, "c_star needs weights up to at least k = 1");
  if (spec.kind() == PotentialKind::copolymer)
    throw DivergenceError("c_star diverges: potential does not decay at -infinity");
  const long radius = spec.support_radius();
  if (radius < 0) {
    if (spec.theta() * power <= 2.0 * (1.0 - alpha))
      throw DivergenceError(power == 1 ? "c*[phi] diverges: need theta > 2(1 - alpha)"
                                       : "c*[phi^2] diverges: need theta > 1 - alpha");
  } else {
    require(radius <= k_max, "c_star: potential support exceeds the weight table");
  }

  CStar out;
  out.value = weights[0] * std::pow(spec(0), power);
  for (long k = 1; k <= k_max; ++k)
    out.value += 0.5 * weights[k] * (std::pow(spec(k), power) + std::pow(spec(-k), power));

  if (radius < 0) {
    // c(k) ~ c(k_max) (k / k_max)^(1 - 2 alpha) and phi(k) <= c_tail k^-theta beyond k_max;
    // the factor 2 covers the drift of the ratio away from its asymptote.
    const double tp = spec.theta() * power;
    const double km = static_cast<double>(k_max);
    out.tail_error = 2.0 * weights[k_max] * std::pow(spec.c_tail(), power) *
                     std::pow(km, 1.0 - tp) / (tp - 2.0 + 2.0 * alpha);
  }
  return out;
}

}  // namespace pinning
