#pragma once

// Bessel-process side: transition densities, local time, Dirichlet simplex integrals,
// the short-range continuum free energy and its series, and a Monte Carlo estimator
// for the long-range and intermediate regimes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "pinning/error.hpp"
#include "pinning/numerics.hpp"

namespace pinning {

enum class Regime { long_range, intermediate, short_range };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::long_range:
      return "long_range";
    case Regime::intermediate:
      return "intermediate";
    case Regime::short_range:
      return "short_range";
  }
  return "short_range";
}

// theta < 1 - alpha, 1 - alpha < theta < 2(1 - alpha), theta > 2(1 - alpha).
inline Regime classify_regime(double alpha, double theta) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  require(theta > 0.0, "theta must be positive");
  require(theta != 1.0 - alpha && theta != 2.0 * (1.0 - alpha),
          "crossover values theta = 1 - alpha and theta = 2(1 - alpha) are not supported");
  if (theta < 1.0 - alpha) return Regime::long_range;
  if (theta < 2.0 * (1.0 - alpha)) return Regime::intermediate;
  return Regime::short_range;
}

struct ContinuumParams {
  double alpha = 0.5;
  double theta = 3.0;
  double c_tail = 1.0;
  Regime regime = Regime::short_range;

  ContinuumParams() = default;
  ContinuumParams(double alpha_, double theta_, double c_tail_ = 1.0)
      : alpha(alpha_), theta(theta_), c_tail(c_tail_), regime(classify_regime(alpha_, theta_)) {
    require(c_tail > 0.0, "c_tail must be positive");
  }
};

struct ContinuumPhasePoint {
  double beta_hat = 1.0;
  double h_hat = 1.0;

  ContinuumPhasePoint() = default;
  ContinuumPhasePoint(double b, double h) : beta_hat(b), h_hat(h) {
    require(b > 0.0 && h > 0.0, "continuum phase point needs beta_hat > 0 and h_hat > 0");
  }
};

namespace detail {

// log I_nu(z) for z > 0. Power series (all terms positive) up to z = 30, then the
// Hankel expansion, truncated at its smallest term.
inline double log_bessel_i(double nu, double z) {
  require(z > 0.0, "log_bessel_i needs z > 0");
  if (z <= 30.0) {
    const double lz = std::log(0.5 * z);
    double log_term = nu * lz - std::lgamma(nu + 1.0);
    double sum = 1.0;
    double ratio_term = 1.0;
    const double q = 0.25 * z * z;
    for (int m = 1; m < 500; ++m) {
      ratio_term *= q / (m * (m + nu));
      sum += ratio_term;
      if (ratio_term < 1e-17 * sum) break;
    }
    return log_term + std::log(sum);
  }
  const double mu = 4.0 * nu * nu;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double next = -term * (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (k * 8.0 * z);
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17) break;
  }
  return z - 0.5 * std::log(2.0 * M_PI * z) + std::log(sum);
}

}  // namespace detail

// Density at y of the Bessel process started from 0, dimension 2(1 - alpha).
inline double bessel_density_origin(double alpha, double t, double y) {
  require(t > 0.0 && y >= 0.0, "bessel_density needs t > 0 and y >= 0");
  if (y == 0.0) {
    if (alpha < 0.5) return 0.0;
    if (alpha > 0.5) return kInf;
  }
  const double lg = alpha * std::log(2.0) - std::lgamma(1.0 - alpha) +
                    (1.0 - 2.0 * alpha) * (y > 0.0 ? std::log(y) : 0.0) +
                    (alpha - 1.0) * std::log(t) - y * y / (2.0 * t);
  return std::exp(lg);
}

// g_t(x, y) = (x^alpha y^(1 - alpha) / t) exp(-(x^2 + y^2) / 2t) I_{-alpha}(x y / t).
inline double bessel_density(double alpha, double t, double x, double y) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  require(t > 0.0 && x >= 0.0 && y >= 0.0, "bessel_density needs t > 0 and x, y >= 0");
  if (x == 0.0) return bessel_density_origin(alpha, t, y);
  if (y == 0.0) {
    if (alpha < 0.5) return 0.0;
    if (alpha > 0.5) return kInf;
    return std::exp(0.5 * std::log(2.0 / (M_PI * t)) - x * x / (2.0 * t));
  }
  const double z = x * y / t;
  const double lg = alpha * std::log(x) + (1.0 - alpha) * std::log(y) - std::log(t) -
                    (x * x + y * y) / (2.0 * t) + detail::log_bessel_i(-alpha, z);
  return std::exp(lg);
}

inline double hat_g(double alpha, double t, double x) {
  require(t > 0.0 && x >= 0.0, "hat_g needs t > 0 and x >= 0");
  return std::pow(t, alpha - 1.0) * std::exp(-x * x / (2.0 * t));
}

// c_alpha = Gamma(2 - alpha) / 2^(alpha - 1): c_alpha eps^-(2(1 - alpha)) P_x(X_t < eps) -> hat_g_t(x).
inline double c_alpha(double alpha) { return std::tgamma(2.0 - alpha) / std::pow(2.0, alpha - 1.0); }

inline double local_time_mean(double alpha, double T) {
  require(T >= 0.0, "T must be non-negative");
  return std::pow(T, alpha) / alpha;
}

inline double log_dirichlet_Ik(double theta, int k) {
  require(theta > 0.0 && theta < 1.0, "dirichlet_Ik needs theta in (0, 1)");
  require(k >= 1, "dirichlet_Ik needs k >= 1");
  return k * std::lgamma(1.0 - theta) - std::lgamma(k * (1.0 - theta) + 1.0);
}

// I_k(theta) = integral over 0 < s_1 < ... < s_k < 1 of prod (s_l - s_{l-1})^-theta.
inline double dirichlet_Ik(double theta, int k) { return std::exp(log_dirichlet_Ik(theta, k)); }

// Brute-force nested quadrature of integral_{0 < t_1 < ... < t_k < T} prod_l (t_l - t_{l-1})^(a - 1).
inline double simplex_power_integral(double a, double T, int k, double rel_tol = 1e-9) {
  require(a > 0.0 && T > 0.0 && k >= 1, "simplex integral needs a > 0, T > 0, k >= 1");
  require(k <= 4, "brute-force simplex integral supports k <= 4");
  // Inner levels run looser; their error averages out in the outer integral.
  const double inner_tol = std::max(rel_tol, k >= 4 ? 1e-3 : 1e-8);
  // G_1(t) = t^(a-1); G_j(t) = int_0^t G_{j-1}(u) (t - u)^(a-1) du.
  std::function<double(int, double)> G = [&](int j, double t) -> double {
    if (t <= 0.0 || !std::isfinite(std::pow(t, a - 1.0))) return 0.0;
    if (j == 1) return std::pow(t, a - 1.0);
    return integrate([&](double u, double tc) {
      const double gap = tc > 0.0 ? tc : t - u;  // complement keeps precision near u = t
      if (u <= 0.0 || gap <= 0.0) return 0.0;
      return G(j - 1, u) * std::pow(gap, a - 1.0);
    }, 0.0, t, inner_tol);
  };
  return integrate([&](double t) { return G(k, t); }, 0.0, T, rel_tol);
}

inline double delta_short(double beta_hat, double h_hat, double cstar_phi, double cstar_phi2) {
  return 0.5 * beta_hat * beta_hat * cstar_phi2 - h_hat * cstar_phi;
}

struct HatC {
  double canonical = 0.0;   // (Delta T^alpha Gamma(alpha))^k / Gamma(alpha k + 1)
  double gamma_ak = 0.0;    // same numerator over Gamma(alpha k)
  std::optional<double> brute_force;  // Delta^k times the nested simplex quadrature, k <= 4
};

inline HatC hatC_short_range(const ContinuumParams& params, const ContinuumPhasePoint& cp,
                             double cstar_phi, double cstar_phi2, double T, int k,
                             bool with_brute_force = true) {
  require(params.regime == Regime::short_range, "hatC_short_range needs the short-range regime");
  require(k >= 1 && T > 0.0, "hatC_short_range needs k >= 1 and T > 0");
  const double a = params.alpha;
  const double delta = delta_short(cp.beta_hat, cp.h_hat, cstar_phi, cstar_phi2);
  HatC out;
  const double num = std::pow(delta * std::pow(T, a) * std::tgamma(a), k);
  out.canonical = num / std::tgamma(a * k + 1.0);
  out.gamma_ak = num / std::tgamma(a * k);
  if (with_brute_force && k <= 4) out.brute_force = std::pow(delta, k) * simplex_power_integral(a, T, k);
  return out;
}

// F = (Gamma(alpha) max(0, Delta))^(1/alpha).
inline double continuum_free_energy_short(const ContinuumParams& params, const ContinuumPhasePoint& cp,
                                          double cstar_phi, double cstar_phi2) {
  require(params.regime == Regime::short_range,
          "continuum_free_energy_short needs the short-range regime");
  const double delta = delta_short(cp.beta_hat, cp.h_hat, cstar_phi, cstar_phi2);
  if (delta <= 0.0) return 0.0;
  return std::pow(std::tgamma(params.alpha) * delta, 1.0 / params.alpha);
}

// log sum_{k >= 0} (mu T^alpha Gamma(alpha))^k / Gamma(alpha k + 1), mu >= 0.
inline double log_Z_mu_T(double mu, double alpha, double T) {
  require(mu >= 0.0 && T >= 0.0, "series needs mu >= 0 and T >= 0");
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  if (mu == 0.0 || T == 0.0) return 0.0;
  const double lz = std::log(mu * std::tgamma(alpha)) + alpha * std::log(T);
  std::vector<double> logs;
  double peak = -kInf;
  for (long k = 0;; ++k) {
    const double lt = k * lz - std::lgamma(alpha * k + 1.0);
    logs.push_back(lt);
    peak = std::max(peak, lt);
    if (k > 2 && lt < peak - 60.0 && lt < logs[k - 1]) break;
    if (k > 10000000) throw ConvergenceError("series did not peak");
  }
  return log_sum_exp(logs);
}

inline double critical_exponent(double alpha, double theta) {
  switch (classify_regime(alpha, theta)) {
    case Regime::long_range:
      return (2.0 - theta) / (1.0 - theta);
    case Regime::intermediate:
      return (2.0 - theta) / alpha;
    case Regime::short_range:
      return 2.0;
  }
  return 2.0;
}

enum class BesselScheme { euler_reflected, exact };

struct McSettings {
  BesselScheme scheme = BesselScheme::exact;
  double T = 1.0;
  double dt = 1e-4;
  int n_paths = 10000;
  std::uint64_t seed = 1;
  double local_time_kappa = 1.0;  // eps = kappa * max(sqrt(dt), 1e-3)
  int bootstrap = 200;
  unsigned threads = 1;
};

struct McEstimate {
  double estimate = 0.0;  // (1/T) log of the path average
  double std_error = 0.0; // bootstrap
  bool flagged = false;   // one path carries more than half the weight
};

struct PathFunctionals {
  double int_x_theta = 0.0;    // int_0^T X^-theta dt
  double int_x_2theta = 0.0;   // int_0^T X^-2theta dt
  double local_time = 0.0;     // c_alpha eps^-(2(1-alpha)) int_0^T 1{X < eps} dt
};

// Squared Bessel process Y = X^2 of dimension 2(1 - alpha) from 0, on a grid of step dt.
// euler_reflected: Y <- |Y + 2 sqrt(Y) dB + 2(1 - alpha) dt|.
// exact: Y' = 2 dt Gamma(1 - alpha + N, 1) with N ~ Poisson(Y / 2dt), the noncentral
// chi-square transition law.
// Functionals use right-point Riemann sums.
template <class Rng>
PathFunctionals simulate_path(double alpha, double theta, const McSettings& s, Rng& rng) {
  const long steps = std::max(1L, std::lround(s.T / s.dt));
  const double dt = s.T / steps;
  const double sdt = std::sqrt(dt);
  const double eps = s.local_time_kappa * std::max(sdt, 1e-3);
  const double eps2 = eps * eps;
  const double drift = 2.0 * (1.0 - alpha) * dt;
  std::normal_distribution<double> normal(0.0, 1.0);
  PathFunctionals f;
  double y = 0.0;
  long below = 0;
  for (long i = 0; i < steps; ++i) {
    if (s.scheme == BesselScheme::euler_reflected) {
      y = std::abs(y + 2.0 * std::sqrt(y) * sdt * normal(rng) + drift);
    } else {
      long n = 0;
      if (y > 0.0) n = std::poisson_distribution<long>(y / (2.0 * dt))(rng);
      y = 2.0 * dt * std::gamma_distribution<double>(1.0 - alpha + static_cast<double>(n), 1.0)(rng);
    }
    if (y < eps2) ++below;
    const double xt = theta == 0.0 ? 1.0 : std::pow(y, -0.5 * theta);  // X^-theta
    f.int_x_theta += xt;
    f.int_x_2theta += xt * xt;
  }
  f.int_x_theta *= dt;
  f.int_x_2theta *= dt;
  f.local_time = c_alpha(alpha) * std::pow(eps, -2.0 * (1.0 - alpha)) * below * dt;
  return f;
}

inline std::vector<PathFunctionals> simulate_paths(double alpha, double theta, const McSettings& s) {
  require(s.T > 0.0 && s.dt > 0.0 && s.dt <= s.T, "Monte Carlo needs 0 < dt <= T");
  require(s.n_paths >= 2, "Monte Carlo needs at least two paths");
  std::vector<PathFunctionals> out(static_cast<std::size_t>(s.n_paths));
  parallel_for(out.size(), s.threads, [&](std::size_t i) {
    std::mt19937_64 rng(substream_seed(s.seed, i, 2));
    out[i] = simulate_path(alpha, theta, s, rng);
  });
  return out;
}

struct LocalTimeCalibration {
  double kappa = 1.0;
  double relative_bias = 0.0;  // (estimator mean - T^alpha / alpha) / (T^alpha / alpha)
};

// Picks kappa in eps = kappa max(sqrt(dt), 1e-3) from a grid so that the occupation
// estimator's mean is closest to T^alpha / alpha. Every kappa reuses the same paths.
inline LocalTimeCalibration calibrate_local_time(double alpha, McSettings s,
                                                 std::vector<double> grid = {0.25, 0.5, 1.0, 2.0, 4.0}) {
  require(!grid.empty(), "calibration grid is empty");
  const double target = local_time_mean(alpha, s.T);
  LocalTimeCalibration best{grid.front(), kInf};
  for (double kappa : grid) {
    s.local_time_kappa = kappa;
    const auto p = simulate_paths(alpha, 0.0, s);
    double m = 0.0;
    for (const auto& f : p) m += f.local_time;
    const double bias = (m / static_cast<double>(p.size()) - target) / target;
    if (std::abs(bias) < std::abs(best.relative_bias)) best = {kappa, bias};
  }
  return best;
}

namespace detail {

inline McEstimate exp_average(const std::vector<double>& expo, double T, int bootstrap,
                              std::uint64_t seed) {
  McEstimate out;
  const double lse = log_sum_exp(expo);
  const double n = static_cast<double>(expo.size());
  out.estimate = (lse - std::log(n)) / T;
  const double top = *std::max_element(expo.begin(), expo.end());
  out.flagged = top - lse > std::log(0.5);
  std::mt19937_64 rng(substream_seed(seed, 0, 3));
  std::uniform_int_distribution<std::size_t> pick(0, expo.size() - 1);
  std::vector<double> reps;
  std::vector<double> draw(expo.size());
  for (int b = 0; b < bootstrap; ++b) {
    for (double& d : draw) d = expo[pick(rng)];
    reps.push_back((log_sum_exp(draw) - std::log(n)) / T);
  }
  if (reps.size() >= 2) {
    const double mean = std::accumulate(reps.begin(), reps.end(), 0.0) / reps.size();
    double ss = 0.0;
    for (double r : reps) ss += (r - mean) * (r - mean);
    out.std_error = std::sqrt(ss / (reps.size() - 1));
  }
  return out;
}

}  // namespace detail

// (1/T) log E[exp(H_T)] with
//   long range:   H = 1/2 beta^2 c^2 int X^-2theta - h c int X^-theta
//   intermediate: H = 1/2 beta^2 c*[phi^2] L_T(0) - h c int X^-theta
inline McEstimate continuum_free_energy_mc(const ContinuumParams& params, const ContinuumPhasePoint& cp,
                                           const McSettings& s, double cstar_phi2 = 0.0) {
  require(params.regime != Regime::short_range,
          "Monte Carlo estimator covers the long-range and intermediate regimes");
  if (params.regime == Regime::long_range)
    require(2.0 * params.theta < 2.0 * (1.0 - params.alpha),
            "X^-2theta functional needs 2 theta < 2(1 - alpha)");
  else
    require(cstar_phi2 > 0.0, "intermediate regime needs c*[phi^2] > 0");
  const auto paths = simulate_paths(params.alpha, params.theta, s);
  const double c = params.c_tail;
  const double b2 = 0.5 * cp.beta_hat * cp.beta_hat;
  std::vector<double> expo;
  expo.reserve(paths.size());
  for (const auto& f : paths) {
    const double reward = params.regime == Regime::long_range ? b2 * c * c * f.int_x_2theta
                                                              : b2 * cstar_phi2 * f.local_time;
    expo.push_back(reward - cp.h_hat * c * f.int_x_theta);
  }
  return detail::exp_average(expo, s.T, s.bootstrap, s.seed);
}

// h_c(beta_hat) = C beta_hat^E. Short range: C = c*[phi^2] / (2 c*[phi]). Otherwise
// C = h_c(1) from bisection on the Monte Carlo free energy being 3 standard errors
// above 0.
inline double continuum_critical_prefactor(const ContinuumParams& params, double cstar_phi,
                                           double cstar_phi2, const McSettings* mc = nullptr,
                                           double h_hi = 20.0, double tol = 1e-2) {
  if (params.regime == Regime::short_range) {
    require(cstar_phi > 0.0, "c*[phi] must be positive");
    return cstar_phi2 / (2.0 * cstar_phi);
  }
  require(mc != nullptr, "long-range and intermediate prefactors need Monte Carlo settings");
  auto positive = [&](double h) {
    const auto e = continuum_free_energy_mc(params, ContinuumPhasePoint(1.0, h), *mc, cstar_phi2);
    return e.estimate > 3.0 * e.std_error;
  };
  if (!positive(tol)) throw ConvergenceError("critical prefactor: not localized at small h");
  if (positive(h_hi)) throw ConvergenceError("critical prefactor: root not bracketed");
  return bisect_threshold(positive, tol, h_hi, tol).center();
}

inline double continuum_critical_curve(const ContinuumParams& params, double cstar_phi,
                                       double cstar_phi2, double beta_hat,
                                       const McSettings* mc = nullptr) {
  require(beta_hat >= 0.0, "beta_hat must be non-negative");
  return continuum_critical_prefactor(params, cstar_phi, cstar_phi2, mc) *
         std::pow(beta_hat, critical_exponent(params.alpha, params.theta));
}

}  // namespace pinning
