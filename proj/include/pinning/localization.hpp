#pragma once

// Excursion-sum localization criterion, annealed critical curve, MBG lower bound,
// and first-return sums on arbitrary finite chains.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pinning/error.hpp"
#include "pinning/model.hpp"
#include "pinning/numerics.hpp"
#include "pinning/transfer.hpp"

namespace pinning {

enum class Verdict { no, yes, undetermined };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::no:
      return "no";
    case Verdict::yes:
      return "yes";
    case Verdict::undetermined:
      return "undetermined";
  }
  return "undetermined";
}

struct CriterionValue {
  double n_alpha = 0.0;        // partial sum up to m_max
  long m_max = 0;
  double tail_bound = 0.0;     // conservative bound on the omitted m > m_max
  double tail_estimate = 0.0;  // best guess for the same
  double threshold = 1.0;
  bool infinite = false;       // partial sums ran past the divergence cap
  Verdict localized = Verdict::undetermined;

  double estimate() const { return infinite ? kInf : n_alpha + tail_estimate; }
};

inline constexpr double kDivergenceCap = 1e10;

namespace detail {

inline Verdict classify(double partial, double bound, double threshold, bool infinite) {
  if (infinite || partial > threshold) return Verdict::yes;
  if (partial + bound <= threshold * (1.0 + 1e-12)) return Verdict::no;
  return Verdict::undetermined;
}

// Tail of sum_{m > M} A(m) with A(m) = rho(m) K(m). rho(m) is the mean weight of an
// excursion of length m; it settles as the excursion climbs away from the potential.
// The estimate freezes rho at its last value; the bound takes the largest rho over
// [M/2, M] and, when rho is still rising, a geometric extrapolation of its limit with
// a factor 2 on the remaining increment.
inline std::pair<double, double> kernel_tail(const ExcursionKernel& k) {
  const long M = k.m_max - (k.m_max % 2);
  const double surv = k.survival[k.m_max];
  auto rho = [&](long m) { return k.K[m] > 0.0 ? k.A[m] / k.K[m] : 0.0; };
  const double last = rho(M);
  const double estimate = last * surv;
  double top = 0.0;
  for (long m = std::max(2L, M / 2) & ~1L; m <= M; m += 2) top = std::max(top, rho(m));
  const double r1 = rho(std::max(2L, (M / 2) & ~1L));
  const double r0 = rho(std::max(2L, (M / 4) & ~1L));
  double limit = top;
  const double noise = 1e-12 * std::max(last, 1e-300);
  if (last - r1 > noise) {
    const double d1 = last - r1, d0 = r1 - r0;
    if (d0 <= noise || d1 >= d0) {
      limit = kInf;
    } else {
      const double q = d1 / d0;
      limit = std::max(top, last + 2.0 * d1 * q / (1.0 - q));
    }
  }
  return {estimate, limit * surv};
}

}  // namespace detail

// sum_{m <= m_max} E[exp(kappa sum_{n <= m} psi(S_n)) 1{tau_1 = m}]. kappa = 1 gives N_0,
// kappa = 1 / (1 + alpha) the tempered sum N_alpha.
inline CriterionValue excursion_sum(const WalkSpec& walk, const ChargeModel& charge,
                                    const PotentialSpec& spec, const PhasePoint& p,
                                    double kappa, long m_max, double threshold = 1.0) {
  require(kappa > 0.0 && kappa <= 1.0, "kappa must lie in (0, 1]");
  require(m_max >= 4 && m_max % 2 == 0, "m_max must be even and >= 4");
  require(threshold > 0.0, "threshold must be positive");
  const HeightLattice lattice = HeightLattice::for_horizon(m_max, spec.symmetric());
  const auto w = detail::annealed_site_weights(charge, spec, p, lattice, kappa);
  const ExcursionKernel k = excursion_kernel(walk, lattice, w, m_max, kDivergenceCap);

  CriterionValue out;
  out.m_max = k.m_max;
  out.threshold = threshold;
  out.n_alpha = k.partial_sum();
  out.infinite = k.diverged;
  if (!k.diverged) {
    const auto [est, bound] = detail::kernel_tail(k);
    out.tail_estimate = est;
    out.tail_bound = bound;
  } else {
    out.tail_estimate = out.tail_bound = kInf;
  }
  out.localized = detail::classify(out.n_alpha, out.tail_bound, threshold, out.infinite);
  return out;
}

// Depinning at the origin with return probability r: the threshold becomes 1 / r.
inline CriterionValue transient_criterion(double r, const WalkSpec& walk, const ChargeModel& charge,
                                          const PotentialSpec& spec, const PhasePoint& p,
                                          long m_max, double kappa = 1.0) {
  require(r > 0.0 && r <= 1.0, "return probability r must lie in (0, 1]");
  return excursion_sum(walk, charge, spec, p, kappa, m_max, 1.0 / r);
}

struct CriticalSearch {
  double h_max = 1e3;  // give up above this
  double tol = 1e-3;
  long m_max = 1L << 15;
};

// h_c^ann(beta): the sign change of N_0(beta, h) - 1 in h. The predicate uses the
// tail-extrapolated sum; N_0 is nonincreasing in h because phi >= 0.
inline Bracket annealed_critical_h(const WalkSpec& walk, const ChargeModel& charge,
                                   const PotentialSpec& spec, double beta,
                                   const CriticalSearch& search = {}) {
  require(beta >= 0.0, "beta must be non-negative");
  require(search.tol > 0.0, "tolerance must be positive");
  auto localized = [&](double h) {
    const auto c = excursion_sum(walk, charge, spec, PhasePoint(beta, h), 1.0, search.m_max);
    return c.infinite || c.estimate() > 1.0;
  };
  double lo = -1.0;
  while (!localized(lo)) {
    lo *= 2.0;
    if (lo < -search.h_max) throw ConvergenceError("no localized h found below the search range");
  }
  double hi = 1.0;
  while (localized(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > search.h_max) throw ConvergenceError("critical h is unbounded above the search range");
  }
  return bisect_threshold(localized, lo, hi, search.tol);
}

struct MbgBound {
  double value = 0.0;  // (1 + alpha) * center of the annealed bracket at beta / (1 + alpha)
  double width = 0.0;  // scaled bracket width
};

inline MbgBound mbg_lower(const std::function<Bracket(double)>& annealed_curve, double alpha,
                          double beta) {
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  if (beta == 0.0) return {0.0, 0.0};
  const Bracket b = annealed_curve(beta / (1.0 + alpha));
  return {(1.0 + alpha) * b.center(), (1.0 + alpha) * b.width()};
}

struct CriticalCurveSample {
  std::vector<double> beta_grid;
  std::vector<Bracket> hc_annealed;
  std::vector<MbgBound> hc_mbg_lower;
  std::optional<std::vector<Bracket>> hc_quenched_mc;
  double confidence = 0.0;
};

inline CriticalCurveSample annealed_critical_curve(const WalkSpec& walk, const ChargeModel& charge,
                                                   const PotentialSpec& spec,
                                                   std::span<const double> beta_grid,
                                                   const CriticalSearch& search = {},
                                                   unsigned threads = 1) {
  CriticalCurveSample out;
  out.beta_grid.assign(beta_grid.begin(), beta_grid.end());
  out.hc_annealed.resize(beta_grid.size());
  out.hc_mbg_lower.resize(beta_grid.size());
  auto curve = [&](double b) { return annealed_critical_h(walk, charge, spec, b, search); };
  parallel_for(beta_grid.size(), threads, [&](std::size_t i) {
    out.hc_annealed[i] = curve(beta_grid[i]);
    out.hc_mbg_lower[i] = mbg_lower(curve, walk.alpha, beta_grid[i]);
  });
  return out;
}

struct QuenchedSearch {
  long N = 1L << 12;
  int samples = 200;
  std::uint64_t seed = 1;
  double tol = 1e-3;
  double z = 1.96;  // one-sided normal quantile on the mean; 1.96 -> 97.5%
  unsigned threads = 1;
};

// Bisection in h on "quenched free energy certified positive": the disorder average of
// (1/N) log Z^c_N sits below F^que by super-additivity, so mean - z * stderr > 0 at the
// largest N places h below h_c^que at the stated confidence. The same disorder
// sequences are reused for every h.
inline Bracket quenched_critical_h(const TransferModel& m, double beta, double h_hi,
                                   const QuenchedSearch& q) {
  require(q.N >= 4 && q.N % 2 == 0, "quenched N must be even");
  const long ladder[] = {q.N / 2, q.N};
  auto localized = [&](double h) {
    const auto est = quenched_free_energy(m, PhasePoint(beta, h), ladder, q.samples, q.seed,
                                          q.threads);
    return est.value - q.z * est.std_error > 0.0;
  };
  double lo = 0.0;
  while (!localized(lo)) {
    lo -= 0.25;
    if (lo < -10.0) throw ConvergenceError("quenched search found no certified localized h");
  }
  if (localized(h_hi)) return {h_hi, h_hi};
  return bisect_threshold(localized, lo, h_hi, q.tol);
}

// First-return sums on a finite chain with transition matrix P (rows sum to 1):
// A_x = sum_m E_x[exp(sum_{n=1}^m psi(S_n)) 1{tau^x = m}].
inline CriterionValue first_return_sum(const std::vector<std::vector<double>>& P,
                                       std::span<const double> psi_table, std::size_t x,
                                       long m_max = 1L << 20) {
  const std::size_t n = P.size();
  require(n >= 1 && psi_table.size() == n && x < n, "chain, psi table and start must agree");
  for (const auto& row : P) {
    require(row.size() == n, "transition matrix must be square");
    double s = 0.0;
    for (double v : row) {
      require(v >= 0.0, "transition probabilities must be non-negative");
      s += v;
    }
    require(std::abs(s - 1.0) < 1e-12, "transition rows must sum to 1");
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(psi_table[i]);

  CriterionValue out;
  out.threshold = 1.0;
  std::vector<double> v(n, 0.0), next(n, 0.0), surv(n, 0.0), snext(n, 0.0);
  v[x] = 1.0;
  surv[x] = 1.0;
  double partial = 0.0;
  double mass_prev = 0.0, mass = 1.0, last = 0.0;
  long m = 0;
  while (m < m_max) {
    ++m;
    std::fill(next.begin(), next.end(), 0.0);
    std::fill(snext.begin(), snext.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (v[i] == 0.0 && surv[i] == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        next[j] += v[i] * P[i][j];
        snext[j] += surv[i] * P[i][j];
      }
    }
    last = next[x] * w[x];
    partial += last;
    next[x] = 0.0;
    snext[x] = 0.0;
    mass_prev = mass;
    mass = 0.0;
    double alive = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      next[j] *= w[j];
      mass += next[j];
      alive += snext[j];
    }
    std::swap(v, next);
    std::swap(surv, snext);
    if (partial > kDivergenceCap) {
      out.infinite = true;
      break;
    }
    if (alive < 1e-15 && mass < 1e-15 * std::max(partial, 1.0)) break;
    if (mass == 0.0) break;
  }
  out.m_max = m;
  out.n_alpha = partial;
  if (!out.infinite && mass > 0.0) {
    // Killed weighted mass decays geometrically; extrapolate with the last ratio.
    const double q = mass_prev > 0.0 ? mass / mass_prev : 1.0;
    if (q >= 1.0) {
      out.tail_estimate = out.tail_bound = kInf;
    } else {
      out.tail_estimate = last * q / (1.0 - q);
      out.tail_bound = 2.0 * out.tail_estimate + 1e-14;
    }
  }
  out.localized = detail::classify(out.n_alpha, out.tail_bound, 1.0, out.infinite);
  return out;
}

inline std::pair<CriterionValue, CriterionValue> criterion_start_invariance(
    const std::vector<std::vector<double>>& P, std::span<const double> psi_table, std::size_t x,
    std::size_t y, long m_max = 1L << 20) {
  return {first_return_sum(P, psi_table, x, m_max), first_return_sum(P, psi_table, y, m_max)};
}

}  // namespace pinning
