#pragma once

// Weak-coupling harness: scaled couplings (beta_N, h_N), N F^ann along a ladder, the
// discrete expansion coefficients C_{TN,k}, and their continuum counterparts.

#include <cmath>
#include <span>
#include <vector>

#include "pinning/continuum.hpp"
#include "pinning/error.hpp"
#include "pinning/model.hpp"
#include "pinning/transfer.hpp"
#include "pinning/walk_laws.hpp"

namespace pinning {

struct ScalingSchedule {
  Regime regime = Regime::short_range;
  double beta_hat = 1.0;
  double h_hat = 1.0;
  std::vector<long> n_ladder;
  double A = 0.0;  // beta_N = beta_hat N^-A
  double B = 0.0;  // h_N = h_hat N^-B

  double beta_N(long N) const { return beta_hat * std::pow(static_cast<double>(N), -A); }
  double h_N(long N) const { return h_hat * std::pow(static_cast<double>(N), -B); }
  PhasePoint point(long N) const { return {beta_N(N), h_N(N)}; }
};

inline std::pair<double, double> scaling_exponents(Regime regime, double alpha, double theta) {
  switch (regime) {
    case Regime::long_range:
      return {(1.0 - theta) / 2.0, (2.0 - theta) / 2.0};
    case Regime::intermediate:
      return {alpha / 2.0, (2.0 - theta) / 2.0};
    case Regime::short_range:
      return {alpha / 2.0, alpha};
  }
  return {alpha / 2.0, alpha};
}

inline ScalingSchedule make_schedule(const ContinuumParams& params, double beta_hat, double h_hat,
                                     std::vector<long> n_ladder) {
  require(beta_hat >= 0.0, "beta_hat must be non-negative");
  require(!n_ladder.empty(), "empty ladder");
  for (std::size_t i = 0; i < n_ladder.size(); ++i) {
    require(n_ladder[i] >= 2 && n_ladder[i] % 2 == 0, "scaling ladder needs even N >= 2");
    require(i == 0 || n_ladder[i] > n_ladder[i - 1], "scaling ladder must be increasing");
  }
  ScalingSchedule s;
  s.regime = params.regime;
  s.beta_hat = beta_hat;
  s.h_hat = h_hat;
  s.n_ladder = std::move(n_ladder);
  std::tie(s.A, s.B) = scaling_exponents(params.regime, params.alpha, params.theta);
  return s;
}

// The regime a potential falls in: compact support counts as short range.
inline Regime potential_regime(const PotentialSpec& spec, double alpha) {
  if (spec.kind() == PotentialKind::copolymer)
    throw DomainError("the copolymer potential has no weak-coupling regime");
  if (spec.kind() != PotentialKind::power_tail) return Regime::short_range;
  return classify_regime(alpha, spec.theta());
}

struct ScaledPoint {
  long N = 0;
  double beta_N = 0.0;
  double h_N = 0.0;
  double N_times_F = 0.0;
  long m_max = 0;  // excursion horizon used by the renewal root
};

// N F^ann(beta_N, h_N) via the renewal root of the excursion kernel; the weak-coupling
// free energies are O(1/N), far below what a finite ladder in N can resolve.
inline std::vector<ScaledPoint> scaled_free_energy(const ScalingSchedule& schedule,
                                                   const WalkSpec& walk, const ChargeModel& charge,
                                                   const PotentialSpec& spec, unsigned threads = 1) {
  require(potential_regime(spec, walk.alpha) == schedule.regime,
          "potential tail does not match the schedule's regime");
  const TransferModel m{walk, charge, spec};
  std::vector<ScaledPoint> out(schedule.n_ladder.size());
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const long N = schedule.n_ladder[i];
    const auto r = annealed_free_energy_renewal(m, schedule.point(N), std::max(1L << 14, 16 * N),
                                                1L << 22);
    out[i] = {N, schedule.beta_N(N), schedule.h_N(N), N * r.value, r.m_max};
  });
  return out;
}

// C_{TN,j} for j = 0..k_max: sum over n_1 < ... < n_j <= TN of E[prod chi(S_{n_l})],
// chi = e^psi - 1. Layer j carries E[prod chi ... ; S_n = x] over its last index.
inline std::vector<double> series_coefficients(const WalkSpec& walk, const ChargeModel& charge,
                                               const PotentialSpec& spec, const PhasePoint& p,
                                               long TN, int k_max) {
  require(TN >= 0, "TN must be non-negative");
  require(k_max >= 0, "k must be non-negative");
  const HeightLattice lattice = HeightLattice::for_horizon(TN, spec.symmetric());
  const LatticeChain chain(walk, lattice);
  const std::size_t n = chain.size();
  std::vector<double> chi(n);
  for (std::size_t i = 0; i < n; ++i) chi[i] = std::expm1(psi(charge, spec, p, lattice.height(i)));

  std::vector<std::vector<double>> u(k_max + 1, std::vector<double>(n, 0.0));
  std::vector<double> tmp(n);
  u[0][lattice.origin()] = 1.0;
  std::vector<double> C(k_max + 1, 0.0);
  C[0] = 1.0;
  for (long step = 1; step <= TN; ++step) {
    for (auto& layer : u) {
      chain.step(layer.data(), tmp.data());
      layer.swap(tmp);
    }
    for (int j = k_max; j >= 1; --j) {
      double add = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double a = u[j - 1][i] * chi[i];
        u[j][i] += a;
        add += a;
      }
      C[j] += add;
    }
  }
  return C;
}

inline double series_coefficient(const WalkSpec& walk, const ChargeModel& charge,
                                 const PotentialSpec& spec, const PhasePoint& p, long TN, int k) {
  require(k >= 0 && k <= 4, "series_coefficient supports 0 <= k <= 4");
  return series_coefficients(walk, charge, spec, p, TN, k)[k];
}

struct SeriesRow {
  long N = 0;
  int k = 0;
  double C_TNk = 0.0;
  double hatC_gamma_ak = 0.0;
  double hatC_gamma_ak_plus1 = 0.0;
  double rel_gap = 0.0;  // against the Gamma(alpha k + 1) form
};

// C_{TN,k} along the ladder next to the continuum values; c*[phi], c*[phi^2] come from
// the stationary weights.
inline std::vector<SeriesRow> compare_to_continuum(const ScalingSchedule& schedule,
                                                   const WalkSpec& walk, const ChargeModel& charge,
                                                   const PotentialSpec& spec, double T, int k,
                                                   long k_weights = 4000) {
  require(schedule.regime == Regime::short_range, "closed-form comparison needs the short-range regime");
  require(k >= 1 && k <= 3, "compare_to_continuum supports 1 <= k <= 3");
  require(T > 0.0, "T must be positive");
  const auto w = stationary_c_weights(walk, k_weights);
  const double c1 = c_star(spec, w, 1).value;
  const double c2 = c_star(spec, w, 2).value;
  const double a = walk.alpha;
  const double delta = delta_short(schedule.beta_hat, schedule.h_hat, c1, c2);
  const double num = std::pow(delta * std::pow(T, a) * std::tgamma(a), k);
  std::vector<SeriesRow> rows;
  for (long N : schedule.n_ladder) {
    const long TN = std::lround(T * N);
    const double Ck = series_coefficient(walk, charge, spec, schedule.point(N), TN, k);
    SeriesRow r{N, k, Ck, num / std::tgamma(a * k), num / std::tgamma(a * k + 1.0), 0.0};
    r.rel_gap = r.hatC_gamma_ak_plus1 != 0.0 ? std::abs(Ck - r.hatC_gamma_ak_plus1) / std::abs(r.hatC_gamma_ak_plus1)
                                             : std::abs(Ck);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace pinning
