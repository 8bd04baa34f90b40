#pragma once

// Exact transfer recursions on the truncated height lattice: annealed and quenched
// partition functions (free and pinned endpoint), ladder free energies, and the
// excursion kernel that turns the annealed model into a renewal problem.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "pinning/error.hpp"
#include "pinning/model.hpp"
#include "pinning/numerics.hpp"
#include "pinning/walk_laws.hpp"

namespace pinning {

struct TransferModel {
  WalkSpec walk;
  ChargeModel charge;
  PotentialSpec potential;

  // Folded (|S|) lattice whenever phi is symmetric; L follows the 4 sqrt(N) policy.
  HeightLattice lattice_for(long horizon) const {
    return HeightLattice::for_horizon(horizon, potential.symmetric());
  }
};

struct LogPartition {
  long N = 0;
  double log_free = 0.0;
  double log_constrained = 0.0;  // -inf at odd N

  double f_free() const { return N == 0 ? 0.0 : log_free / static_cast<double>(N); }
  double f_constrained() const {
    return N == 0 ? 0.0 : log_constrained / static_cast<double>(N);
  }
};

namespace detail {

inline void check_lattice(const PotentialSpec& spec, const HeightLattice& lattice) {
  require(!lattice.folded || spec.symmetric(), "folded lattice needs a symmetric potential");
  require(lattice.L >= 1, "lattice needs L >= 1");
}

inline void check_ladder(std::span<const long> ladder, bool even_only) {
  require(!ladder.empty(), "empty system-size ladder");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    require(ladder[i] >= 0, "system sizes must be non-negative");
    require(i == 0 || ladder[i] > ladder[i - 1], "system-size ladder must be increasing");
    require(!even_only || ladder[i] % 2 == 0, "free-energy ladders must use even N");
  }
}

// Forward recursion v_{n}(y) = sum_x v_{n-1}(x) p(x, y) w_n(y) from S_0 = 0, kept
// normalised with the scale accumulated in log space.
class ForwardRecursion {
 public:
  ForwardRecursion(const WalkSpec& walk, HeightLattice lattice)
      : chain_(walk, lattice), v_(chain_.size(), 0.0), next_(chain_.size(), 0.0) {
    v_[lattice.origin()] = 1.0;
  }

  void advance(std::span<const double> weight) {
    chain_.step(v_.data(), next_.data());
    for (std::size_t i = 0; i < next_.size(); ++i) next_[i] *= weight[i];
    std::swap(v_, next_);
    if (++steps_since_norm_ == 8) normalise();
  }

  double log_free() const {
    const double s = std::accumulate(v_.begin(), v_.end(), 0.0);
    return log_scale_ + std::log(s);
  }
  double log_constrained() const {
    const double z = v_[chain_.lattice().origin()];
    return z > 0.0 ? log_scale_ + std::log(z) : -kInf;
  }
  std::size_t size() const { return v_.size(); }

 private:
  void normalise() {
    steps_since_norm_ = 0;
    const double s = std::accumulate(v_.begin(), v_.end(), 0.0);
    if (!(s > 0.0) || !std::isfinite(s)) return;
    const double inv = 1.0 / s;
    for (double& x : v_) x *= inv;
    log_scale_ += std::log(s);
  }

  LatticeChain chain_;
  std::vector<double> v_, next_;
  double log_scale_ = 0.0;
  int steps_since_norm_ = 0;
};

inline std::vector<double> annealed_site_weights(const ChargeModel& charge,
                                                 const PotentialSpec& spec,
                                                 const PhasePoint& p,
                                                 const HeightLattice& lattice,
                                                 double kappa = 1.0) {
  std::vector<double> w(lattice.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = std::exp(kappa * psi(charge, spec, p, lattice.height(i)));
  return w;
}

// Records log Z at every ladder entry during one pass; site_weights(n, w) fills
// the weights of step n.
template <class SiteWeights>
std::vector<LogPartition> run_ladder(const WalkSpec& walk, const HeightLattice& lattice,
                                     std::span<const long> ladder, SiteWeights&& site_weights) {
  ForwardRecursion rec(walk, lattice);
  std::vector<LogPartition> out;
  out.reserve(ladder.size());
  std::vector<double> w(rec.size(), 1.0);
  long n = 0;
  for (long N : ladder) {
    while (n < N) {
      ++n;
      site_weights(n, w);
      rec.advance(w);
    }
    out.push_back({N, rec.log_free(), rec.log_constrained()});
  }
  return out;
}

}  // namespace detail

// log E[exp(sum_{n<=N} psi(S_n)) (1{S_N = 0})].
inline double annealed_partition(const HeightLattice& lattice, const WalkSpec& walk,
                                 const ChargeModel& charge, const PotentialSpec& spec,
                                 const PhasePoint& p, long N, bool constrained) {
  require(N >= 0, "N must be non-negative");
  detail::check_lattice(spec, lattice);
  const auto w = detail::annealed_site_weights(charge, spec, p, lattice);
  const long ladder[] = {N};
  const auto r = detail::run_ladder(walk, lattice, ladder,
                                    [&](long, std::vector<double>& out) { out = w; });
  return constrained ? r[0].log_constrained : r[0].log_free;
}

inline std::vector<LogPartition> annealed_ladder(const TransferModel& m, const PhasePoint& p,
                                                 std::span<const long> ladder,
                                                 HeightLattice lattice) {
  detail::check_ladder(ladder, false);
  detail::check_lattice(m.potential, lattice);
  const auto w = detail::annealed_site_weights(m.charge, m.potential, p, lattice);
  return detail::run_ladder(m.walk, lattice, ladder,
                            [&](long, std::vector<double>& out) {
                              if (out.size() != w.size() || out[0] != w[0]) out = w;
                            });
}

inline std::vector<LogPartition> annealed_ladder(const TransferModel& m, const PhasePoint& p,
                                                 std::span<const long> ladder) {
  require(!ladder.empty(), "empty system-size ladder");
  return annealed_ladder(m, p, ladder, m.lattice_for(ladder.back()));
}

// Site weights exp((beta omega_n - h) phi(y)) at step n; omega is indexed from 1.
inline std::vector<LogPartition> quenched_ladder(const TransferModel& m, const PhasePoint& p,
                                                 std::span<const double> omega,
                                                 std::span<const long> ladder,
                                                 HeightLattice lattice) {
  detail::check_ladder(ladder, false);
  detail::check_lattice(m.potential, lattice);
  require(static_cast<long>(omega.size()) >= ladder.back(),
          "disorder sequence shorter than the largest system size");
  std::vector<double> phi(lattice.size());
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    phi[i] = m.potential(lattice.height(i));
    if (phi[i] != 0.0) active.push_back(i);
  }
  return detail::run_ladder(m.walk, lattice, ladder, [&](long n, std::vector<double>& w) {
    const double a = p.beta * omega[static_cast<std::size_t>(n - 1)] - p.h;
    for (std::size_t i : active) w[i] = std::exp(a * phi[i]);
  });
}

inline double quenched_partition(const HeightLattice& lattice, const WalkSpec& walk,
                                 const ChargeModel& charge, const PotentialSpec& spec,
                                 const PhasePoint& p, long N, std::span<const double> omega,
                                 bool constrained) {
  require(N >= 0, "N must be non-negative");
  require(static_cast<long>(omega.size()) == N, "omega must have length N");
  const TransferModel m{walk, charge, spec};
  const long ladder[] = {N};
  const auto r = quenched_ladder(m, p, omega, ladder, lattice);
  return constrained ? r[0].log_constrained : r[0].log_free;
}

struct FreeEnergyEstimate {
  double value = 0.0;  // constrained (1/N) log Z at the largest N
  double error = 0.0;  // half bracket gap + extrapolation residual (+ standard error)
  double std_error = 0.0;
  std::vector<long> n_ladder;
  std::vector<LogPartition> per_n;  // annealed values, or sample means when quenched
  int samples = 1;
  bool converged = true;  // false when the free/constrained gap did not shrink

  double f_free() const { return per_n.back().f_free(); }
  double f_constrained() const { return per_n.back().f_constrained(); }
  double lower() const { return value - error; }
  double upper() const { return value + error; }
};

namespace detail {

inline void finish_estimate(FreeEnergyEstimate& est) {
  const auto& last = est.per_n.back();
  const auto& prev = est.per_n[est.per_n.size() - 2];
  const double gap_last = last.f_free() - last.f_constrained();
  const double gap_first = est.per_n.front().f_free() - est.per_n.front().f_constrained();
  est.value = last.f_constrained();
  est.error = 0.5 * gap_last + std::abs(last.f_constrained() - prev.f_constrained()) +
              est.std_error;
  est.converged = gap_last < gap_first || gap_last == 0.0;
}

inline void check_fe_ladder(std::span<const long> ladder) {
  check_ladder(ladder, true);
  require(ladder.size() >= 2, "free-energy ladders need at least two entries");
  require(ladder.front() > 0, "free-energy ladders need N > 0");
}

}  // namespace detail

inline FreeEnergyEstimate annealed_free_energy(const TransferModel& m, const PhasePoint& p,
                                               std::span<const long> ladder) {
  detail::check_fe_ladder(ladder);
  FreeEnergyEstimate est;
  est.n_ladder.assign(ladder.begin(), ladder.end());
  est.per_n = annealed_ladder(m, p, ladder);
  detail::finish_estimate(est);
  return est;
}

struct QuenchedSample {
  int sample = 0;
  std::uint64_t seed = 0;
  std::vector<LogPartition> per_n;
};

struct QuenchedFreeEnergy {
  FreeEnergyEstimate estimate;
  std::vector<QuenchedSample> samples;
};

// Disorder for sample s is drawn from mt19937_64(substream_seed(seed, s)).
inline std::vector<double> disorder_sequence(const ChargeModel& charge, std::uint64_t seed,
                                             int sample, long length) {
  std::mt19937_64 rng(substream_seed(seed, static_cast<std::uint64_t>(sample)));
  return charge.sample_sequence(rng, static_cast<std::size_t>(length));
}

inline QuenchedFreeEnergy quenched_free_energy_samples(const TransferModel& m,
                                                       const PhasePoint& p,
                                                       std::span<const long> ladder,
                                                       int n_samples, std::uint64_t seed,
                                                       unsigned threads = 1) {
  detail::check_fe_ladder(ladder);
  require(n_samples >= 1, "need at least one disorder sample");
  const HeightLattice lattice = m.lattice_for(ladder.back());
  QuenchedFreeEnergy out;
  out.samples.resize(static_cast<std::size_t>(n_samples));
  parallel_for(out.samples.size(), threads, [&](std::size_t s) {
    const auto omega = disorder_sequence(m.charge, seed, static_cast<int>(s), ladder.back());
    out.samples[s] = {static_cast<int>(s), substream_seed(seed, s),
                      quenched_ladder(m, p, omega, ladder, lattice)};
  });

  FreeEnergyEstimate& est = out.estimate;
  est.samples = n_samples;
  est.n_ladder.assign(ladder.begin(), ladder.end());
  est.per_n.resize(ladder.size());
  for (std::size_t j = 0; j < ladder.size(); ++j) {
    double lf = 0.0, lc = 0.0;
    for (const auto& s : out.samples) {
      lf += s.per_n[j].log_free;
      lc += s.per_n[j].log_constrained;
    }
    est.per_n[j] = {ladder[j], lf / n_samples, lc / n_samples};
  }
  if (n_samples > 1) {
    const double mean = est.per_n.back().f_constrained();
    double ss = 0.0;
    for (const auto& s : out.samples) {
      const double d = s.per_n.back().f_constrained() - mean;
      ss += d * d;
    }
    est.std_error = std::sqrt(ss / (n_samples - 1) / n_samples);
  }
  detail::finish_estimate(est);
  return out;
}

inline FreeEnergyEstimate quenched_free_energy(const TransferModel& m, const PhasePoint& p,
                                               std::span<const long> ladder, int n_samples,
                                               std::uint64_t seed, unsigned threads = 1) {
  return quenched_free_energy_samples(m, p, ladder, n_samples, seed, threads).estimate;
}

// (1/N) |log(Z^c_N / Z_N)| along the ladder (annealed). Entries at odd N are +inf.
inline std::vector<double> compare_free_constrained(const TransferModel& m, const PhasePoint& p,
                                                    std::span<const long> ladder) {
  const auto r = annealed_ladder(m, p, ladder);
  std::vector<double> out;
  for (const auto& e : r)
    out.push_back(e.N == 0 ? 0.0 : std::abs(e.log_constrained - e.log_free) / e.N);
  return out;
}

// Same diagnostic for one disorder sequence.
inline std::vector<double> compare_free_constrained(const TransferModel& m, const PhasePoint& p,
                                                    std::span<const long> ladder,
                                                    std::span<const double> omega) {
  require(!ladder.empty(), "empty system-size ladder");
  const auto r = quenched_ladder(m, p, omega, ladder, m.lattice_for(ladder.back()));
  std::vector<double> out;
  for (const auto& e : r)
    out.push_back(e.N == 0 ? 0.0 : std::abs(e.log_constrained - e.log_free) / e.N);
  return out;
}

// First-excursion weights A(m) = E[exp(sum_{n<=m} kappa psi(S_n)) 1{tau_1 = m}],
// together with the unweighted reference K(m) and survival P(tau_1 > m) on the same
// lattice.
struct ExcursionKernel {
  std::vector<double> A;
  std::vector<double> K;
  std::vector<double> survival;
  bool diverged = false;  // partial sum of A exceeded the cap; A is truncated there
  long m_max = 0;

  double partial_sum() const { return std::accumulate(A.begin(), A.end(), 0.0); }
};

inline ExcursionKernel excursion_kernel(const WalkSpec& walk, HeightLattice lattice,
                                        std::span<const double> site_weight, long m_max,
                                        double divergence_cap = 1e10) {
  require(m_max >= 2, "excursion kernel needs m_max >= 2");
  require(site_weight.size() == lattice.size(), "site weights do not match the lattice");
  const LatticeChain chain(walk, lattice);
  const std::size_t n = chain.size();
  const std::size_t o = lattice.origin();
  const auto& up = chain.up();
  const auto& down = chain.down();

  ExcursionKernel k;
  k.m_max = m_max;
  k.A.assign(m_max + 1, 0.0);
  k.K.assign(m_max + 1, 0.0);
  k.survival.assign(m_max + 1, 1.0);

  std::vector<double> v(n, 0.0), next(n, 0.0), r(n, 0.0), rnext(n, 0.0);
  if (lattice.folded) {
    v[1] = site_weight[1];
    r[1] = 1.0;
  } else {
    v[o + 1] = up[o] * site_weight[o + 1];
    v[o - 1] = down[o] * site_weight[o - 1];
    r[o + 1] = up[o];
    r[o - 1] = down[o];
  }
  double partial = 0.0;
  double alive = 1.0;
  for (long m = 2; m <= m_max; ++m) {
    chain.step(v.data(), next.data());
    chain.step(r.data(), rnext.data());
    k.A[m] = next[o] * site_weight[o];
    k.K[m] = rnext[o];
    next[o] = 0.0;
    rnext[o] = 0.0;
    for (std::size_t i = 0; i < n; ++i) next[i] *= site_weight[i];
    std::swap(v, next);
    std::swap(r, rnext);
    alive -= k.K[m];
    k.survival[m] = alive;
    partial += k.A[m];
    if (partial > divergence_cap) {
      k.diverged = true;
      k.m_max = m;
      k.A.resize(m + 1);
      k.K.resize(m + 1);
      k.survival.resize(m + 1);
      break;
    }
  }
  return k;
}

namespace detail {

// R(x) = alpha x^alpha Gamma(-alpha, x) = e^-x - x^alpha Gamma(1 - alpha, x): the
// Laplace damping of a tail sum_{m > M} m^-(1+alpha) at x = F M, with R(0) = 1.
inline double tail_damping(double alpha, double x) {
  if (x <= 0.0) return 1.0;
  return std::exp(-x) - std::pow(x, alpha) * boost::math::tgamma(1.0 - alpha, x);
}

// A(m) / K(m) at the last even m with K > 0.
inline double tail_ratio(const ExcursionKernel& k) {
  for (long m = k.m_max; m >= 2; --m)
    if (k.K[m] > 0.0) return k.A[m] / k.K[m];
  return 1.0;
}

}  // namespace detail

struct RenewalFreeEnergy {
  double value = 0.0;         // annealed free energy
  double n0 = 0.0;            // extrapolated sum of A(m)
  long m_max = 0;             // excursion horizon used
  double tail_fraction = 0.0; // share of the root equation carried by the tail correction
  bool localized = false;
};

// Annealed free energy as the renewal root: Z^{ann,c} is a renewal sequence with
// kernel A, so F solves sum_m A(m) e^{-F m} = 1 when sum_m A(m) > 1 and is 0 otherwise.
// Beyond the horizon M, A(m) ~ rho K(m) with K(m) ~ m^-(1+alpha).
inline RenewalFreeEnergy annealed_free_energy_renewal(const TransferModel& m, const PhasePoint& p,
                                                      long m_start = 1L << 14,
                                                      long m_cap = 1L << 21,
                                                      double horizon_factor = 10.0) {
  require(m_start >= 16 && m_start % 2 == 0, "renewal horizon must be even and >= 16");
  long M = m_start;
  RenewalFreeEnergy out;
  for (;;) {
    const HeightLattice lattice = m.lattice_for(M);
    const auto w = detail::annealed_site_weights(m.charge, m.potential, p, lattice);
    const ExcursionKernel k = excursion_kernel(m.walk, lattice, w, M);
    out.m_max = k.m_max;
    if (k.diverged) throw ConvergenceError("excursion weights diverge; free energy too large for the renewal route");
    const double rho = detail::tail_ratio(k);
    const double s_tail = k.survival[k.m_max];
    out.n0 = k.partial_sum() + rho * s_tail;
    if (out.n0 <= 1.0) {
      out.value = 0.0;
      out.localized = false;
      return out;
    }
    out.localized = true;
    const double alpha = m.walk.alpha;
    auto g = [&](double F) {
      double s = 0.0;
      const double q = std::exp(-F);
      double damp = q;
      for (long j = 1; j <= k.m_max; ++j) {
        s += k.A[j] * damp;
        damp *= q;
      }
      return s + rho * s_tail * detail::tail_damping(alpha, F * k.m_max) - 1.0;
    };
    double hi = 1.0;
    while (g(hi) > 0.0) hi *= 2.0;
    const double F = bisect_root(g, 0.0, hi, 1e-14 * std::max(1.0, hi));
    out.value = F;
    out.tail_fraction = rho * s_tail * detail::tail_damping(alpha, F * k.m_max);
    if (F * M >= horizon_factor || M >= m_cap) return out;
    long next = M;
    while (static_cast<double>(next) * F < horizon_factor && next < m_cap) next *= 2;
    M = std::min(next, m_cap);
  }
}

}  // namespace pinning
