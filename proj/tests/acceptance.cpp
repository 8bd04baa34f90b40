// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "pinning/continuum.hpp"
#include "pinning/localization.hpp"
#include "pinning/scaling.hpp"

using namespace pinning;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_s;
  const bool ok = o.pass && in_time;
  if (!ok) ++failures;
  std::printf("%s %2d %s: %s [%.1f s%s]\n", ok ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs,
              in_time ? "" : ", over time limit");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const ChargeModel kGauss{ChargeLaw::gaussian_standard};

// The model shared by the grid criteria.
const WalkSpec kWalk(0.6);
const PotentialSpec kTail3 = PotentialSpec::power_tail(3.0);
const TransferModel kModel{kWalk, kGauss, kTail3};

std::vector<PhasePoint> criterion_grid() {
  std::vector<PhasePoint> g;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) g.emplace_back(1.5 * i / 9.0, 1.5 * j / 9.0);
  return g;
}

Outcome homogeneous_pinning() {
  const long N = 1L << 12;
  const double h = -0.5;
  const double f = annealed_partition({256, true}, WalkSpec(0.5), kGauss, PotentialSpec::pinning(),
                                      {0.0, h}, N, true) / N;
  // sum_n K(n) x^n = 1 - sqrt(1 - x^2) for the simple walk
  const double F = -0.5 * std::log(1.0 - std::pow(1.0 - std::exp(h), 2));
  const double d = std::abs(f - F);
  return {d < 1e-3, fmt("f_c(N=4096)=%.6f oracle=%.6f |diff|=%.2e (tol 1e-3)", f, F, d)};
}

Outcome criterion_vs_free_energy() {
  const long ladder[] = {1L << 14};
  int undetermined = 0, disagree = 0, compared = 0;
  for (const auto& p : criterion_grid()) {
    const auto c = excursion_sum(kWalk, kGauss, kTail3, p, 1.0, 1L << 15);
    const auto z = annealed_ladder(kModel, p, ladder)[0];
    Verdict fe = Verdict::undetermined;
    if (z.f_constrained() > 0.0) fe = Verdict::yes;
    else if (z.log_free <= 1.0) fe = Verdict::no;
    if (c.localized == Verdict::undetermined || fe == Verdict::undetermined) {
      ++undetermined;
      continue;
    }
    ++compared;
    if (c.localized != fe) ++disagree;
  }
  return {disagree == 0 && undetermined < 20,
          fmt("compared=%d disagreements=%d undetermined=%d/100 (need 0 and < 20)", compared, disagree,
              undetermined)};
}

Outcome critical_curve_shape() {
  std::vector<Bracket> b;
  for (int i = 0; i <= 6; ++i) b.push_back(annealed_critical_h(kWalk, kGauss, kTail3, 0.25 * i));
  bool ok = b[0].contains(0.0) && b[0].width() <= 1e-3;
  bool monotone = true, positive = true;
  for (std::size_t i = 1; i < b.size(); ++i) {
    monotone = monotone && b[i].hi >= b[i - 1].lo;
    positive = positive && b[i].lo > 0.0;
  }
  ok = ok && monotone && positive;
  return {ok, fmt("h_c(0) in [%.5f, %.5f]; h_c(0.25)=%.5f h_c(1.5)=%.5f; nondecreasing=%s positive=%s",
                  b[0].lo, b[0].hi, b[1].center(), b[6].center(), monotone ? "yes" : "no",
                  positive ? "yes" : "no")};
}

Outcome mbg_sandwich() {
  auto curve = [](double beta) { return annealed_critical_h(kWalk, kGauss, kTail3, beta); };
  QuenchedSearch q;
  q.N = 1L << 12;
  q.samples = 200;
  q.seed = 1;
  q.tol = 1e-3;
  std::string detail;
  bool ok = true;
  for (double beta : {0.5, 1.0}) {
    const Bracket ann = curve(beta);
    const MbgBound mbg = mbg_lower(curve, kWalk.alpha, beta);
    const Bracket que = quenched_critical_h(kModel, beta, ann.hi + ann.width(), q);
    const double lower = mbg.value - mbg.width - que.width();
    const double upper = ann.hi + ann.width() + que.width();
    const bool in = que.lo >= lower && que.hi <= upper;
    ok = ok && in;
    detail += fmt("beta=%.1f: mbg=%.5f <= que=[%.5f, %.5f] <= ann=[%.5f, %.5f] %s; ", beta, mbg.value,
                  que.lo, que.hi, ann.lo, ann.hi, in ? "ok" : "violated");
  }
  return {ok, detail};
}

Outcome jensen() {
  const long ladder[] = {1L << 11, 1L << 12};
  int upper_fail = 0, lower_fail = 0;
  double worst_upper = -kInf, worst_lower = kInf;
  for (const auto& p : criterion_grid()) {
    const auto q = quenched_free_energy(kModel, p, ladder, 32, 5);
    const auto a = annealed_free_energy(kModel, p, ladder);
    const double up = (q.value - a.value) / std::max(q.std_error, 1e-300);
    // at beta = 0 both sides are the same number up to roundoff and se = 0
    if (q.value > a.value + 3.0 * q.std_error + 1e-12 * std::abs(a.value)) ++upper_fail;
    // finite-N bias of (1/N) E log Z^c is part of the estimate's error
    if (q.value < -3.0 * q.error) ++lower_fail;
    if (p.beta > 0.0) worst_upper = std::max(worst_upper, up);
    worst_lower = std::min(worst_lower, q.value / q.error);
  }
  return {upper_fail == 0 && lower_fail == 0,
          fmt("que <= ann + 3se violations=%d (max (que-ann)/se over beta > 0: %.2f); que >= -3 err violations=%d (min que/err=%.2f)",
              upper_fail, worst_upper, lower_fail, worst_lower)};
}

Outcome continuum_closed_forms() {
  const double ik = dirichlet_Ik(0.5, 2);
  const double brute = simplex_power_integral(0.5, 1.0, 2);
  bool ok = std::abs(ik - brute) < 1e-3 && std::abs(ik - std::numbers::pi) < 1e-12;
  double worst_norm = 0.0;
  boost::math::quadrature::tanh_sinh<double> ts;
  for (double alpha : {0.25, 0.5, 0.75})
    for (double t : {0.5, 1.0, 3.0})
      for (double x : {0.0, 0.5, 2.0}) {
        const double m = ts.integrate([&](double y) { return bessel_density(alpha, t, x, y); }, 0.0,
                                      x + 30.0 * std::sqrt(t), 1e-13);
        worst_norm = std::max(worst_norm, std::abs(m - 1.0));
      }
  double worst_pt = 0.0;
  for (double t : {0.5, 1.0, 2.0})
    for (int i = 0; i <= 500; ++i) {
      const double y = 5.0 * i / 500.0;
      const double ref = std::sqrt(2.0 / (std::numbers::pi * t)) * std::exp(-y * y / (2.0 * t));
      worst_pt = std::max(worst_pt, std::abs(bessel_density(0.5, t, 0.0, y) - ref));
    }
  ok = ok && worst_norm < 1e-8 && worst_pt < 1e-10;
  return {ok, fmt("I_2(1/2)=%.12f simplex=%.12f; max |norm-1|=%.1e; max |g-halfgauss|=%.1e", ik, brute,
                  worst_norm, worst_pt)};
}

Outcome growth_rate() {
  const double T = 200.0;
  const double rate = log_Z_mu_T(1.0, 0.5, T) / T;
  const double target = std::pow(std::tgamma(0.5), 2.0);
  const double rel = std::abs(rate - target) / target;
  // which Gamma factor the simplex integrals support
  const ContinuumParams params(0.6, 3.0);
  const ContinuumPhasePoint cp(1.0, 0.1);
  double worst_canon = 0.0, best_alt = kInf;
  for (int k = 1; k <= 4; ++k) {
    const auto h = hatC_short_range(params, cp, 0.5, 0.4, 1.0, k);
    worst_canon = std::max(worst_canon, std::abs(*h.brute_force - h.canonical) / std::abs(h.canonical));
    if (k > 1) best_alt = std::min(best_alt, std::abs(*h.brute_force - h.gamma_ak) / std::abs(h.gamma_ak));
  }
  const bool ok = rel < 0.03 && worst_canon < 1e-8 && best_alt > 0.1;
  return {ok, fmt("(1/T) log Z(T=200)=%.6f target pi, rel err %.2e; brute vs Gamma(ak+1) %.1e, vs Gamma(ak) >= %.2f",
                  rate, rel, worst_canon, best_alt)};
}

Outcome local_limit() {
  const long n = 1L << 12;
  const auto est = estimate_c_weights(WalkSpec(0.5, 1024), 4, n);
  const double c_inf = std::sqrt(2.0 / std::numbers::pi);
  bool ok = true;
  std::string detail;
  for (long k : {0L, 2L, 4L}) {
    const double c = k == 0 ? c_inf / 2.0 : c_inf;
    // est[k] = n^{1-alpha} P(|S_n| = k) / 2; also check it against the binomial law
    const double binom = std::exp(std::lgamma(n + 1.0) - std::lgamma((n + k) / 2 + 1.0) -
                                  std::lgamma((n - k) / 2 + 1.0) - n * std::log(2.0)) * (k == 0 ? 1.0 : 2.0);
    const double ratio = std::sqrt(static_cast<double>(n)) * binom / (2.0 * c);
    // lgamma at n = 4096 carries ~1e-12 absolute error in the log
    const bool exact = std::abs(est[k] / (std::sqrt(static_cast<double>(n)) * binom / 2.0) - 1.0) < 1e-10;
    ok = ok && ratio >= 0.98 && ratio <= 1.02 && exact;
    detail += fmt("k=%ld ratio=%.6f; ", k, ratio);
  }
  return {ok, detail};
}

Outcome appendix_invariance() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(2, 11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int above = 0, below = 0, broken = 0, unresolved = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const int n = size(rng);
    std::vector<std::vector<double>> P(n, std::vector<double>(n));
    for (auto& row : P) {
      double s = 0.0;
      for (double& v : row) s += (v = u(rng) < 0.3 ? 0.0 : u(rng));
      if (s == 0.0) row[0] = s = 1.0;
      for (double& v : row) v /= s;
    }
    // irreducible: mix in a cycle
    for (int i = 0; i < n; ++i) {
      for (double& v : P[i]) v *= 0.9;
      P[i][(i + 1) % n] += 0.1;
    }
    const double shift = -0.4 + 0.8 * u(rng);
    std::normal_distribution<double> g(shift, 0.3);
    std::vector<double> psi(n);
    for (double& v : psi) v = g(rng);
    int yes = 0, no = 0;
    for (int x = 0; x < n; ++x) {
      const auto c = first_return_sum(P, psi, x);
      if (c.localized == Verdict::yes) ++yes;
      else if (c.localized == Verdict::no) ++no;
      else ++unresolved;
    }
    if (yes && no) ++broken;
    if (yes == n) ++above;
    if (no == n) ++below;
  }
  return {broken == 0 && unresolved == 0 && above >= 20 && below >= 20,
          fmt("instances above=%d below=%d mixed=%d unresolved states=%d", above, below, broken, unresolved)};
}

Outcome weak_coupling_trend() {
  const double alpha = 0.6;
  const ContinuumParams params(alpha, 3.0);
  const auto cw = stationary_c_weights(kWalk, 4000);
  const double c1 = c_star(kTail3, cw, 1).value, c2 = c_star(kTail3, cw, 2).value;
  const double F = continuum_free_energy_short(params, {1.0, 0.1}, c1, c2);
  const auto s = make_schedule(params, 1.0, 0.1, {256, 512, 1024, 2048, 4096, 8192});
  const auto r = scaled_free_energy(s, kWalk, kGauss, kTail3);
  bool monotone = true;
  std::string gaps;
  double prev = kInf, last = 0.0;
  for (const auto& p : r) {
    const double gap = std::abs(p.N_times_F - F) / F;
    monotone = monotone && gap < prev;
    prev = last = gap;
    gaps += fmt("%.3f%% ", 100.0 * gap);
  }
  return {F > 0.0 && monotone && last < 0.1,
          fmt("F_hat=%.6f; gaps %s; monotone=%s", F, gaps.c_str(), monotone ? "yes" : "no")};
}

Outcome compare_trend() {
  const TransferModel m{WalkSpec(0.5), kGauss, PotentialSpec::pinning()};
  const long ladder[] = {256, 512, 1024, 2048, 4096, 8192};
  const auto d = compare_free_constrained(m, {0.5, 0.5}, ladder);
  bool dec = true;
  for (std::size_t i = 1; i < d.size(); ++i) dec = dec && d[i] < d[i - 1];
  return {dec && d.back() < 0.01, fmt("N=256: %.4e ... N=8192: %.4e; decreasing=%s", d.front(), d.back(),
                                      dec ? "yes" : "no")};
}

}  // namespace

int main() {
  report(1, "homogeneous pinning oracle", 10, homogeneous_pinning);
  report(2, "criterion vs free energy sign", 300, criterion_vs_free_energy);
  report(3, "critical curve shape", 300, critical_curve_shape);
  report(4, "MBG sandwich", 1800, mbg_sandwich);
  report(5, "Jensen bounds", 1800, jensen);
  report(6, "continuum closed forms", 60, continuum_closed_forms);
  report(7, "series growth rate", 60, growth_rate);
  report(8, "local limit theorem", 60, local_limit);
  report(9, "start invariance", 60, appendix_invariance);
  report(10, "weak-coupling trend", 1200, weak_coupling_trend);
  report(11, "free vs constrained trend", 300, compare_trend);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
