#include <cmath>
#include <functional>
#include <limits>

#include <gtest/gtest.h>

#include "pinning/transfer.hpp"

using namespace pinning;

namespace {

// Sum over all 2^N nearest-neighbour paths from 0; weight(n, x) multiplies step n.
struct Brute {
  double free = 0.0, constrained = 0.0;
};

Brute enumerate(const WalkSpec& w, long N, const std::function<double(long, long)>& weight) {
  Brute b;
  std::function<void(long, long, double)> rec = [&](long n, long x, double acc) {
    if (n == N) {
      b.free += acc;
      if (x == 0) b.constrained += acc;
      return;
    }
    for (int d : {+1, -1}) {
      const double p = transition_prob(w, x, d);
      rec(n + 1, x + d, acc * p * weight(n + 1, x + d));
    }
  };
  rec(0, 0, 1.0);
  return b;
}

const ChargeModel kGauss{ChargeLaw::gaussian_standard};

}  // namespace

TEST(Annealed, EmptyProduct) {
  const auto spec = PotentialSpec::pinning();
  const HeightLattice lat{8, true};
  EXPECT_EQ(annealed_partition(lat, WalkSpec(0.5), kGauss, spec, {1.0, 0.3}, 0, false), 0.0);
  EXPECT_EQ(annealed_partition(lat, WalkSpec(0.5), kGauss, spec, {1.0, 0.3}, 0, true), 0.0);
}

TEST(Annealed, FreeWalkHasZeroLogPartition) {
  const auto spec = PotentialSpec::power_tail(2.0);
  const long N = 500;
  EXPECT_NEAR(annealed_partition(HeightLattice::for_horizon(N, true), WalkSpec(0.6), kGauss,
                                 spec, {0.0, 0.0}, N, false),
              0.0, 1e-12);
}

TEST(Annealed, MatchesPathEnumeration) {
  for (double a : {0.5, 0.7}) {
    const WalkSpec w(a, 64);
    const auto spec = PotentialSpec::power_tail(1.5, 0.8);
    const PhasePoint p(0.9, 0.2);
    const long N = 12;
    const auto b = enumerate(w, N, [&](long, long x) { return std::exp(psi(kGauss, spec, p, x)); });
    for (bool folded : {true, false}) {
      const HeightLattice lat{static_cast<int>(N), folded};
      EXPECT_NEAR(annealed_partition(lat, w, kGauss, spec, p, N, false), std::log(b.free), 1e-12);
      EXPECT_NEAR(annealed_partition(lat, w, kGauss, spec, p, N, true), std::log(b.constrained), 1e-12);
    }
  }
}

TEST(Quenched, MatchesPathEnumeration) {
  const WalkSpec w(0.6, 64);
  const auto spec = PotentialSpec::pinning();
  const PhasePoint p(1.0, 0.0);
  const std::vector<double> omega = {1, -1, 1, -1};
  const auto b = enumerate(w, 4, [&](long n, long x) {
    return std::exp((p.beta * omega[n - 1] - p.h) * spec(x));
  });
  const HeightLattice lat{4, true};
  EXPECT_NEAR(quenched_partition(lat, w, kGauss, spec, p, 4, omega, false), std::log(b.free), 1e-14);
  EXPECT_NEAR(quenched_partition(lat, w, kGauss, spec, p, 4, omega, true), std::log(b.constrained), 1e-14);
  // SRW by hand: both visits land on omega = -1
  const WalkSpec srw(0.5, 64);
  const double zc = 0.25 * std::exp(-2.0) + 0.125 * std::exp(-1.0);
  EXPECT_NEAR(quenched_partition(lat, srw, kGauss, spec, p, 4, omega, true), std::log(zc), 1e-14);
}

TEST(Quenched, AsymmetricPotentialOnUnfoldedLattice) {
  const WalkSpec w(0.4, 64);
  const auto spec = PotentialSpec::copolymer();
  const PhasePoint p(0.7, 0.1);
  const auto omega = disorder_sequence(kGauss, 5, 0, 10);
  const auto b = enumerate(w, 10, [&](long n, long x) {
    return std::exp((p.beta * omega[n - 1] - p.h) * spec(x));
  });
  const HeightLattice lat{10, false};
  EXPECT_NEAR(quenched_partition(lat, w, kGauss, spec, p, 10, omega, false), std::log(b.free), 1e-13);
  EXPECT_THROW(quenched_partition({10, true}, w, kGauss, spec, p, 10, omega, false), DomainError);
}

TEST(Quenched, ZeroDisorderIsDeterministicPinning) {
  const WalkSpec w(0.5);
  const auto spec = PotentialSpec::power_tail(2.0);
  const PhasePoint p(0.8, 0.3);
  const long N = 200;
  const std::vector<double> zero(N, 0.0);
  const auto lat = HeightLattice::for_horizon(N, true);
  const double q = quenched_partition(lat, w, kGauss, spec, p, N, zero, true);
  const double a = annealed_partition(lat, w, kGauss, spec, PhasePoint(0.0, 0.3), N, true);
  EXPECT_NEAR(q, a, 1e-12);
}

TEST(Quenched, BetaZeroEqualsAnnealedForEverySample) {
  const TransferModel m{WalkSpec(0.6), kGauss, PotentialSpec::pinning()};
  const PhasePoint p(0.0, 0.2);
  const long ladder[] = {128, 256};
  const auto q = quenched_free_energy_samples(m, p, ladder, 5, 11);
  const auto a = annealed_ladder(m, p, ladder);
  for (const auto& s : q.samples)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(s.per_n[j].log_constrained, a[j].log_constrained, 1e-10);
  EXPECT_NEAR(q.estimate.std_error, 0.0, 1e-12);
}

TEST(Quenched, LengthMismatchRejected) {
  const std::vector<double> omega(5, 0.0);
  EXPECT_THROW(quenched_partition({8, true}, WalkSpec(0.5), kGauss, PotentialSpec::pinning(),
                                  {1.0, 0.0}, 4, omega, false),
               DomainError);
  EXPECT_THROW(annealed_partition({8, true}, WalkSpec(0.5), kGauss, PotentialSpec::pinning(),
                                  {1.0, 0.0}, -1, false),
               DomainError);
}

TEST(Lattice, DoublingLDoesNotChangeConstrained) {
  struct Case { double alpha; PotentialSpec spec; PhasePoint p; };
  const Case cases[] = {{0.7, PotentialSpec::power_tail(1.2), {1.0, 0.4}},
                        {0.6, PotentialSpec::power_tail(3.0), {1.0, 0.0}},
                        {0.3, PotentialSpec::pinning(), {0.5, 0.3}}};
  for (const auto& c : cases)
    for (long N : {1024L, 4096L}) {
      const auto lat = HeightLattice::for_horizon(N, true);
      const double a = annealed_partition(lat, WalkSpec(c.alpha), kGauss, c.spec, c.p, N, true);
      const double b = annealed_partition({2 * lat.L, true}, WalkSpec(c.alpha), kGauss, c.spec, c.p, N, true);
      EXPECT_LT(std::abs(a - b), 1e-8) << c.alpha << " " << N;
    }
}

// A repulsive potential pushes free-endpoint paths out to the boundary; 4 sqrt(N)
// keeps the error per step small but 1e-8 on log Z needs a wider lattice.
TEST(Lattice, DoublingLFreeEndpointRepulsive) {
  const WalkSpec w(0.7);
  const auto spec = PotentialSpec::power_tail(1.2);
  const PhasePoint p(1.0, 0.4);
  for (long N : {1024L, 4096L}) {
    const auto lat = HeightLattice::for_horizon(N, true);
    const double a = annealed_partition(lat, w, kGauss, spec, p, N, false);
    const double b = annealed_partition({2 * lat.L, true}, w, kGauss, spec, p, N, false);
    EXPECT_LT(std::abs(a - b) / N, 1e-6);
    const int wide = static_cast<int>(std::ceil(7.0 * std::sqrt(static_cast<double>(N))));
    const double c = annealed_partition({wide, true}, w, kGauss, spec, p, N, false);
    const double d = annealed_partition({2 * wide, true}, w, kGauss, spec, p, N, false);
    EXPECT_LT(std::abs(c - d), 1e-8);
  }
}

TEST(Lattice, FoldedEqualsUnfolded) {
  const WalkSpec w(0.35);
  const auto spec = PotentialSpec::power_tail(2.5);
  const PhasePoint p(1.2, 0.5);
  const long N = 600;
  const int L = HeightLattice::horizon_L(N);
  for (bool c : {false, true})
    EXPECT_NEAR(annealed_partition({L, true}, w, kGauss, spec, p, N, c),
                annealed_partition({L, false}, w, kGauss, spec, p, N, c), 1e-10);
}

TEST(Annealed, LadderMatchesSinglePartitions) {
  const TransferModel m{WalkSpec(0.6), kGauss, PotentialSpec::pinning()};
  const PhasePoint p(0.5, 0.05);
  const long ladder[] = {0, 64, 256};
  const auto lat = m.lattice_for(256);
  const auto r = annealed_ladder(m, p, ladder, lat);
  for (std::size_t j = 0; j < 3; ++j)
    EXPECT_NEAR(r[j].log_free, annealed_partition(lat, m.walk, m.charge, m.potential, p, ladder[j], false), 1e-12);
}

TEST(Annealed, SuperAdditiveConstrained) {
  const TransferModel m{WalkSpec(0.6), kGauss, PotentialSpec::power_tail(3.0)};
  for (double h : {-0.1, 0.2, 0.6}) {
    const PhasePoint p(1.0, h);
    const long ladder[] = {200, 300, 500};
    const auto r = annealed_ladder(m, p, ladder);
    EXPECT_GE(r[2].log_constrained, r[0].log_constrained + r[1].log_constrained - 1e-10) << h;
  }
}

TEST(Annealed, MonotoneInH) {
  const TransferModel m{WalkSpec(0.6), kGauss, PotentialSpec::power_tail(3.0)};
  const long ladder[] = {256};
  double prev = std::numeric_limits<double>::infinity();
  for (double h = -0.5; h <= 1.0; h += 0.25) {
    const double v = annealed_ladder(m, PhasePoint(0.8, h), ladder)[0].log_free;
    EXPECT_LE(v, prev + 1e-12);
    prev = v;
  }
}

TEST(Annealed, ConvexInBetaAndH) {
  const TransferModel m{WalkSpec(0.4), kGauss, PotentialSpec::power_tail(2.0)};
  const long ladder[] = {256};
  auto f = [&](double b, double h) { return annealed_ladder(m, PhasePoint(b, h), ladder)[0].log_free; };
  const double b0 = 0.3, h0 = 0.5, b1 = 1.4, h1 = -0.2;
  for (double t : {0.25, 0.5, 0.75})
    EXPECT_LE(f((1 - t) * b0 + t * b1, (1 - t) * h0 + t * h1), (1 - t) * f(b0, h0) + t * f(b1, h1) + 1e-12);
}

TEST(FreeEnergy, SignExamples) {
  const TransferModel m{WalkSpec(0.6), kGauss, PotentialSpec::pinning()};
  const long ladder[] = {1024, 2048, 4096};
  const auto zero = annealed_free_energy(m, {0.0, 0.5}, ladder);
  EXPECT_LE(zero.lower(), 0.0);
  EXPECT_GE(zero.upper(), 0.0);
  EXPECT_LT(zero.f_free(), 1e-12);
  const auto neg_h = annealed_free_energy(m, {0.0, -0.5}, ladder);
  EXPECT_GT(neg_h.lower(), 0.0);
  const auto beta = annealed_free_energy(m, {1.0, 0.0}, ladder);
  EXPECT_GT(beta.lower(), 0.0);
  EXPECT_TRUE(beta.converged);
}

TEST(FreeEnergy, ConstrainedBelowFree) {
  const TransferModel m{WalkSpec(0.6), kGauss, PotentialSpec::power_tail(3.0)};
  const long ladder[] = {256, 512, 1024, 2048};
  for (double h : {-0.3, 0.0, 0.4}) {
    const auto e = annealed_free_energy(m, {0.7, h}, ladder);
    for (const auto& r : e.per_n) EXPECT_LE(r.log_constrained, r.log_free + 1e-12);
  }
}

TEST(FreeEnergy, LadderValidation) {
  const TransferModel m{WalkSpec(0.5), kGauss, PotentialSpec::pinning()};
  const long odd[] = {100, 201};
  const long single[] = {100};
  const long decreasing[] = {200, 100};
  EXPECT_THROW(annealed_free_energy(m, {1, 0}, odd), DomainError);
  EXPECT_THROW(annealed_free_energy(m, {1, 0}, single), DomainError);
  EXPECT_THROW(annealed_free_energy(m, {1, 0}, decreasing), DomainError);
}

TEST(FreeEnergy, QuenchedBetweenZeroAndAnnealed) {
  const TransferModel m{WalkSpec(0.6), kGauss, PotentialSpec::power_tail(3.0)};
  const long ladder[] = {512, 1024};
  for (double h : {0.05, 0.3}) {
    const PhasePoint p(0.8, h);
    const auto q = quenched_free_energy(m, p, ladder, 16, 3);
    const auto a = annealed_free_energy(m, p, ladder);
    EXPECT_LE(q.value, a.value + 3 * q.std_error);
    EXPECT_GE(q.upper(), 0.0);
  }
}

TEST(FreeEnergy, ThreadCountDoesNotChangeResult) {
  const TransferModel m{WalkSpec(0.6), kGauss, PotentialSpec::pinning()};
  const long ladder[] = {256, 512};
  const auto a = quenched_free_energy_samples(m, {1.0, 0.2}, ladder, 7, 99, 1);
  const auto b = quenched_free_energy_samples(m, {1.0, 0.2}, ladder, 7, 99, 3);
  EXPECT_EQ(a.estimate.value, b.estimate.value);
  EXPECT_EQ(a.estimate.std_error, b.estimate.std_error);
  for (std::size_t s = 0; s < a.samples.size(); ++s) {
    EXPECT_EQ(a.samples[s].seed, b.samples[s].seed);
    EXPECT_EQ(a.samples[s].per_n[1].log_free, b.samples[s].per_n[1].log_free);
  }
  const auto c = quenched_free_energy_samples(m, {1.0, 0.2}, ladder, 7, 100, 1);
  EXPECT_NE(a.estimate.value, c.estimate.value);
}

TEST(CompareFreeConstrained, Properties) {
  const TransferModel m{WalkSpec(0.6), kGauss, PotentialSpec::pinning()};
  const long ladder[] = {0, 128, 129, 1024, 4096};
  const auto d = compare_free_constrained(m, {1.0, 0.0}, ladder);
  EXPECT_EQ(d[0], 0.0);
  EXPECT_TRUE(std::isinf(d[2]));
  EXPECT_GE(d[1], 0.0);
  EXPECT_LT(d[4], d[3]);  // localized: the gap closes like log N / N
  const auto omega = disorder_sequence(kGauss, 1, 0, 4096);
  const auto q = compare_free_constrained(m, {1.0, 0.0}, ladder, omega);
  EXPECT_EQ(q[0], 0.0);
  EXPECT_GE(q[3], 0.0);
}

TEST(ExcursionKernel, MatchesPathEnumeration) {
  const WalkSpec w(0.65, 64);
  const auto spec = PotentialSpec::power_tail(1.0);
  const PhasePoint p(0.9, 0.1);
  const long M = 12;
  const HeightLattice lat{static_cast<int>(M), true};
  const auto site = detail::annealed_site_weights(kGauss, spec, p, lat);
  const auto k = excursion_kernel(w, lat, site, M);
  // A(m): paths whose first return to 0 happens at step m.
  std::vector<double> A(M + 1, 0.0), K(M + 1, 0.0);
  std::function<void(long, long, double, double)> rec = [&](long n, long x, double acc, double prob) {
    if (n > 0 && x == 0) {
      A[n] += acc;
      K[n] += prob;
      return;
    }
    if (n == M) return;
    for (int d : {+1, -1}) {
      const double q = transition_prob(w, x, d);
      rec(n + 1, x + d, acc * q * std::exp(psi(kGauss, spec, p, x + d)), prob * q);
    }
  };
  rec(0, 0, 1.0, 1.0);
  for (long m = 1; m <= M; ++m) {
    EXPECT_NEAR(k.A[m], A[m], 1e-14 * std::max(1.0, A[m])) << m;
    EXPECT_NEAR(k.K[m], K[m], 1e-15) << m;
  }
}

TEST(Renewal, AgreesWithTransferLadder) {
  const TransferModel m{WalkSpec(0.5), kGauss, PotentialSpec::pinning()};
  const PhasePoint p(0.0, -0.2);  // sum K e^{0.2} > 1
  const auto r = annealed_free_energy_renewal(m, p);
  EXPECT_TRUE(r.localized);
  // SRW pinning: sum_n K(n) x^n = 1 - sqrt(1 - x^2); e^{0.2}(1 - sqrt(1 - e^{-2F})) = 1.
  const double F = -0.5 * std::log(1.0 - std::pow(1.0 - std::exp(-0.2), 2));
  EXPECT_NEAR(r.value, F, 1e-9);
  const long ladder[] = {4096, 8192};
  const auto t = annealed_free_energy(m, p, ladder);
  EXPECT_NEAR(t.value, F, t.error);
  const auto d = annealed_free_energy_renewal(m, {0.0, 0.2});
  EXPECT_FALSE(d.localized);
  EXPECT_EQ(d.value, 0.0);
}
