#pragma once

// Model ingredients: interaction potentials, charge laws, the Bessel random walk
// and the height lattice its exact recursions run on.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pinning/error.hpp"
#include "pinning/numerics.hpp"

namespace pinning {

enum class PotentialKind { pinning, copolymer, power_tail, table };

// Non-negative interaction potential phi on the integers.
//
// Compactly supported kinds (pinning, copolymer towards +inf, table) report
// theta = +inf and c_tail = 0: there is no polynomial tail to speak of.
class PotentialSpec {
 public:
  // phi(x) = amplitude * 1{x = 0}
  static PotentialSpec pinning(double amplitude = 1.0) {
    require(amplitude > 0.0 && std::isfinite(amplitude), "pinning amplitude must be positive");
    PotentialSpec s(PotentialKind::pinning);
    s.amplitude_ = amplitude;
    s.symmetric_ = true;
    return s;
  }

  // phi(x) = 1{x <= 0}
  static PotentialSpec copolymer() {
    PotentialSpec s(PotentialKind::copolymer);
    s.symmetric_ = false;
    return s;
  }

  // phi(x) = c_tail * (1 + |x|)^-theta, so |x|^theta phi(x) -> c_tail.
  static PotentialSpec power_tail(double theta, double c_tail = 1.0) {
    require(theta > 0.0 && std::isfinite(theta), "power_tail needs a finite theta > 0");
    require(c_tail > 0.0 && std::isfinite(c_tail), "power_tail needs c_tail > 0");
    PotentialSpec s(PotentialKind::power_tail);
    s.theta_ = theta;
    s.c_tail_ = c_tail;
    s.symmetric_ = true;
    return s;
  }

  // Finite table; heights that are absent evaluate to 0.
  static PotentialSpec table(std::map<long, double> values) {
    bool any_positive = false;
    for (const auto& [x, v] : values) {
      require(std::isfinite(v) && v >= 0.0,
              "potential table values must be finite and non-negative (height " +
                  std::to_string(x) + ")");
      any_positive = any_positive || v > 0.0;
    }
    require(any_positive, "potential table needs at least one strictly positive value");
    PotentialSpec s(PotentialKind::table);
    s.symmetric_ = true;
    for (const auto& [x, v] : values) {
      auto it = values.find(-x);
      const double mirror = it == values.end() ? 0.0 : it->second;
      if (mirror != v) s.symmetric_ = false;
    }
    s.values_ = std::move(values);
    return s;
  }

  double operator()(long x) const {
    switch (kind_) {
      case PotentialKind::pinning:
        return x == 0 ? amplitude_ : 0.0;
      case PotentialKind::copolymer:
        return x <= 0 ? 1.0 : 0.0;
      case PotentialKind::power_tail:
        return c_tail_ * std::pow(1.0 + std::abs(static_cast<double>(x)), -theta_);
      case PotentialKind::table: {
        auto it = values_.find(x);
        return it == values_.end() ? 0.0 : it->second;
      }
    }
    return 0.0;
  }

  PotentialKind kind() const { return kind_; }
  double theta() const { return theta_; }
  double c_tail() const { return c_tail_; }
  bool symmetric() const { return symmetric_; }
  const std::map<long, double>& values() const { return values_; }

  // Largest |x| with phi(x) != 0; -1 when the support is unbounded.
  long support_radius() const {
    switch (kind_) {
      case PotentialKind::pinning:
        return 0;
      case PotentialKind::table: {
        long r = 0;
        for (const auto& [x, v] : values_)
          if (v > 0.0) r = std::max(r, std::abs(x));
        return r;
      }
      default:
        return -1;
    }
  }

  double sup_norm() const {
    switch (kind_) {
      case PotentialKind::pinning:
        return amplitude_;
      case PotentialKind::copolymer:
        return 1.0;
      case PotentialKind::power_tail:
        return c_tail_;
      case PotentialKind::table: {
        double m = 0.0;
        for (const auto& [x, v] : values_) m = std::max(m, v);
        return m;
      }
    }
    return 0.0;
  }

 private:
  explicit PotentialSpec(PotentialKind kind) : kind_(kind) {}

  PotentialKind kind_;
  double theta_ = kInf;
  double c_tail_ = 0.0;
  double amplitude_ = 1.0;
  bool symmetric_ = true;
  std::map<long, double> values_;
};

inline double phi_eval(const PotentialSpec& spec, long x) { return spec(x); }

// Two-column `height<TAB>value` format; blank lines and lines starting with '#'
// are skipped.
inline PotentialSpec parse_potential_table(std::istream& in) {
  std::map<long, double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    require(tab != std::string::npos,
            "potential table line " + std::to_string(line_no) + ": expected height<TAB>value");
    const std::string hs = line.substr(0, tab);
    const std::string vs = line.substr(tab + 1);
    char* end = nullptr;
    const long height = std::strtol(hs.c_str(), &end, 10);
    require(end != hs.c_str() && *end == '\0',
            "potential table line " + std::to_string(line_no) + ": bad height '" + hs + "'");
    const double value = std::strtod(vs.c_str(), &end);
    require(end != vs.c_str() && *end == '\0',
            "potential table line " + std::to_string(line_no) + ": bad value '" + vs + "'");
    require(values.emplace(height, value).second,
            "potential table line " + std::to_string(line_no) + ": duplicate height");
  }
  return PotentialSpec::table(std::move(values));
}

inline PotentialSpec load_potential_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open potential table '" + path + "'");
  return parse_potential_table(in);
}

enum class ChargeLaw { gaussian_standard, bernoulli_pm1 };

// Centered, unit-variance charges with an everywhere-finite cumulant.
class ChargeModel {
 public:
  constexpr explicit ChargeModel(ChargeLaw law = ChargeLaw::gaussian_standard) : law_(law) {}

  ChargeLaw law() const { return law_; }

  // log M(t) = log E[exp(t omega)]
  double log_mgf(double t) const {
    switch (law_) {
      case ChargeLaw::gaussian_standard:
        return 0.5 * t * t;
      case ChargeLaw::bernoulli_pm1: {
        const double a = std::abs(t);
        return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
      }
    }
    return 0.0;
  }

  template <class Rng>
  double sample(Rng& rng) const {
    if (law_ == ChargeLaw::gaussian_standard) {
      std::normal_distribution<double> normal(0.0, 1.0);
      return normal(rng);
    }
    std::bernoulli_distribution coin(0.5);
    return coin(rng) ? 1.0 : -1.0;
  }

  template <class Rng>
  std::vector<double> sample_sequence(Rng& rng, std::size_t n) const {
    std::vector<double> out(n);
    if (law_ == ChargeLaw::gaussian_standard) {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (double& w : out) w = normal(rng);
    } else {
      std::bernoulli_distribution coin(0.5);
      for (double& w : out) w = coin(rng) ? 1.0 : -1.0;
    }
    return out;
  }

 private:
  ChargeLaw law_;
};

struct PhasePoint {
  double beta = 0.0;
  double h = 0.0;

  PhasePoint() = default;
  PhasePoint(double beta_, double h_) : beta(beta_), h(h_) {
    require(beta >= 0.0, "beta must be non-negative");
  }
};

// log M(beta phi(x)) - h phi(x)
inline double psi(const ChargeModel& charge, const PotentialSpec& spec, const PhasePoint& p,
                  long x) {
  const double f = spec(x);
  return charge.log_mgf(p.beta * f) - p.h * f;
}

// Nearest-neighbour chain with P(x -> x +- 1) = (1 +- d(x)) / 2 and
// d(x) = sign(x) * (-(alpha - 1/2) / |x| + corr_amplitude * |x|^-(1 + epsilon_corr)).
struct WalkSpec {
  double alpha = 0.5;
  double epsilon_corr = 0.0;
  double corr_amplitude = 0.0;
  int period = 2;
  int L_max = 1024;

  WalkSpec() = default;
  explicit WalkSpec(double alpha_, int L_max_ = 1024, double epsilon = 0.0,
                    double amplitude = 0.0)
      : alpha(alpha_), epsilon_corr(epsilon), corr_amplitude(amplitude), L_max(L_max_) {
    validate();
  }

  void validate() const {
    require(alpha > 0.0 && alpha < 1.0, "walk alpha must lie in (0, 1)");
    require(L_max >= 1, "walk L_max must be positive");
    require(epsilon_corr >= 0.0, "epsilon_corr must be non-negative");
    require(corr_amplitude == 0.0 || epsilon_corr > 0.0,
            "a drift correction needs epsilon_corr > 0");
    // |d(x)| <= |alpha - 1/2| + |corr_amplitude| for every x != 0.
    require(std::abs(alpha - 0.5) + std::abs(corr_amplitude) < 1.0,
            "drift must satisfy |d(x)| < 1");
  }

  double drift(long x) const {
    if (x == 0) return 0.0;
    const double ax = std::abs(static_cast<double>(x));
    double d = -(alpha - 0.5) / ax;
    if (corr_amplitude != 0.0) d += corr_amplitude * std::pow(ax, -(1.0 + epsilon_corr));
    return x > 0 ? d : -d;
  }

  WalkSpec with_L(int L) const {
    WalkSpec w = *this;
    w.L_max = L;
    return w;
  }
};

enum class BoundaryPolicy { reject, reflect };

// P(S_{n+1} = x + dir | S_n = x) on the lattice truncated at |x| = L_max.
inline double transition_prob(const WalkSpec& walk, long x, int dir,
                              BoundaryPolicy policy = BoundaryPolicy::reject) {
  require(dir == 1 || dir == -1, "direction must be +1 or -1");
  require(std::abs(x) <= walk.L_max, "height outside the truncated lattice");
  if (std::abs(x) == walk.L_max) {
    const bool outward = (x > 0) == (dir > 0);
    if (policy == BoundaryPolicy::reject && outward)
      throw BoundaryError("outward step at the truncation boundary");
    if (policy == BoundaryPolicy::reflect) return outward ? 0.0 : 1.0;
  }
  return 0.5 * (1.0 + dir * walk.drift(x));
}

// Heights -L..L (unfolded) or |x| = 0..L (folded, valid when phi is symmetric;
// the walk's drift is antisymmetric so |S| is itself Markov).
struct HeightLattice {
  int L = 0;
  bool folded = false;

  std::size_t size() const { return folded ? static_cast<std::size_t>(L) + 1 : 2 * static_cast<std::size_t>(L) + 1; }
  long height(std::size_t i) const { return folded ? static_cast<long>(i) : static_cast<long>(i) - L; }
  std::size_t origin() const { return folded ? 0 : static_cast<std::size_t>(L); }

  // L = ceil(4 sqrt(n)), large enough that the Gaussian tail beyond L is negligible
  // at horizon n.
  static int horizon_L(long n, int min_L = 8) {
    return std::max(min_L, static_cast<int>(std::ceil(4.0 * std::sqrt(static_cast<double>(std::max(n, 1L))))));
  }
  static HeightLattice for_horizon(long n, bool folded, int min_L = 8) {
    return {horizon_L(n, min_L), folded};
  }
};

// Transition structure of a WalkSpec on a HeightLattice with the outward step at
// the boundary folded onto the inward one.
class LatticeChain {
 public:
  LatticeChain(const WalkSpec& walk, HeightLattice lattice) : lattice_(lattice) {
    walk.validate();
    require(lattice.L >= 1, "lattice needs L >= 1");
    const std::size_t n = lattice.size();
    up_.resize(n);
    down_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const long x = lattice.height(i);
      const double d = walk.drift(x);
      up_[i] = 0.5 * (1.0 + d);
      down_[i] = 0.5 * (1.0 - d);
    }
    // Folded: 0 -> 1 surely. Unfolded: index 0 is -L, reflected upward.
    up_[0] = 1.0;
    down_[0] = 0.0;
    outward_[0] = lattice.folded ? 0.0 : 0.5 * (1.0 - walk.drift(-lattice.L));
    outward_[1] = 0.5 * (1.0 + walk.drift(lattice.L));
    up_[n - 1] = 0.0;
    down_[n - 1] = 1.0;
  }

  const HeightLattice& lattice() const { return lattice_; }
  std::size_t size() const { return up_.size(); }
  const std::vector<double>& up() const { return up_; }
  const std::vector<double>& down() const { return down_; }

  // out = in * P (one step of the forward equation).
  void step(const double* in, double* out) const {
    const std::size_t n = up_.size();
    out[0] = in[1] * down_[1];
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = in[i - 1] * up_[i - 1] + in[i + 1] * down_[i + 1];
    out[n - 1] = in[n - 2] * up_[n - 2];
  }

  // Probability mass that the boundary reflection redirects during one step from `in`.
  double reflected_mass(const double* in) const {
    const std::size_t n = up_.size();
    double m = in[n - 1] * outward_[1];
    if (!lattice_.folded) m += in[0] * outward_[0];
    return m;
  }

 private:
  HeightLattice lattice_;
  std::vector<double> up_;
  std::vector<double> down_;
  double outward_[2] = {0.0, 0.0};
};

}  // namespace pinning
