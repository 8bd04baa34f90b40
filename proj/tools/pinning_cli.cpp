// pinning: command-line front end for the spatially extended pinning toolkit.
//
//   pinning [--config FILE] [--seed U64] [--out DIR] [--threads N] [--format csv|json]
//           [model options] <subcommand> [subcommand options]
//
// Exit codes: 0 success, 2 invalid input or unwritable output, 3 numerical
// non-convergence.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "output.hpp"
#include "pinning/continuum.hpp"
#include "pinning/localization.hpp"
#include "pinning/scaling.hpp"
#include "pinning/transfer.hpp"
#include "pinning/walk_laws.hpp"

namespace pc = pinning::cli;
using namespace pinning;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitNonConvergence = 3;

struct ModelOptions {
  double alpha = 0.5;
  std::string potential = "pinning";
  double theta = 3.0;
  double c_tail = 1.0;
  double amplitude = 1.0;
  std::string table;
  std::string charges = "gaussian";
  int L_max = 1024;
};

struct Globals {
  std::uint64_t seed = 1;
  std::string out = ".";
  unsigned threads = 1;
  std::string format = "csv";
};

PotentialSpec make_potential(const ModelOptions& m) {
  if (m.potential == "pinning") return PotentialSpec::pinning(m.amplitude);
  if (m.potential == "copolymer") return PotentialSpec::copolymer();
  if (m.potential == "power_tail") return PotentialSpec::power_tail(m.theta, m.c_tail);
  if (m.potential == "table") {
    require(!m.table.empty(), "--potential table needs --table PATH");
    return load_potential_table(m.table);
  }
  throw DomainError("unknown potential '" + m.potential + "'");
}

ChargeModel make_charges(const ModelOptions& m) {
  if (m.charges == "gaussian") return ChargeModel(ChargeLaw::gaussian_standard);
  if (m.charges == "bernoulli") return ChargeModel(ChargeLaw::bernoulli_pm1);
  throw DomainError("unknown charge law '" + m.charges + "'");
}

// Everything that can change numerical output, in a fixed order; --out, --threads
// and --config are left out so that they never change the hash.
std::string canonical_config(const CLI::App& app, const CLI::App* sub) {
  std::string s;
  auto add = [&](const CLI::App& a, const std::string& prefix) {
    for (const CLI::Option* opt : a.get_options()) {
      const std::string name = opt->get_name(false, true);
      if (name.empty() || name == "--help" || name == "--out" || name == "--threads" ||
          name == "--config" || name == "--help-all")
        continue;
      std::string value;
      if (opt->count() > 0) {
        for (const auto& r : opt->results()) value += r + ";";
      } else {
        value = opt->get_default_str();
      }
      s += prefix + name + "=" + value + "\n";
    }
  };
  add(app, "");
  if (sub != nullptr) {
    s += "[" + sub->get_name() + "]\n";
    add(*sub, sub->get_name() + ".");
  }
  return s;
}

std::string header_line(std::uint64_t hash) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "pinning %s config_hash=%016" PRIx64, PINNING_VERSION, hash);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatially extended pinning toolkit"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_config("--config", "", "Key-value config file (TOML/INI subset)");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  ModelOptions mo;
  app.add_option("--seed", g.seed, "Root seed for all random streams")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (never changes output)")
      ->check(CLI::Range(1u, 1024u))
      ->capture_default_str();
  app.add_option("--format", g.format, "Table format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--alpha", mo.alpha, "Bessel walk parameter in (0,1)")->capture_default_str();
  app.add_option("--potential", mo.potential, "pinning | copolymer | power_tail | table")
      ->check(CLI::IsMember({"pinning", "copolymer", "power_tail", "table"}))
      ->capture_default_str();
  app.add_option("--theta", mo.theta, "power_tail exponent")->capture_default_str();
  app.add_option("--c-tail", mo.c_tail, "power_tail constant")->capture_default_str();
  app.add_option("--amplitude", mo.amplitude, "pinning amplitude")->capture_default_str();
  app.add_option("--table", mo.table, "height<TAB>value potential table");
  app.add_option("--charges", mo.charges, "gaussian | bernoulli")
      ->check(CLI::IsMember({"gaussian", "bernoulli"}))
      ->capture_default_str();
  app.add_option("--L-max", mo.L_max, "Height truncation for return-law recursions")
      ->capture_default_str();

  // free-energy
  auto* fe = app.add_subcommand("free-energy", "Annealed or quenched free energy along an N ladder");
  double fe_beta = 0.0, fe_h = 0.0;
  std::vector<long> fe_ladder{256, 512, 1024, 2048, 4096};
  bool fe_quenched = false;
  int fe_samples = 16;
  fe->add_option("--beta", fe_beta)->capture_default_str();
  fe->add_option("--h", fe_h)->capture_default_str();
  fe->add_option("--ladder", fe_ladder, "Increasing even system sizes")->delimiter(',')->capture_default_str();
  fe->add_flag("--quenched", fe_quenched, "Average log Z over disorder samples");
  fe->add_option("--samples", fe_samples)->capture_default_str();

  // critical-curve
  auto* cc = app.add_subcommand("critical-curve", "Annealed critical curve with MBG lower bound");
  std::vector<double> cc_betas{0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5};
  double cc_tol = 1e-3;
  long cc_m_max = 1L << 15;
  bool cc_quenched = false;
  int cc_samples = 200;
  long cc_N = 1L << 12;
  cc->add_option("--betas", cc_betas)->delimiter(',')->capture_default_str();
  cc->add_option("--tol", cc_tol)->capture_default_str();
  cc->add_option("--m-max", cc_m_max)->capture_default_str();
  cc->add_flag("--quenched", cc_quenched, "Add the Monte Carlo quenched bracket");
  cc->add_option("--samples", cc_samples)->capture_default_str();
  cc->add_option("--N", cc_N, "Quenched system size")->capture_default_str();

  // localize
  auto* lz = app.add_subcommand("localize", "Excursion-sum criterion at one phase point");
  double lz_beta = 0.0, lz_h = 0.0, lz_kappa = 1.0, lz_r = 1.0;
  long lz_m_max = 1L << 15;
  lz->add_option("--beta", lz_beta)->capture_default_str();
  lz->add_option("--h", lz_h)->capture_default_str();
  lz->add_option("--kappa", lz_kappa, "1 for N_0, 1/(1+alpha) for N_alpha")->capture_default_str();
  lz->add_option("--r", lz_r, "Return probability (depinning at 0)")->capture_default_str();
  lz->add_option("--m-max", lz_m_max)->capture_default_str();

  // bessel-check
  auto* bc = app.add_subcommand("bessel-check", "Return law, local limit weights, density normalisation");
  long bc_n_max = 1L << 14, bc_n_probe = 1L << 12;
  long bc_k_max = 8;
  bc->add_option("--n-max", bc_n_max)->capture_default_str();
  bc->add_option("--n-probe", bc_n_probe)->capture_default_str();
  bc->add_option("--k-max", bc_k_max)->capture_default_str();

  // scaling
  auto* sc = app.add_subcommand("scaling", "Weak-coupling harness: N F^ann(beta_N, h_N) and C_{TN,k}");
  double sc_beta_hat = 1.0, sc_h_hat = 0.1, sc_T = 1.0;
  std::vector<long> sc_ladder{256, 512, 1024, 2048, 4096, 8192};
  int sc_k = 0;
  sc->add_option("--beta-hat", sc_beta_hat)->capture_default_str();
  sc->add_option("--h-hat", sc_h_hat)->capture_default_str();
  sc->add_option("--ladder", sc_ladder)->delimiter(',')->capture_default_str();
  sc->add_option("--series-k", sc_k, "Also tabulate C_{TN,k} for k = 1..K (short range, K <= 3)")
      ->check(CLI::Range(0, 3))
      ->capture_default_str();
  sc->add_option("--T", sc_T)->capture_default_str();

  // continuum
  auto* ct = app.add_subcommand("continuum", "Continuum closed forms and Monte Carlo free energy");
  double ct_beta_hat = 1.0, ct_h_hat = 0.1, ct_T = 1.0, ct_dt = 1e-4;
  int ct_paths = 2000, ct_k = 4;
  std::string ct_scheme = "exact";
  ct->add_option("--beta-hat", ct_beta_hat)->capture_default_str();
  ct->add_option("--h-hat", ct_h_hat)->capture_default_str();
  ct->add_option("--T", ct_T)->capture_default_str();
  ct->add_option("--dt", ct_dt)->capture_default_str();
  ct->add_option("--paths", ct_paths)->capture_default_str();
  ct->add_option("--k", ct_k, "Highest series order reported (short range)")->capture_default_str();
  ct->add_option("--scheme", ct_scheme, "exact | euler")
      ->check(CLI::IsMember({"exact", "euler"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string header = header_line(fnv1a64(canonical_config(app, sub)));

  try {
    std::error_code ec;
    std::filesystem::create_directories(g.out, ec);
    if (!std::filesystem::is_directory(g.out)) throw pc::IoError("cannot create output directory '" + g.out + "'");

    const WalkSpec walk(mo.alpha, mo.L_max);
    const ChargeModel charge = make_charges(mo);
    const PotentialSpec spec = make_potential(mo);
    const TransferModel model{walk, charge, spec};
    bool converged = true;

    if (sub == fe) {
      const PhasePoint p(fe_beta, fe_h);
      pc::Table t{"free_energy", {"N", "log_Z_free", "log_Z_constrained", "f_free", "f_constrained"}, {}};
      FreeEnergyEstimate est;
      if (fe_quenched) {
        t.columns.insert(t.columns.begin(), {"sample", "seed"});
        const auto q = quenched_free_energy_samples(model, p, fe_ladder, fe_samples, g.seed, g.threads);
        for (const auto& s : q.samples)
          for (const auto& e : s.per_n)
            t.add({static_cast<long>(s.sample), s.seed, e.N, e.log_free, e.log_constrained, e.f_free(),
                   e.f_constrained()});
        est = q.estimate;
      } else {
        est = annealed_free_energy(model, p, fe_ladder);
        for (const auto& e : est.per_n)
          t.add({e.N, e.log_free, e.log_constrained, e.f_free(), e.f_constrained()});
      }
      pc::write_table(t, g.out, g.format, header);
      std::printf("value=%.10g error=%.3g stderr=%.3g samples=%d converged=%s\n", est.value, est.error,
                  est.std_error, est.samples, est.converged ? "yes" : "no");
      converged = est.converged;
    } else if (sub == cc) {
      CriticalSearch search;
      search.tol = cc_tol;
      search.m_max = cc_m_max;
      auto curve = annealed_critical_curve(walk, charge, spec, cc_betas, search, g.threads);
      pc::Table t{"critical_curve",
                  {"beta", "hc_ann_lo", "hc_ann_hi", "hc_mbg_lower", "hc_que_lo", "hc_que_hi", "confidence"},
                  {}};
      QuenchedSearch qs;
      qs.N = cc_N;
      qs.samples = cc_samples;
      qs.seed = g.seed;
      qs.tol = cc_tol;
      qs.threads = g.threads;
      for (std::size_t i = 0; i < cc_betas.size(); ++i) {
        const Bracket a = curve.hc_annealed[i];
        std::vector<pc::Cell> row{cc_betas[i], a.lo, a.hi, curve.hc_mbg_lower[i].value};
        if (cc_quenched) {
          const Bracket q = quenched_critical_h(model, cc_betas[i], a.hi, qs);
          row.insert(row.end(), {q.lo, q.hi, 0.975});
        } else {
          row.insert(row.end(), {std::string(), std::string(), std::string()});
        }
        t.add(std::move(row));
      }
      pc::write_table(t, g.out, g.format, header);
      for (std::size_t i = 0; i < cc_betas.size(); ++i)
        std::printf("beta=%g hc_ann=[%.6g, %.6g] mbg_lower=%.6g\n", cc_betas[i], curve.hc_annealed[i].lo,
                    curve.hc_annealed[i].hi, curve.hc_mbg_lower[i].value);
    } else if (sub == lz) {
      const auto c = transient_criterion(lz_r, walk, charge, spec, PhasePoint(lz_beta, lz_h), lz_m_max, lz_kappa);
      nlohmann::ordered_json r;
      r["beta"] = lz_beta;
      r["h"] = lz_h;
      r["kappa"] = lz_kappa;
      r["r"] = lz_r;
      r["threshold"] = c.threshold;
      r["n_alpha"] = c.infinite ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(c.n_alpha);
      r["m_max"] = c.m_max;
      r["tail_bound"] = c.infinite ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(c.tail_bound);
      r["tail_estimate"] = c.infinite ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(c.tail_estimate);
      r["localized"] = to_string(c.localized);
      if (g.format == "json") {
        pc::write_record("localize", r, g.out, header);
      } else {
        pc::Table t{"localize", {}, {}};
        std::vector<pc::Cell> row;
        for (const auto& [k, v] : r.items()) {
          t.columns.push_back(k);
          row.push_back(v.is_number_integer() ? pc::Cell(v.get<long>())
                        : v.is_number()       ? pc::Cell(v.get<double>())
                                              : pc::Cell(v.get<std::string>()));
        }
        t.add(std::move(row));
        pc::write_table(t, g.out, g.format, header);
      }
      std::printf("localized=%s n_alpha=%.10g tail_bound=%.3g\n", to_string(c.localized), c.n_alpha, c.tail_bound);
    } else if (sub == bc) {
      const ReturnLaw law = return_law(walk.with_L(std::max(mo.L_max, HeightLattice::horizon_L(bc_n_max))), bc_n_max);
      pc::Table rl{"return_law", {"n", "K", "survival"}, {}};
      for (long n = 1; n <= law.n_max(); ++n) rl.add({n, law.K[n], law.survival[n]});
      pc::write_table(rl, g.out, g.format, header);

      const CWeights est = estimate_c_weights(walk, bc_k_max, bc_n_probe);
      const CWeights stat = stationary_c_weights(walk, bc_k_max);
      pc::Table cw{"c_weights", {"k", "c_estimate", "c_stationary", "c_asymptote"}, {}};
      for (long k = 0; k <= bc_k_max; ++k)
        cw.add({k, est[k], stat[k], k == 0 ? 0.0 : c_weight_asymptote(walk.alpha, static_cast<double>(k))});
      pc::write_table(cw, g.out, g.format, header);

      pc::Table dn{"density_norm", {"alpha", "t", "integral"}, {}};
      for (double a : {0.25, 0.5, 0.75})
        for (double t : {0.5, 1.0, 2.0})
          dn.add({a, t, integrate_to_infinity([&](double y) { return bessel_density(a, t, 0.0, y); }, 0.0)});
      pc::write_table(dn, g.out, g.format, header);
      std::printf("return-law mass=%.12g truncation_warning=%s\n", law.total(), law.truncation_warning ? "yes" : "no");
    } else if (sub == sc) {
      const Regime regime = potential_regime(spec, walk.alpha);
      const double theta = spec.kind() == PotentialKind::power_tail ? spec.theta() : kInf;
      ContinuumParams params;
      params.alpha = walk.alpha;
      params.theta = theta;
      params.c_tail = spec.kind() == PotentialKind::power_tail ? spec.c_tail() : 1.0;
      params.regime = regime;
      const auto schedule = make_schedule(params, sc_beta_hat, sc_h_hat, sc_ladder);
      const auto pts = scaled_free_energy(schedule, walk, charge, spec, g.threads);
      double target = std::nan("");
      if (regime == Regime::short_range) {
        const auto w = stationary_c_weights(walk, 4000);
        target = continuum_free_energy_short(params, ContinuumPhasePoint(sc_beta_hat, sc_h_hat),
                                             c_star(spec, w, 1).value, c_star(spec, w, 2).value);
      }
      pc::Table t{"scaling", {"N", "beta_N", "h_N", "N_times_F", "continuum_target", "rel_gap"}, {}};
      for (const auto& p : pts) {
        const double gap = target > 0.0 ? std::abs(p.N_times_F - target) / target : std::nan("");
        t.add({p.N, p.beta_N, p.h_N, p.N_times_F, target, gap});
        std::printf("N=%ld N*F=%.8g target=%.8g rel_gap=%.4g\n", p.N, p.N_times_F, target, gap);
      }
      pc::write_table(t, g.out, g.format, header);
      if (sc_k > 0) {
        pc::Table s{"series", {"N", "k", "C_TNk", "hatC_gamma_ak", "hatC_gamma_ak_plus1"}, {}};
        for (int k = 1; k <= sc_k; ++k)
          for (const auto& r : compare_to_continuum(schedule, walk, charge, spec, sc_T, k))
            s.add({r.N, static_cast<long>(r.k), r.C_TNk, r.hatC_gamma_ak, r.hatC_gamma_ak_plus1});
        pc::write_table(s, g.out, g.format, header);
      }
    } else if (sub == ct) {
      const double theta = spec.kind() == PotentialKind::power_tail ? spec.theta() : kInf;
      ContinuumParams params;
      params.alpha = walk.alpha;
      params.theta = theta;
      params.c_tail = spec.kind() == PotentialKind::power_tail ? spec.c_tail() : 1.0;
      params.regime = potential_regime(spec, walk.alpha);
      const ContinuumPhasePoint cp(ct_beta_hat, ct_h_hat);
      nlohmann::ordered_json r;
      r["alpha"] = params.alpha;
      r["theta"] = std::isfinite(theta) ? nlohmann::ordered_json(theta) : nlohmann::ordered_json("inf");
      r["regime"] = to_string(params.regime);
      r["beta_hat"] = ct_beta_hat;
      r["h_hat"] = ct_h_hat;
      r["T"] = ct_T;
      const auto w = stationary_c_weights(walk, 4000);
      double c1 = std::nan(""), c2 = std::nan("");
      try {
        c1 = c_star(spec, w, 1).value;
      } catch (const DivergenceError&) {
      }
      try {
        c2 = c_star(spec, w, 2).value;
      } catch (const DivergenceError&) {
      }
      r["critical_exponent"] = std::isfinite(theta) ? critical_exponent(params.alpha, theta) : 2.0;
      if (params.regime == Regime::short_range) {
        r["cstar_phi"] = c1;
        r["cstar_phi2"] = c2;
        r["free_energy"] = continuum_free_energy_short(params, cp, c1, c2);
        r["critical_prefactor"] = continuum_critical_prefactor(params, c1, c2);
        auto series = nlohmann::ordered_json::array();
        for (int k = 1; k <= ct_k; ++k) {
          const auto h = hatC_short_range(params, cp, c1, c2, ct_T, k, k <= 3);
          nlohmann::ordered_json e;
          e["k"] = k;
          e["hatC_gamma_ak_plus1"] = h.canonical;
          e["hatC_gamma_ak"] = h.gamma_ak;
          if (h.brute_force) e["brute_force"] = *h.brute_force;
          series.push_back(e);
        }
        r["series"] = series;
      } else {
        McSettings s;
        s.scheme = ct_scheme == "euler" ? BesselScheme::euler_reflected : BesselScheme::exact;
        s.T = ct_T;
        s.dt = ct_dt;
        s.n_paths = ct_paths;
        s.seed = g.seed;
        s.threads = g.threads;
        const auto e = continuum_free_energy_mc(params, cp, s, std::isfinite(c2) ? c2 : 0.0);
        r["dt"] = ct_dt;
        r["n_paths"] = ct_paths;
        r["estimate"] = e.estimate;
        r["stderr"] = e.std_error;
        r["flagged"] = e.flagged;
        converged = !e.flagged;
      }
      pc::write_record("continuum", r, g.out, header);
      std::printf("%s\n", r.dump().c_str());
    }
    return converged ? kExitOk : kExitNonConvergence;
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNonConvergence;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalid;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalid;
  }
}
