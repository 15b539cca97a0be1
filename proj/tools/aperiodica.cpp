// aperiodica: command-line front end. Exit codes: 0 pass, 1 gate failure,
// 2 usage or validation error.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "aperiodica/pipeline.hpp"
#include "aperiodica/topology.hpp"

using namespace aperiodica;

namespace {

constexpr int kPass = 0, kGateFailure = 1, kUsage = 2;

std::pair<double, double> parse_pair(const std::string& s, const char* what) {
  const auto v = parse_list(s);
  if (v.size() != 2 || !(v[1] > v[0])) fail(ErrorCode::invalid_argument, std::string(what) + " needs a,b with a < b");
  return {v[0], v[1]};
}

std::vector<Box<1>> parse_boxes(const std::vector<std::string>& specs) {
  std::vector<Box<1>> out;
  for (const auto& s : specs) {
    const auto [a, b] = parse_pair(s, "interval");
    out.push_back(interval(a, b));
  }
  return out;
}

void emit(const json& j, const std::string& out) {
  if (out.empty())
    std::cout << j.dump(2) << "\n";
  else
    write_text(out, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  std::string kind = "lattice";
  std::string spec;
  std::string window = "0,100";
  std::uint64_t seed = 0;
  double spacing = 1.0;
  double epsilon = 0.1;
  std::string displacement = "iid";
  double occupation = 0.5;
  std::string out = "comb.csv";
};

GeneratorSpec spec_for_kind(const GenerateArgs& a) {
  if (!a.spec.empty()) return load_generator(a.spec).spec();
  GeneratorSpec s;
  if (a.kind == "perturbed-lattice") {
    s = perturbed_lattice(a.spacing, a.epsilon, displacement_rule_from_string(a.displacement), a.seed).spec();
  } else if (a.kind == "bernoulli-lattice") {
    s = bernoulli_lattice(a.spacing, a.occupation, a.seed).spec();
  } else if (a.kind == "lattice") {
    s = lattice(a.spacing).spec();
  } else {
    s = named_generator(a.kind).spec();
  }
  s.seed = a.seed;
  return s;
}

int cmd_generate(const GenerateArgs& a) {
  const GeneratorSpec s = spec_for_kind(a);
  const auto [lo, hi] = parse_pair(a.window, "--window");
  const WeightedComb<1> c = Generator(s).produce(interval(lo, hi));
  write_comb(a.out, c, &s);
  std::cerr << c.size() << " points written to " << a.out << "\n";
  return kPass;
}

// ---------------------------------------------------------------------------
// autocorr, diffract, purity

struct SequenceArgs {
  std::string in = "lattice";
  int nmax = 8;
  double base = 100.0;
  double factor = 2.0;
};

VanHoveSequence<1> sequence_of(const SequenceArgs& s) {
  if (s.nmax < 0) fail(ErrorCode::invalid_argument, "--nmax must be nonnegative");
  return default_van_hove<1>(s.base, s.factor, s.nmax);
}

int cmd_autocorr(const SequenceArgs& sa, double range, double eps, const std::string& out, int workers) {
  const Generator gen = load_generator(sa.in);
  const auto gammas = autocorr_van_hove(gen, sequence_of(sa), eps, range, workers);
  write_autocorrelation(out, gammas.back());
  json conv = json::array();
  for (std::size_t n = 1; n < gammas.size(); ++n) conv.push_back(max_coefficient_change(gammas[n - 1], gammas[n]));
  emit({{"out", out}, {"coefficients", gammas.back().size()}, {"cauchy_changes", conv}}, "");
  return kPass;
}

int cmd_diffract(const SequenceArgs& sa, const std::string& krange, double residual_tol, const std::string& out,
                 int workers) {
  const Generator gen = load_generator(sa.in);
  PeakScanOptions po;
  std::tie(po.k_lo, po.k_hi) = parse_pair(krange, "--range");
  po.residual_tol = residual_tol;
  po.workers = workers;
  const DiffractionSpectrum s = peak_scan(gen, sequence_of(sa), po);
  write_spectrum(out, s);
  emit(spectrum_summary(s), "");
  return kPass;
}

int cmd_purity(const std::string& gamma_path, const std::string& spectrum_path, const std::string& phi_spec,
               double gate) {
  const Autocorrelation<1> gamma = read_autocorrelation(gamma_path);
  DiffractionSpectrum s = read_spectrum(spectrum_path);
  const double p = purity(gamma, s, parse_test_function(phi_spec));
  const bool pass = p >= gate;
  emit({{"purity", gate_entry(p, gate, "purity >= " + format_double(gate), pass)},
        {"denominator", s.denominator},
        {"atoms", s.atoms.size()},
        {"phi", phi_spec}},
       "");
  return pass ? kPass : kGateFailure;
}

// ---------------------------------------------------------------------------
// topology

struct TopologyArgs {
  std::string in;
  std::string other;
  std::vector<std::string> K{"-1,1"};
  double V = 0.1;
  double t0 = 0.0, step = 0.1, R = 20.0;
  std::size_t count = 100;
  double r = 3.0, eps = 1e-6;
  std::vector<std::string> C;
  std::vector<std::string> F;
};

PointSetWindowed<1> point_set_from(const std::string& path) { return support_of(read_comb(path)); }

int cmd_topology(const std::string& which, const TopologyArgs& a) {
  const PointSetWindowed<1> P = point_set_from(a.in);
  json j;
  j["check"] = which;
  j["input"] = a.in;
  if (which == "ukv") {
    if (a.other.empty()) fail(ErrorCode::invalid_argument, "ukv needs --other");
    const UKVParams<1> u{BoxUnion<1>{parse_boxes(a.K)}, {a.V}};
    j["related"] = ukv_related(P, point_set_from(a.other), u);
  } else if (which == "repetitivity") {
    const UKVParams<1> u{BoxUnion<1>{parse_boxes(a.K)}, {a.V}};
    const RepetitivityReport r = repetitivity_scan(P, u, a.t0, a.step, a.count, a.R);
    j["dense"] = r.dense;
    j["max_gap"] = r.max_gap;
    j["witnesses"] = r.witnesses.size();
    j["tested"] = r.tested;
    j["R"] = a.R;
  } else if (which == "flc") {
    const FlcReport r = flc_check(P, a.r, a.eps);
    j["flc"] = r.flc;
    j["window_lengths"] = r.window_lengths;
    j["counts"] = r.counts;
  } else if (which == "fell") {
    const FellBasisElement<1> b{BoxUnion<1>{parse_boxes(a.C)}, parse_boxes(a.F)};
    j["member"] = fell_member(P, b);
  } else {
    fail(ErrorCode::invalid_argument, "unknown topology check '" + which + "'");
  }
  emit(j, "");
  return kPass;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  SequenceArgs seq;
  std::string phi = "tent:0.5";
  std::string psi = "tent:3";
  double tmax = 5.0;
  double tol = 0.0;  // 0: per-check default
  std::string krange = "-3,3";
  std::vector<double> probes{0.25, 0.5, 1.0};
  std::string window = "0.3,0.7";
  double horizon = 200.0;
  std::string out;
};

double tol_or(const VerifyArgs& a, double fallback) { return a.tol > 0.0 ? a.tol : fallback; }

DiffractionSpectrum scan_with_purity(const Generator& gen, const VanHoveSequence<1>& seq, const VerifyArgs& a,
                                     int workers) {
  PeakScanOptions po;
  std::tie(po.k_lo, po.k_hi) = parse_pair(a.krange, "--range");
  po.workers = workers;
  DiffractionSpectrum s = peak_scan(gen, seq, po);
  const Box<1>& B = seq.boxes.back();
  const TestFunction<1> phi = tent1(0.0, 0.5);
  const double R = 2.0;
  const WeightedComb<1> comb = gen.produce(interval(B.lo[0] - R - 1.0, B.hi[0] + R + 1.0));
  purity(autocorrelation<1>(comb, B, 0.0, R, workers), s, phi);
  return s;
}

int cmd_verify(const std::string& which, const VerifyArgs& a, int workers) {
  const Generator gen = load_generator(a.seq.in);
  const VanHoveSequence<1> seq = sequence_of(a.seq);
  json j;
  j["check"] = which;
  j["generator"] = spec_to_json(gen.spec());
  bool pass = true;
  if (which == "dworkin") {
    const double tol = tol_or(a, 5e-2);
    std::vector<double> ts;
    for (double t = -std::floor(a.tmax); t <= a.tmax + 1e-9; t += 1.0) ts.push_back(t);
    const DworkinReport r =
        dworkin_identity_report(gen, parse_test_function(a.phi), parse_test_function(a.psi), ts, seq, workers);
    pass = r.max_rel_error <= tol && !r.truncated;
    j["max_rel_error"] = gate_entry(r.max_rel_error, tol, "max relative error <= " + format_double(tol), pass);
    j["max_scaled_error"] = r.max_scaled_error;
    json rows = json::array();
    for (std::size_t i = 0; i < r.t.size(); ++i)
      rows.push_back({{"t", r.t[i]}, {"correlation", cplx_json(r.correlation[i])}, {"pairing", cplx_json(r.pairing[i])}});
    j["rows"] = rows;
  } else if (which == "spectralmass") {
    const double tol = tol_or(a, 5e-2);
    const DiffractionSpectrum s = scan_with_purity(gen, seq, a, workers);
    const Box<1>& B = seq.boxes.back();
    const WeightedComb<1> comb = gen.produce(interval(B.lo[0] - 4.0, B.hi[0] + 4.0));
    std::vector<Box<1>> last(seq.boxes.end() - std::min<std::ptrdiff_t>(3, std::ssize(seq.boxes)), seq.boxes.end());
    std::vector<TestFunction<1>> probes;
    for (double h : a.probes) probes.push_back(tent1(0.0, h));
    double worst = 0.0;
    json rows = json::array();
    for (const Atom& atom : s.atoms) {
      const SpectralMassReport r = best_spectral_mass(comb, probes, atom.k, last);
      worst = std::max(worst, r.rel_error);
      rows.push_back({{"k", atom.k}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"rel_error", r.rel_error}});
    }
    pass = worst <= tol;
    j["max_rel_error"] = gate_entry(worst, tol, "best-probe relative error <= " + format_double(tol), pass);
    j["atoms"] = rows;
  } else if (which == "eigengroup") {
    const double rate = tol_or(a, 0.95);
    const DiffractionSpectrum s = scan_with_purity(gen, seq, a, workers);
    EigenGroupOptions eo;
    eo.k_lo = s.k_lo;
    eo.k_hi = s.k_hi;
    eo.floor = s.floor;
    eo.workers = workers;
    std::vector<TestFunction<1>> probes;
    for (double h : a.probes) probes.push_back(tent1(0.0, h));
    const EigenGroupReport r = eigenvalue_group_check(s, gen, probes, seq.boxes.back(), eo);
    const bool sums = r.pairwise_pass_rate >= rate, neg = r.negation_closure_rate >= 1.0;
    pass = sums && neg;
    j["pairwise_pass_rate"] = gate_entry(r.pairwise_pass_rate, rate, "rate >= " + format_double(rate), sums);
    j["negation_closure_rate"] = gate_entry(r.negation_closure_rate, 1.0, "rate == 1", neg);
    j["closure_pass_rate"] = r.closure_pass_rate;
    j["generators"] = r.generators;
    j["threshold_factor"] = r.threshold_factor;
  } else if (which == "zerowindow") {
    const double tol = tol_or(a, 1e-3);
    const auto [lo, hi] = parse_pair(a.window, "--window");
    const ZeroWindowReport r =
        spectral_measure_zero_check(gen, parse_test_function(a.phi), lo, hi, seq, a.horizon, workers);
    const double rel = std::abs(r.relative_mass());
    pass = rel <= tol;
    j["relative_mass"] = gate_entry(rel, tol, "|rho(g)| / ||f||^2 <= " + format_double(tol), pass);
    j["box_lengths"] = r.box_lengths;
    j["masses"] = r.masses;
    j["norms"] = r.norms;
  } else {
    fail(ErrorCode::invalid_argument, "unknown verify check '" + which + "'");
  }
  j["pass"] = pass;
  emit(j, a.out);
  return pass ? kPass : kGateFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffraction of weighted Dirac combs: autocorrelation, Bragg peaks, dynamical checks"};
  app.require_subcommand(1);
  app.fallthrough();
  int workers = default_workers();
  app.add_option("--workers", workers, "Worker threads (default APERIODICA_WORKERS or 1)")->check(CLI::PositiveNumber);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Write a comb window as CSV plus JSON sidecar");
  gen->add_option("--kind", ga.kind,
                  "lattice, fibonacci, fibonacci-substitution, thue-morse, period-doubling, perturbed-lattice, "
                  "bernoulli-lattice");
  gen->add_option("--spec", ga.spec, "Generator spec JSON file (overrides --kind)");
  gen->add_option("--window", ga.window, "Window a,b");
  gen->add_option("--seed", ga.seed, "Seed for randomized kinds");
  gen->add_option("--spacing", ga.spacing, "Lattice spacing");
  gen->add_option("--epsilon", ga.epsilon, "Displacement amplitude (perturbed-lattice)");
  gen->add_option("--displacement", ga.displacement, "iid or quasiperiodic");
  gen->add_option("--occupation", ga.occupation, "Site occupation (bernoulli-lattice)");
  gen->add_option("--out", ga.out, "Output CSV");

  auto add_sequence = [](CLI::App* c, SequenceArgs& s) {
    c->add_option("--in", s.in, "Generator spec JSON file or generator name");
    c->add_option("--nmax", s.nmax, "Largest van Hove index");
    c->add_option("--base", s.base, "Side of B_0");
    c->add_option("--factor", s.factor, "Growth factor per step");
  };

  SequenceArgs aa;
  double a_range = 50.0, a_eps = 0.0;
  std::string a_out = "gamma.csv";
  auto* ac = app.add_subcommand("autocorr", "Van Hove autocorrelation coefficients");
  add_sequence(ac, aa);
  ac->add_option("--range", a_range, "Coefficient range R");
  ac->add_option("--eps", a_eps, "Binning tolerance (0 = exact matching)");
  ac->add_option("--out", a_out, "Output CSV");

  SequenceArgs da;
  std::string d_range = "-3,3", d_out = "spectrum.csv";
  double d_res = 0.05;
  auto* df = app.add_subcommand("diffract", "Peak scan of the diffraction measure");
  add_sequence(df, da);
  df->add_option("--range", d_range, "k range a,b");
  df->add_option("--residual-tol", d_res, "Cauchy residual tolerance");
  df->add_option("--out", d_out, "Output CSV");

  std::string p_gamma, p_spec, p_phi = "tent:0.5";
  double p_gate = 0.98;
  auto* pu = app.add_subcommand("purity", "Pure-point fraction from gamma and spectrum CSVs");
  pu->add_option("--gamma", p_gamma, "Autocorrelation CSV")->required();
  pu->add_option("--spectrum", p_spec, "Spectrum CSV")->required();
  pu->add_option("--phi", p_phi, "Test function shape:halfwidth[@center]");
  pu->add_option("--gate", p_gate, "Purity gate");

  std::string t_which;
  TopologyArgs ta;
  auto* to = app.add_subcommand("topology", "Local rubber and Fell topology checks on a comb CSV");
  to->add_option("check", t_which, "ukv, repetitivity, flc or fell")->required();
  to->add_option("--in", ta.in, "Comb CSV")->required();
  to->add_option("--other", ta.other, "Second comb CSV (ukv)");
  to->add_option("--K", ta.K, "Compact set K as intervals a,b (repeatable)");
  to->add_option("--V", ta.V, "Radius of V");
  to->add_option("--t0", ta.t0, "First translation (repetitivity)");
  to->add_option("--step", ta.step, "Translation step (repetitivity)");
  to->add_option("--count", ta.count, "Number of translations (repetitivity)");
  to->add_option("--R", ta.R, "Relative-density radius (repetitivity)");
  to->add_option("--r", ta.r, "Patch radius (flc)");
  to->add_option("--eps", ta.eps, "Patch matching tolerance (flc)");
  to->add_option("--C", ta.C, "Compact set C as intervals a,b (fell)");
  to->add_option("--F", ta.F, "Open sets F as intervals a,b (fell)");

  std::string v_which;
  VerifyArgs va;
  auto* ve = app.add_subcommand("verify", "Dynamical identities with pass/fail margins");
  ve->add_option("check", v_which, "dworkin, spectralmass, eigengroup or zerowindow")->required();
  add_sequence(ve, va.seq);
  ve->add_option("--phi", va.phi, "Test function phi");
  ve->add_option("--psi", va.psi, "Test function psi (dworkin)");
  ve->add_option("--tmax", va.tmax, "Largest |t| (dworkin)");
  ve->add_option("--tol", va.tol, "Gate tolerance (default per check)");
  ve->add_option("--range", va.krange, "k range a,b");
  ve->add_option("--probes", va.probes, "Tent halfwidths for Weyl-sum probes")->delimiter(',');
  ve->add_option("--window", va.window, "Spectral window a,b (zerowindow)");
  ve->add_option("--horizon", va.horizon, "Correlation horizon T (zerowindow)");
  ve->add_option("--out", va.out, "Write the JSON report here instead of stdout");

  std::string r_config, r_preset, r_out;
  auto* ru = app.add_subcommand("run", "Full pipeline from a config file or preset");
  auto* cfg_opt = ru->add_option("--config", r_config, "INI or JSON config");
  ru->add_option("--preset", r_preset, "Built-in preset")->excludes(cfg_opt);
  ru->add_option("--out", r_out, "Output directory (overrides config)");

  bool s_list = false;
  double s_tau = 0.0;
  auto* st = app.add_subcommand("selftest", "Quick checks of every module (TAP output)");
  st->add_flag("--list", s_list, "Print check names without running");
  st->add_option("--mutate-tau", s_tau, "Place Fibonacci points with this slope instead of tau");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  try {
    if (*gen) return cmd_generate(ga);
    if (*ac) return cmd_autocorr(aa, a_range, a_eps, a_out, workers);
    if (*df) return cmd_diffract(da, d_range, d_res, d_out, workers);
    if (*pu) return cmd_purity(p_gamma, p_spec, p_phi, p_gate);
    if (*to) return cmd_topology(t_which, ta);
    if (*ve) return cmd_verify(v_which, va, workers);
    if (*ru) {
      if (r_config.empty() && r_preset.empty()) {
        std::cerr << "run needs --config or --preset (";
        for (const auto& p : preset_names()) std::cerr << " " << p;
        std::cerr << " )\n";
        return kUsage;
      }
      RunConfig c = r_preset.empty() ? config_from_map(load_config(r_config)) : preset(r_preset);
      if (app.count("--workers") > 0 || std::getenv("APERIODICA_WORKERS")) c.workers = workers;
      if (!r_out.empty()) c.out_dir = r_out;
      return run_pipeline(c).exit_code;
    }
    if (*st) {
      if (s_list) {
        for (const auto& c : self_checks()) std::cout << c.name << "\n";
        return kPass;
      }
      return run_selftest({s_tau}, std::cout).failures == 0 ? kPass : kGateFailure;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
