#pragma once

// End-to-end runs: generator → van Hove autocorrelation → peak scan →
// purity, Dworkin and eigenvalue gates, with CSV/JSON artifacts. Also the
// quick self test used by `aperiodica selftest`.

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "autocorrelation.hpp"
#include "diffraction.hpp"
#include "dynamics.hpp"
#include "generators.hpp"
#include "io.hpp"
#include "spectral.hpp"
#include "topology.hpp"

namespace aperiodica {

enum class Expectation { pure_point, not_pure_point, none };

inline std::string to_string(Expectation e) {
  switch (e) {
    case Expectation::pure_point: return "pure-point";
    case Expectation::not_pure_point: return "not-pure-point";
    case Expectation::none: return "none";
  }
  return "none";
}

inline Expectation expectation_from_string(const std::string& s) {
  if (s == "pure-point") return Expectation::pure_point;
  if (s == "not-pure-point" || s == "expect-not-pure-point") return Expectation::not_pure_point;
  if (s == "none") return Expectation::none;
  fail(ErrorCode::parse_error, "unknown expectation '" + s + "'");
}

struct RunConfig {
  std::string name = "custom";
  GeneratorSpec generator;

  double vh_base = 100.0;
  double vh_factor = 2.0;
  int n_max = 8;

  double range = 10.0;  // R
  double k_lo = -3.0, k_hi = 3.0;
  double epsilon = 0.0;  // binning; 0 = exact matching

  double residual_tol = 0.05;
  double floor_factor = 1e-4;
  double purity_gate = 0.98;
  double not_pure_gate = 0.05;
  Expectation expect = Expectation::pure_point;
  double phi_halfwidth = 0.5;

  bool dworkin = true;
  double dworkin_tol = 5e-2;
  double dworkin_tmax = 5.0;
  double psi_halfwidth = 3.0;

  bool eigengroup = false;
  double eigen_pass_rate = 0.95;
  std::vector<double> eigen_probe_halfwidths{0.25, 0.5, 1.0};

  std::string out_dir = "aperiodica-out";
  int workers = 1;
};

/// Returns a list of problems; empty means valid.
inline std::vector<std::string> validate(const RunConfig& c) {
  std::vector<std::string> errs;
  auto positive = [&](double v, const char* what) {
    if (!(v > 0.0)) errs.push_back(std::string(what) + " must be positive");
  };
  positive(c.vh_base, "vanhove.base");
  if (!(c.vh_factor > 1.0)) errs.push_back("vanhove.factor must exceed 1");
  if (c.n_max < 3) errs.push_back("vanhove.nmax must be at least 3");
  positive(c.range, "range");
  if (!(c.k_hi > c.k_lo)) errs.push_back("k range must have k_lo < k_hi");
  if (!(c.epsilon >= 0.0)) errs.push_back("epsilon must be nonnegative");
  positive(c.residual_tol, "tolerance.residual");
  positive(c.floor_factor, "tolerance.floor");
  positive(c.purity_gate, "tolerance.purity");
  positive(c.not_pure_gate, "tolerance.not_pure");
  positive(c.phi_halfwidth, "phi halfwidth");
  positive(c.dworkin_tol, "tolerance.dworkin");
  positive(c.dworkin_tmax, "dworkin.tmax");
  positive(c.psi_halfwidth, "psi halfwidth");
  positive(c.eigen_pass_rate, "tolerance.eigen_pass_rate");
  if (c.workers < 1) errs.push_back("workers must be at least 1");
  const double first_box = c.vh_base * c.vh_factor;  // B_1
  if (c.range > first_box / 2.0) errs.push_back("range exceeds diam(B_1)/2");
  if (c.dworkin && c.dworkin_tmax + c.phi_halfwidth + c.psi_halfwidth > c.range)
    errs.push_back("dworkin.tmax plus test-function radii exceeds range");
  try {
    Generator g(c.generator);
  } catch (const Error& e) {
    errs.push_back(std::string("generator: ") + e.what());
  }
  return errs;
}

inline std::vector<std::string> preset_names() {
  return {"lattice-full", "fibonacci-full", "thue-morse-full", "period-doubling-full"};
}

inline RunConfig preset(const std::string& name) {
  RunConfig c;
  c.name = name;
  if (name == "lattice-full") {
    c.generator = lattice().spec();
    c.k_lo = -2.5;
    c.k_hi = 2.5;
  } else if (name == "fibonacci-full") {
    c.generator = fibonacci_model_set().spec();
    c.eigengroup = true;
  } else if (name == "thue-morse-full") {
    c.generator = thue_morse().spec();
    c.expect = Expectation::not_pure_point;
  } else if (name == "period-doubling-full") {
    c.generator = period_doubling().spec();
  } else {
    fail(ErrorCode::invalid_argument, "unknown preset '" + name + "'");
  }
  return c;
}

/// Applies flat keys on top of `c` (preset first if the map names one).
inline RunConfig config_from_map(const ConfigMap& m, RunConfig c = {}) {
  auto get = [&](const std::string& key) -> const std::string* {
    auto it = m.find(key);
    return it == m.end() ? nullptr : &it->second;
  };
  auto num = [&](const std::string& key, double& dst) {
    if (auto* v = get(key)) dst = parse_double(*v);
  };
  auto flag = [&](const std::string& key, bool& dst) {
    if (auto* v = get(key)) dst = (*v == "true" || *v == "1" || *v == "yes" || *v == "on");
  };
  if (auto* v = get("preset")) c = preset(*v);
  if (auto* v = get("name")) c.name = *v;
  if (auto* v = get("generator")) {
    const std::string& s = *v;
    const auto first = s.find_first_not_of(" \t");
    if (first != std::string::npos && (s[first] == '{' || s[first] == '"'))
      c.generator = spec_from_json(json::parse(s));
    else
      c.generator = named_generator(s).spec();
  }
  if (auto* v = get("generator.name")) c.generator = named_generator(*v).spec();
  if (auto* v = get("seed")) c.generator.seed = std::stoull(*v);
  if (auto* v = get("generator.seed")) c.generator.seed = std::stoull(*v);
  num("vanhove.base", c.vh_base);
  num("vanhove.factor", c.vh_factor);
  if (auto* v = get("vanhove.nmax")) c.n_max = static_cast<int>(parse_double(*v));
  num("range", c.range);
  if (auto* v = get("k_range")) {
    const auto r = parse_list(*v);
    if (r.size() != 2) fail(ErrorCode::parse_error, "k_range needs two values");
    c.k_lo = r[0];
    c.k_hi = r[1];
  }
  num("epsilon", c.epsilon);
  num("tolerance.residual", c.residual_tol);
  num("tolerance.floor", c.floor_factor);
  num("tolerance.purity", c.purity_gate);
  num("tolerance.not_pure", c.not_pure_gate);
  num("tolerance.dworkin", c.dworkin_tol);
  num("tolerance.eigen_pass_rate", c.eigen_pass_rate);
  if (auto* v = get("expect")) c.expect = expectation_from_string(*v);
  num("phi", c.phi_halfwidth);
  num("psi", c.psi_halfwidth);
  flag("dworkin", c.dworkin);
  num("dworkin.tmax", c.dworkin_tmax);
  flag("eigengroup", c.eigengroup);
  if (auto* v = get("out")) c.out_dir = *v;
  if (auto* v = get("workers")) c.workers = static_cast<int>(parse_double(*v));
  return c;
}

// ---------------------------------------------------------------------------
// Report entries: every number carries its tolerance and gate.

inline json gate_entry(double value, double tolerance, const std::string& gate, bool pass) {
  return {{"value", value}, {"tolerance", tolerance}, {"gate", gate}, {"pass", pass}};
}

inline json info_entry(double value) {
  return {{"value", value}, {"tolerance", nullptr}, {"gate", "report-only"}, {"pass", nullptr}};
}

struct RunResult {
  int exit_code = 0;
  json report;
  std::vector<std::string> failed_gates;
};

inline VanHoveSequence<1> van_hove_of(const RunConfig& c) {
  return default_van_hove<1>(c.vh_base, c.vh_factor, c.n_max);
}

/// Runs all enabled stages and writes comb.csv, gamma.csv, spectrum.csv
/// and report.json into c.out_dir. Exit code 0 iff every enabled gate
/// passes, 2 for an invalid config.
inline RunResult run_pipeline(const RunConfig& c, std::ostream& log = std::cerr) {
  RunResult res;
  const auto errs = validate(c);
  if (!errs.empty()) {
    for (const auto& e : errs) log << "config: " << e << "\n";
    res.exit_code = 2;
    return res;
  }
  const Generator gen(c.generator);
  const VanHoveSequence<1> seq = van_hove_of(c);
  const Box<1>& big = seq.boxes.back();
  namespace fs = std::filesystem;
  fs::create_directories(c.out_dir);
  auto path = [&](const char* f) { return (fs::path(c.out_dir) / f).string(); };

  json rep;
  rep["name"] = c.name;
  rep["generator"] = spec_to_json(c.generator);
  rep["vanhove"] = {{"base", c.vh_base}, {"factor", c.vh_factor}, {"nmax", c.n_max}};
  rep["range"] = c.range;
  rep["k_range"] = json::array({c.k_lo, c.k_hi});
  rep["epsilon"] = c.epsilon;
  rep["expect"] = to_string(c.expect);
  json gates = json::object();
  auto gate = [&](const std::string& key, double value, double tol, const std::string& text, bool pass) {
    gates[key] = gate_entry(value, tol, text, pass);
    if (!pass) res.failed_gates.push_back(key);
  };

  // Materialize once with the margin every stage needs.
  const double margin = c.range + c.dworkin_tmax + c.phi_halfwidth + c.psi_halfwidth + 2.0;
  const WeightedComb<1> comb = gen.produce(interval(big.lo[0] - margin, big.hi[0] + margin));
  write_comb(path("comb.csv"), restrict_to(comb, big), &c.generator);

  log << "autocorrelation: " << seq.boxes.size() << " boxes, R = " << format_double(c.range) << "\n";
  std::vector<Autocorrelation<1>> gammas;
  for (std::size_t n = 0; n < seq.boxes.size(); ++n) {
    gammas.push_back(autocorrelation<1>(comb, seq.boxes[n], c.epsilon, c.range, c.workers));
    gammas.back().n = static_cast<int>(n);
  }
  const Autocorrelation<1>& gamma = gammas.back();
  write_autocorrelation(path("gamma.csv"), gamma);
  json conv = json::array();
  for (std::size_t n = 1; n < gammas.size(); ++n) conv.push_back(max_coefficient_change(gammas[n - 1], gammas[n]));
  rep["autocorrelation"] = {{"eta0", info_entry(gamma.at({0.0}).real())},
                            {"coefficients", info_entry(static_cast<double>(gamma.size()))},
                            {"cauchy_changes", conv}};

  log << "peak scan on [" << format_double(c.k_lo) << ", " << format_double(c.k_hi) << "]\n";
  PeakScanOptions po;
  po.k_lo = c.k_lo;
  po.k_hi = c.k_hi;
  po.residual_tol = c.residual_tol;
  po.floor_factor = c.floor_factor;
  po.workers = c.workers;
  std::vector<Box<1>> last3(seq.boxes.end() - 3, seq.boxes.end());
  DiffractionSpectrum spectrum = peak_scan(restrict_to(comb, big), last3, gen.lattice_spacing(), po);
  const TestFunction<1> phi = tent1(0.0, c.phi_halfwidth);
  purity(gamma, spectrum, phi);
  write_spectrum(path("spectrum.csv"), spectrum);
  double max_atom = 0.0;
  for (const auto& a : spectrum.atoms)
    if (std::abs(a.k) > 1e-9) max_atom = std::max(max_atom, a.intensity);
  rep["diffraction"] = {{"atoms", info_entry(static_cast<double>(spectrum.atoms.size()))},
                        {"rejected", info_entry(static_cast<double>(spectrum.rejected.size()))},
                        {"denominator", info_entry(spectrum.denominator)},
                        {"max_scan_intensity", info_entry(spectrum.max_scan_intensity)},
                        {"method", spectrum.method}};
  switch (c.expect) {
    case Expectation::pure_point:
      gate("purity", spectrum.purity, c.purity_gate, "purity >= " + format_double(c.purity_gate),
           spectrum.purity >= c.purity_gate);
      break;
    case Expectation::not_pure_point:
      gate("purity", spectrum.purity, c.not_pure_gate, "expect-not-pure-point: purity <= " + format_double(c.not_pure_gate),
           spectrum.purity <= c.not_pure_gate);
      gate("max_atom_intensity", max_atom, 1e-2, "expect-not-pure-point: accepted atom intensity (k != 0) <= 0.01",
           max_atom <= 1e-2);
      break;
    case Expectation::none:
      gates["purity"] = info_entry(spectrum.purity);
      break;
  }

  if (c.dworkin) {
    log << "dworkin identity\n";
    std::vector<double> ts;
    for (double t = -std::floor(c.dworkin_tmax); t <= c.dworkin_tmax + 1e-9; t += 1.0) ts.push_back(t);
    const DworkinReport dw =
        dworkin_identity_report(comb, gamma, phi, tent1(0.0, c.psi_halfwidth), ts, big, c.workers);
    gate("dworkin_max_rel_error", dw.max_rel_error, c.dworkin_tol, "max relative error <= " + format_double(c.dworkin_tol),
         dw.max_rel_error <= c.dworkin_tol && !dw.truncated);
    rep["dworkin"] = {{"max_scaled_error", info_entry(dw.max_scaled_error)}, {"t_points", ts.size()}};
  }

  if (c.eigengroup && c.expect == Expectation::pure_point) {
    log << "eigenvalue group\n";
    EigenGroupOptions eo;
    eo.k_lo = c.k_lo;
    eo.k_hi = c.k_hi;
    eo.floor = spectrum.floor;
    eo.workers = c.workers;
    std::vector<TestFunction<1>> probes;
    for (double h : c.eigen_probe_halfwidths) probes.push_back(tent1(0.0, h));
    try {
      const EigenGroupReport eg = eigenvalue_group_check(spectrum, gen, probes, big, eo);
      gate("eigen_pairwise_sums", eg.pairwise_pass_rate, c.eigen_pass_rate,
           "pass rate >= " + format_double(c.eigen_pass_rate), eg.pairwise_pass_rate >= c.eigen_pass_rate);
      gate("eigen_negation_closure", eg.negation_closure_rate, 1.0, "rate == 1", eg.negation_closure_rate >= 1.0);
      rep["eigengroup"] = {{"closure_rate", info_entry(eg.closure_pass_rate)},
                           {"closure_tested", eg.closure_tested},
                           {"threshold_factor", eg.threshold_factor},
                           {"generators", eg.generators}};
    } catch (const Error& e) {
      gate("eigen_purity_precondition", spectrum.purity, 0.95, std::string("purity >= 0.95 (") + e.what() + ")", false);
    }
  }

  rep["gates"] = gates;
  rep["pass"] = res.failed_gates.empty();
  write_text(path("report.json"), rep.dump(2) + "\n");
  res.report = rep;
  res.exit_code = res.failed_gates.empty() ? 0 : 1;
  for (const auto& g : res.failed_gates) log << "gate failed: " << g << "\n";
  return res;
}

// ---------------------------------------------------------------------------
// Self test

struct SelfTestOptions {
  double mutate_tau = 0.0;  // nonzero: place Fibonacci points with this slope
};

struct SelfCheck {
  std::string name;
  std::function<bool(const SelfTestOptions&, std::string&)> run;
};

namespace detail {

inline WeightedComb<1> comb1(std::vector<double> xs, std::vector<cplx> ws, Box<1> window) {
  std::vector<Vec<1>> pts;
  for (double x : xs) pts.push_back({x});
  return make_comb<1>(std::move(pts), std::move(ws), window);
}

inline bool near(cplx a, cplx b, double tol = 1e-12) { return std::abs(a - b) <= tol; }

}  // namespace detail

inline std::vector<SelfCheck> self_checks() {
  using detail::comb1;
  using detail::near;
  std::vector<SelfCheck> v;
  auto add = [&](std::string name, std::function<bool(const SelfTestOptions&, std::string&)> f) {
    v.push_back({std::move(name), std::move(f)});
  };
  const Box<1> W = interval(-10.0, 10.0);

  add("measures.evaluate.tent-peak", [=](auto&, std::string&) {
    return near(evaluate(comb1({0.0}, {1.0}, W), tent1(0.0, 1.0)).value, 1.0);
  });
  add("measures.evaluate.two-points", [=](auto&, std::string&) {
    return near(evaluate(comb1({0.0, 0.5}, {1.0, 1.0}, W), tent1(0.0, 1.0)).value, 1.5);
  });
  add("measures.evaluate.empty", [=](auto&, std::string&) {
    return near(evaluate(comb1({}, {}, W), tent1(0.0, 1.0)).value, 0.0);
  });
  add("measures.total-variation", [=](auto&, std::string&) {
    return std::abs(total_variation_on(comb1({0.0, 1.0}, {1.0, -1.0}, W), interval(-0.5, 1.5)) - 2.0) < 1e-12 &&
           std::abs(total_variation_on(comb1({0.0}, {cplx{0.0, 3.0}}, W), interval(-1.0, 1.0)) - 3.0) < 1e-12;
  });
  add("measures.translation-bounded", [=](auto&, std::string& why) {
    const auto z = lattice().produce(interval(0.0, 100.0));
    const auto a = is_translation_bounded(z, {2.0, interval(0.0, 1.5)}, 0.01);
    const auto b = is_translation_bounded(z, {1.0, interval(0.0, 1.5)}, 0.01);
    const auto e = is_translation_bounded(comb1({}, {}, interval(0.0, 100.0)), {1.0, interval(0.0, 1.5)}, 0.01);
    const double off = b.worst_t[0] - std::floor(b.worst_t[0]);
    why = "offender " + format_double(b.worst_t[0]);
    return a.bounded && !b.bounded && e.bounded && std::abs(off - 0.75) < 0.26;
  });
  add("measures.translate", [=](auto&, std::string&) {
    const auto c = comb1({0.0, 0.3}, {1.0, 2.0}, W);
    const auto t = translate<1>(c, {2.0});
    return t.points[0][0] == 2.0 && translate<1>(translate<1>(c, {0.5}), {1.25}) == translate<1>(c, {1.75}) &&
           translate<1>(c, {0.0}) == c;
  });
  add("measures.reflect", [=](auto&, std::string&) {
    const auto c = comb1({1.0}, {cplx{0.0, 1.0}}, W);
    const auto r = reflect(c);
    return r.points[0][0] == -1.0 && near(r.weights[0], cplx{0.0, -1.0}) && reflect(r) == c;
  });
  add("measures.f-phi", [=](auto&, std::string&) {
    const auto c = comb1({-1.0}, {2.0}, W);
    const auto d = comb1({-0.4, 0.7, 2.1}, {1.0, cplx{0.5, -1.0}, 2.0}, W);
    const auto phi = tent1(0.0, 1.0);
    return near(f_phi(phi, c).value, 0.0) &&
           near(f_phi_at<1>(phi, d, {0.3}).value, f_phi(phi, translate<1>(d, {-0.3})).value);
  });
  add("measures.convolve-diracs", [=](auto&, std::string&) {
    const auto p = convolve_finite(comb1({1.5}, {2.0}, W), comb1({-0.25}, {cplx{0.0, 3.0}}, W));
    return p.size() == 1 && p.points[0][0] == 1.25 && near(p.weights[0], cplx{0.0, 6.0});
  });

  add("generators.lattice", [](auto&, std::string&) {
    const auto c = lattice().produce(interval(0.0, 4.0));
    bool ok = c.size() == 4;
    for (std::size_t i = 0; ok && i < 4; ++i) ok = c.points[i][0] == static_cast<double>(i) && c.weights[i] == 1.0;
    return ok && lattice(0.5).density() == 2.0;
  });
  add("generators.window-consistency", [](auto&, std::string&) {
    for (const auto& g : {lattice(), fibonacci_model_set(), thue_morse(), period_doubling()}) {
      const auto a = g.produce(interval(0.0, 200.0));
      const auto b = g.produce(interval(0.0, 100.0));
      if (!(restrict_to(a, interval(0.0, 100.0)).points == b.points)) return false;
    }
    return true;
  });
  add("generators.fibonacci-gaps", [](const SelfTestOptions& o, std::string& why) {
    GeneratorSpec s = fibonacci_model_set().spec();
    s.slope = o.mutate_tau;
    const auto c = Generator(s).produce(interval(0.0, 50.0));
    for (std::size_t i = 1; i < c.size(); ++i) {
      const double g = c.points[i][0] - c.points[i - 1][0];
      if (std::abs(g - 1.0) > 1e-9 && std::abs(g - kGolden.tau()) > 1e-9) {
        why = "gap " + format_double(g);
        return false;
      }
    }
    return true;
  });

  add("topology.ukv-examples", [](auto&, std::string&) {
    const auto p = make_point_set<1>({{0.0}}, interval(-5.0, 5.0));
    const auto q = make_point_set<1>({{0.1}}, interval(-5.0, 5.0));
    const BoxUnion<1> K = single(interval(-1.0, 1.0));
    return ukv_related(p, p, UKVParams<1>{K, {0.3}}) && ukv_related(p, q, UKVParams<1>{K, {0.2}}) &&
           !ukv_related(p, q, UKVParams<1>{K, {0.05}});
  });
  add("topology.vague-metric", [](auto&, std::string&) {
    const auto a = detail::comb1({0.0}, {1.0}, interval(-5.0, 5.0));
    const auto b = detail::comb1({0.2}, {1.0}, interval(-5.0, 5.0));
    return vague_metric(a, a, 30) == 0.0 && vague_metric(a, b, 30) == vague_metric(b, a, 30);
  });
  add("topology.fell-from-ukv", [](auto&, std::string&) {
    const auto H = make_point_set<1>({{0.0}}, interval(-3.0, 3.0));
    const auto b = fell_refines_ukv(H, UKVParams<1>{single(interval(-1.0, 1.0)), {0.4}});
    const auto e = fell_refines_ukv(make_point_set<1>({}, interval(-3.0, 3.0)), UKVParams<1>{single(interval(-1.0, 1.0)), {0.4}});
    return b.C.boxes.size() == 2 && b.C.boxes[0] == interval(-1.0, -0.2) && b.C.boxes[1] == interval(0.2, 1.0) &&
           b.F.size() == 1 && b.F[0] == interval(-0.2, 0.2) && e.F.empty() && e.C.boxes.size() == 1 &&
           e.C.boxes[0] == interval(-1.0, 1.0);
  });
  add("topology.ukv-from-fell-empty", [](auto&, std::string&) {
    const auto r = ukv_refines_fell(FellBasisElement<1>{single(interval(1.0, 2.0)), {}});
    return r.H.points.empty() && r.u.K.boxes.size() == 1 && r.u.K.boxes[0] == interval(1.0, 2.0);
  });

  add("autocorrelation.boundary-ratio", [](auto&, std::string&) {
    return std::abs(boundary_ratio(interval(0.0, 100.0), interval(-1.0, 1.0)) - 0.04) < 1e-15 &&
           boundary_ratio(interval(0.0, 100.0), interval(0.0, 0.0)) == 0.0;
  });
  add("autocorrelation.eta0-density", [](auto&, std::string&) {
    const auto g = autocorrelation<1>(lattice().produce(interval(-5.0, 105.0)), interval(0.0, 100.0), 0.0, 3.0);
    return std::abs(g.at({0.0}).real() - 1.0) < 1e-15;
  });
  add("autocorrelation.closed-formula-empty", [](auto&, std::string&) {
    EmpiricalHullMeasure<1> m;
    m.samples.push_back(detail::comb1({}, {}, interval(-5.0, 5.0)));
    return autocorr_closed_formula(m, normalized(tent1(0.0, 1.0)), tent1(0.0, 1.0)).value == cplx{0.0, 0.0};
  });
  add("autocorrelation.pairing-delta", [](auto&, std::string&) {
    Autocorrelation<1> g;
    g.z = {{0.0}};
    g.eta = {1.0};
    g.range = 5.0;
    const auto phi = tent1(0.0, 1.0);
    return near(pairing<1>(g, phi, phi, {0.4}), cross_correlation<1>(phi, phi, {0.4}, real_group(1)), 1e-12);
  });

  add("diffraction.single-point", [](auto&, std::string&) {
    const auto c = detail::comb1({3.7}, {1.0}, interval(0.0, 10.0));
    return std::abs(structure_factor<1>(c, c.window, {0.37}) - 0.1) < 1e-15;
  });
  add("diffraction.symmetry", [](auto&, std::string&) {
    const auto c = fibonacci_model_set().produce(interval(0.0, 300.0));
    return std::abs(structure_factor<1>(c, c.window, {0.7}) - structure_factor<1>(c, c.window, {-0.7})) < 1e-9;
  });
  add("diffraction.purity-empty", [](auto&, std::string&) {
    Autocorrelation<1> g;
    g.z = {{0.0}};
    g.eta = {1.0};
    g.range = 5.0;
    DiffractionSpectrum s;
    return purity(g, s, tent1(0.0, 1.0)) == 0.0;
  });
  add("diffraction.wiener-delta", [](auto&, std::string&) {
    Autocorrelation<1> g;
    g.z = {{0.0}};
    g.eta = {1.0};
    g.range = 20.0;
    return std::abs(wiener_oracle(g, 10) - 1.0 / 21.0) < 1e-15;
  });
  add("diffraction.spectral-mass-zero-transform", [](auto&, std::string&) {
    const auto comb = lattice().produce(interval(-3.0, 4099.0));
    const std::vector<Box<1>> boxes{interval(0.0, 1024.0), interval(0.0, 2048.0), interval(0.0, 4096.0)};
    const auto r = spectral_mass_check(comb, tent1(0.0, 1.0), 1.0, boxes);
    return r.negligible && r.lhs < 1e-14 && r.rhs < 1e-14;
  });
  add("diffraction.approximate-unit-at-zero", [](auto&, std::string&) {
    for (double h : {1.0, 0.5, 0.25})
      if (std::abs(std::norm(normalized(tent1(0.0, h)).fourier({0.0}, real_group(1))) - 1.0) > 1e-12) return false;
    return true;
  });
  add("diffraction.poisson-reduced", [](auto&, std::string& why) {
    const auto seq = default_van_hove<1>(256.0, 2.0, 2);
    PeakScanOptions po;
    po.k_lo = -2.5;
    po.k_hi = 2.5;
    const auto s = peak_scan(lattice(), seq, po);
    why = std::to_string(s.atoms.size()) + " atoms";
    if (s.atoms.size() != 5) return false;
    for (const auto& a : s.atoms)
      if (std::abs(a.k - std::round(a.k)) > 1e-6 || std::abs(a.intensity - 1.0) > 1e-2) return false;
    return true;
  });
  add("diffraction.fibonacci-membership", [](const SelfTestOptions& o, std::string& why) {
    GeneratorSpec s = fibonacci_model_set().spec();
    s.slope = o.mutate_tau;
    const auto seq = default_van_hove<1>(100.0, 2.0, 6);
    const auto sp = peak_scan(Generator(s), seq, PeakScanOptions{});
    // Top atoms are refined to ~1e-8 at this size; a perturbed slope moves
    // them by 1e-5 or more.
    for (std::size_t i = 0; i < std::min<std::size_t>(10, sp.atoms.size()); ++i)
      if (!fourier_module_member(sp.atoms[i].k, kGolden, 20, 1e-6)) {
        why = "k = " + format_double(sp.atoms[i].k) + " not in Z[tau]/sqrt(5)";
        return false;
      }
    return sp.atoms.size() >= 10;
  });

  add("dynamics.correlation-quadratic", [](auto&, std::string&) {
    const auto comb = fibonacci_model_set().produce(interval(-10.0, 110.0));
    const auto v = correlation(comb, tent1(0.0, 0.5), tent1(0.0, 0.5), 0.0, interval(0.0, 100.0));
    return v.value.real() >= 0.0 && std::abs(v.value.imag()) < 1e-12;
  });
  add("dynamics.correlation-zero-comb", [](auto&, std::string&) {
    const auto comb = detail::comb1({}, {}, interval(-10.0, 110.0));
    return correlation(comb, tent1(0.0, 0.5), tent1(0.0, 1.0), 1.0, interval(0.0, 100.0)).value == cplx{0.0, 0.0};
  });
  add("dynamics.trivial-character", [](auto&, std::string&) {
    const auto comb = lattice().produce(interval(-2.0, 1026.0));
    const auto phi = tent1(0.0, 0.5);
    return std::abs(weyl_sum(comb, phi, 0.0, interval(0.0, 1024.0)).value - phi.integral(real_group(1))) < 1e-12;
  });
  return v;
}

struct SelfTestSummary {
  int failures = 0;
  double seconds = 0.0;
};

/// TAP-style log, one line per check.
inline SelfTestSummary run_selftest(const SelfTestOptions& opt, std::ostream& out) {
  const auto checks = self_checks();
  const auto t0 = std::chrono::steady_clock::now();
  SelfTestSummary s;
  out << "1.." << checks.size() << "\n";
  for (std::size_t i = 0; i < checks.size(); ++i) {
    std::string why;
    bool ok = false;
    try {
      ok = checks[i].run(opt, why);
    } catch (const std::exception& e) {
      why = e.what();
    }
    out << (ok ? "ok " : "not ok ") << (i + 1) << " - " << checks[i].name;
    if (!ok && !why.empty()) out << " # " << why;
    out << "\n";
    s.failures += ok ? 0 : 1;
  }
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out << "# " << (checks.size() - static_cast<std::size_t>(s.failures)) << "/" << checks.size() << " passed in "
      << format_double(std::round(s.seconds * 100.0) / 100.0) << " s\n";
  return s;
}

}  // namespace aperiodica
