#pragma once

// CSV and JSON formats for combs, autocorrelations, spectra and generator
// specifications. Numbers are written in shortest round-trip form so equal
// values give equal bytes.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "autocorrelation.hpp"
#include "diffraction.hpp"
#include "generators.hpp"
#include "measures.hpp"

namespace aperiodica {

using json = nlohmann::ordered_json;

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::parse_error, "cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::invalid_argument, "cannot write '" + path + "'");
  out << text;
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(e[-1]))) --e;
  if (b < e && *b == '+') ++b;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e) fail(ErrorCode::parse_error, "not a number: '" + s + "'");
  return v;
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item));
  return out;
}

namespace detail {

inline std::vector<std::vector<double>> read_csv_rows(const std::string& text, std::size_t columns,
                                                      std::vector<std::string>* header) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      first = false;
      if (header) *header = cells;
      continue;
    }
    if (cells.size() != columns) fail(ErrorCode::parse_error, "expected " + std::to_string(columns) + " columns: " + line);
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(c));
    rows.push_back(std::move(row));
  }
  if (first) fail(ErrorCode::parse_error, "empty CSV");
  return rows;
}

template <int D>
std::string coordinate_header(const char* prefix) {
  std::string h;
  for (int i = 0; i < D; ++i) h += std::string(i ? "," : "") + prefix + std::to_string(i + 1);
  return h;
}

inline int dimension_from_header(const std::vector<std::string>& h) { return h.size() >= 4 ? 2 : 1; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Groups, boxes, generator specs

inline json box_json(const Box<1>& b) { return json::array({b.lo[0], b.hi[0]}); }
inline json box_json(const Box<2>& b) { return json::array({json::array({b.lo[0], b.hi[0]}), json::array({b.lo[1], b.hi[1]})}); }

inline json cplx_json(cplx c) { return json::array({c.real(), c.imag()}); }
inline cplx cplx_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

inline json spec_to_json(const GeneratorSpec& s) {
  json j;
  j["kind"] = to_string(s.kind);
  j["seed"] = s.seed;
  j["group"] = to_string(s.group.kind);
  switch (s.kind) {
    case GeneratorKind::lattice:
      j["spacing"] = s.spacing;
      j["weight_rule"] = to_string(s.weight_rule);
      j["weight"] = cplx_json(s.weight);
      break;
    case GeneratorKind::cut_and_project:
      j["ring"] = json::array({s.ring.p, s.ring.q});
      j["window"] = json::array({to_string(s.window_lo), to_string(s.window_hi)});
      if (s.slope != 0.0) j["slope"] = s.slope;
      break;
    case GeneratorKind::substitution:
      j["rule"] = to_string(s.rule);
      j["lengths"] = json::array({s.lengths[0], s.lengths[1]});
      j["letter_weights"] = json::array({cplx_json(s.letter_weights[0]), cplx_json(s.letter_weights[1])});
      break;
    case GeneratorKind::perturbed_lattice:
      j["spacing"] = s.spacing;
      j["epsilon"] = s.epsilon;
      j["displacement"] = to_string(s.displacement);
      break;
    case GeneratorKind::bernoulli_lattice:
      j["spacing"] = s.spacing;
      j["occupation"] = s.occupation;
      break;
  }
  return j;
}

/// Named generators accepted wherever a spec is expected.
inline Generator named_generator(const std::string& name) {
  if (name == "lattice" || name == "z") return lattice();
  if (name == "fibonacci" || name == "fibonacci-model-set") return fibonacci_model_set();
  if (name == "fibonacci-substitution") return fibonacci_substitution();
  if (name == "thue-morse") return thue_morse();
  if (name == "period-doubling") return period_doubling();
  fail(ErrorCode::parse_error, "unknown generator name '" + name + "'");
}

inline GeneratorSpec spec_from_json(const json& j) {
  if (j.is_string()) return named_generator(j.get<std::string>()).spec();
  if (j.contains("name")) {
    GeneratorSpec s = named_generator(j.at("name").get<std::string>()).spec();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    return s;
  }
  GeneratorSpec s;
  s.kind = generator_kind_from_string(j.at("kind").get<std::string>());
  s.seed = j.value("seed", std::uint64_t{0});
  s.group.kind = group_kind_from_string(j.value("group", std::string("real-line")));
  s.spacing = j.value("spacing", 1.0);
  if (j.contains("weight_rule")) s.weight_rule = weight_rule_from_string(j.at("weight_rule").get<std::string>());
  if (j.contains("weight")) s.weight = cplx_from_json(j.at("weight"));
  if (j.contains("ring")) s.ring = {j.at("ring").at(0).get<std::int64_t>(), j.at("ring").at(1).get<std::int64_t>()};
  s.window_lo.ring = s.ring;
  s.window_hi.ring = s.ring;
  if (j.contains("window")) {
    s.window_lo = parse_quadint(j.at("window").at(0).get<std::string>(), s.ring);
    s.window_hi = parse_quadint(j.at("window").at(1).get<std::string>(), s.ring);
  }
  s.slope = j.value("slope", 0.0);
  if (j.contains("rule")) s.rule = substitution_rule_from_string(j.at("rule").get<std::string>());
  if (j.contains("lengths")) s.lengths = {j.at("lengths").at(0).get<double>(), j.at("lengths").at(1).get<double>()};
  if (j.contains("letter_weights"))
    s.letter_weights = {cplx_from_json(j.at("letter_weights").at(0)), cplx_from_json(j.at("letter_weights").at(1))};
  s.epsilon = j.value("epsilon", 0.0);
  if (j.contains("displacement")) s.displacement = displacement_rule_from_string(j.at("displacement").get<std::string>());
  s.occupation = j.value("occupation", 0.5);
  return s;
}

/// A generator from a file path holding JSON, or a generator name.
inline Generator load_generator(const std::string& path_or_name) {
  std::ifstream probe(path_or_name);
  if (!probe) return named_generator(path_or_name);
  try {
    return Generator(spec_from_json(json::parse(read_text(path_or_name))));
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("generator spec: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Combs

template <int D>
std::string comb_csv(const WeightedComb<D>& c) {
  std::string out = detail::coordinate_header<D>("x") + ",re_w,im_w\n";
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (int a = 0; a < D; ++a) out += format_double(c.points[i][a]) + ",";
    out += format_double(c.weights[i].real()) + "," + format_double(c.weights[i].imag()) + "\n";
  }
  return out;
}

template <int D>
json comb_sidecar(const WeightedComb<D>& c, const GeneratorSpec* spec) {
  json j;
  j["group"] = to_string(c.group.kind);
  j["window"] = box_json(c.window);
  j["seed"] = spec ? spec->seed : 0;
  j["generator"] = spec ? spec_to_json(*spec) : json();
  return j;
}

template <int D>
void write_comb(const std::string& path, const WeightedComb<D>& c, const GeneratorSpec* spec = nullptr) {
  write_text(path, comb_csv(c));
  write_text(path + ".json", comb_sidecar(c, spec).dump(2) + "\n");
}

/// Reads a 1-D comb; the window comes from the sidecar if present, else it
/// is the smallest half-open interval holding the points.
inline WeightedComb<1> read_comb(const std::string& path) {
  std::vector<std::string> header;
  const auto rows = detail::read_csv_rows(read_text(path), 3, &header);
  std::vector<Vec<1>> pts;
  std::vector<cplx> ws;
  for (const auto& r : rows) {
    pts.push_back({r[0]});
    ws.push_back({r[1], r[2]});
  }
  Box<1> window = interval(0.0, 0.0);
  GroupSpec group = real_group(1);
  std::ifstream side(path + ".json");
  if (side) {
    const json j = json::parse(read_text(path + ".json"));
    window = interval(j.at("window").at(0).get<double>(), j.at("window").at(1).get<double>());
    group.kind = group_kind_from_string(j.value("group", std::string("real-line")));
  } else if (!pts.empty()) {
    double lo = pts.front()[0], hi = pts.front()[0];
    for (const auto& p : pts) {
      lo = std::min(lo, p[0]);
      hi = std::max(hi, p[0]);
    }
    window = interval(lo, std::nextafter(hi, std::numeric_limits<double>::infinity()));
  }
  return make_comb<1>(std::move(pts), std::move(ws), window, group);
}

// ---------------------------------------------------------------------------
// Autocorrelations

template <int D>
std::string autocorrelation_csv(const Autocorrelation<D>& a) {
  std::string out = detail::coordinate_header<D>("z") + ",re_eta,im_eta\n";
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (int d = 0; d < D; ++d) out += format_double(a.z[i][d]) + ",";
    out += format_double(a.eta[i].real()) + "," + format_double(a.eta[i].imag()) + "\n";
  }
  return out;
}

template <int D>
json autocorrelation_sidecar(const Autocorrelation<D>& a) {
  json j;
  j["epsilon"] = a.epsilon;
  j["R"] = a.range;
  j["volume"] = a.volume;
  j["n"] = a.n;
  j["group"] = to_string(a.group.kind);
  return j;
}

template <int D>
void write_autocorrelation(const std::string& path, const Autocorrelation<D>& a) {
  write_text(path, autocorrelation_csv(a));
  write_text(path + ".json", autocorrelation_sidecar(a).dump(2) + "\n");
}

inline Autocorrelation<1> read_autocorrelation(const std::string& path) {
  const auto rows = detail::read_csv_rows(read_text(path), 3, nullptr);
  Autocorrelation<1> a;
  double zmax = 0.0;
  for (const auto& r : rows) {
    a.z.push_back({r[0]});
    a.eta.push_back({r[1], r[2]});
    zmax = std::max(zmax, std::abs(r[0]));
  }
  a.range = zmax;
  std::ifstream side(path + ".json");
  if (side) {
    const json j = json::parse(read_text(path + ".json"));
    a.epsilon = j.value("epsilon", 0.0);
    a.range = j.value("R", zmax);
    a.volume = j.value("volume", 0.0);
    a.n = j.value("n", 0);
    a.group.kind = group_kind_from_string(j.value("group", std::string("real-line")));
  }
  return a;
}

// ---------------------------------------------------------------------------
// Spectra

inline std::string spectrum_csv(const DiffractionSpectrum& s) {
  std::string out = "k1,intensity,residual\n";
  for (const auto& a : s.atoms)
    out += format_double(a.k) + "," + format_double(a.intensity) + "," + format_double(a.residual) + "\n";
  return out;
}

inline json spectrum_summary(const DiffractionSpectrum& s) {
  json j;
  j["purity"] = s.purity;
  j["denominator"] = s.denominator;
  j["total_mass_proxy"] = s.total_mass_proxy;
  j["atoms"] = s.atoms.size();
  j["rejected"] = s.rejected.size();
  j["max_scan_intensity"] = s.max_scan_intensity;
  j["scan"] = {{"k_lo", s.k_lo}, {"k_hi", s.k_hi}, {"coarse_step", s.coarse_step}, {"floor", s.floor},
               {"method", s.method}, {"grid_candidates", s.grid_candidates}};
  json boxes = json::array();
  for (const auto& b : s.boxes) boxes.push_back(box_json(b));
  j["scan"]["boxes"] = boxes;
  return j;
}

inline void write_spectrum(const std::string& path, const DiffractionSpectrum& s) {
  write_text(path, spectrum_csv(s));
  write_text(path + ".json", spectrum_summary(s).dump(2) + "\n");
}

inline DiffractionSpectrum read_spectrum(const std::string& path) {
  const auto rows = detail::read_csv_rows(read_text(path), 3, nullptr);
  DiffractionSpectrum s;
  for (const auto& r : rows) s.atoms.push_back({r[0], r[1], r[2], {}});
  for (const auto& a : s.atoms) s.total_mass_proxy += a.intensity;
  std::ifstream side(path + ".json");
  if (side) {
    const json j = json::parse(read_text(path + ".json"));
    s.k_lo = j["scan"].value("k_lo", 0.0);
    s.k_hi = j["scan"].value("k_hi", 0.0);
    s.floor = j["scan"].value("floor", 0.0);
    s.method = j["scan"].value("method", std::string());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Flat key-value configuration

using ConfigMap = std::map<std::string, std::string>;

/// INI text; keys inside [section] become "section.key".
inline ConfigMap parse_ini(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    fail(ErrorCode::parse_error, std::string("config: ") + e.what());
  }
  ConfigMap out;
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      out[key] = node.data();
      continue;
    }
    for (const auto& [sub, leaf] : node) out[key + "." + sub] = leaf.data();
  }
  return out;
}

/// JSON object; nested objects flatten to "outer.inner", arrays to
/// comma-joined lists, and the "generator" member is kept as JSON text.
inline ConfigMap parse_json_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("config: ") + e.what());
  }
  ConfigMap out;
  std::function<void(const std::string&, const json&)> walk = [&](const std::string& prefix, const json& v) {
    if (prefix == "generator") {
      out[prefix] = v.dump();
    } else if (v.is_object()) {
      for (auto it = v.begin(); it != v.end(); ++it) walk(prefix.empty() ? it.key() : prefix + "." + it.key(), *it);
    } else if (v.is_array()) {
      std::string s;
      for (const auto& x : v) s += (s.empty() ? "" : ",") + (x.is_string() ? x.get<std::string>() : x.dump());
      out[prefix] = s;
    } else if (v.is_string()) {
      out[prefix] = v.get<std::string>();
    } else {
      out[prefix] = v.dump();
    }
  };
  walk("", j);
  return out;
}

inline ConfigMap load_config(const std::string& path) {
  const std::string text = read_text(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return parse_json_config(text);
  return parse_ini(text);
}

}  // namespace aperiodica
