#include <gtest/gtest.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <sys/wait.h>

#include "aperiodica/io.hpp"
#include "aperiodica/pipeline.hpp"

using namespace aperiodica;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult cli(const std::string& args) {
  const std::string cmd = std::string(APERIODICA_CLI) + " " + args + " 2>/dev/null";
  CliResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("aperiodica_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

json report_of(const fs::path& dir) { return json::parse(read_text((dir / "report.json").string())); }

const char* kPerturbedIni =
    "name = perturbed\n"
    "generator = {\"kind\":\"perturbed-lattice\",\"spacing\":1,\"epsilon\":0.2,\"displacement\":\"iid\",\"seed\":7}\n"
    "epsilon = 1e-3\n"
    "range = 8\n"
    "k_range = -1.5,1.5\n"
    "expect = none\n"
    "dworkin = false\n"
    "[vanhove]\n"
    "base = 64\n"
    "factor = 2\n"
    "nmax = 4\n";

}  // namespace

TEST(Run, FibonacciPreset) {
  const auto d = scratch("fib");
  const CliResult r = cli("run --preset fibonacci-full --out " + d.string());
  EXPECT_EQ(r.code, 0);
  const json rep = report_of(d);
  EXPECT_GE(rep["gates"]["purity"]["value"].get<double>(), 0.98);
  EXPECT_EQ(rep["gates"]["purity"]["tolerance"].get<double>(), 0.98);
  EXPECT_TRUE(rep["gates"]["eigen_pairwise_sums"]["pass"].get<bool>());
  EXPECT_TRUE(rep["pass"].get<bool>());
  for (const char* f : {"comb.csv", "gamma.csv", "spectrum.csv"}) EXPECT_TRUE(fs::exists(d / f)) << f;
}

TEST(Run, ThueMorsePreset) {
  const auto d = scratch("tm");
  EXPECT_EQ(cli("run --preset thue-morse-full --out " + d.string()).code, 0);
  const json g = report_of(d)["gates"];
  EXPECT_LE(g["purity"]["value"].get<double>(), 0.05);
  EXPECT_NE(g["purity"]["gate"].get<std::string>().find("expect-not-pure-point"), std::string::npos);
  EXPECT_TRUE(g["max_atom_intensity"]["pass"].get<bool>());
}

TEST(Run, EveryNumberCarriesToleranceAndGate) {
  const auto d = scratch("lat");
  EXPECT_EQ(cli("run --preset lattice-full --out " + d.string()).code, 0);
  for (const auto& [key, g] : report_of(d)["gates"].items()) {
    EXPECT_TRUE(g.contains("tolerance")) << key;
    EXPECT_TRUE(g.contains("gate")) << key;
    EXPECT_TRUE(g["pass"].get<bool>()) << key;
  }
}

TEST(Run, ValidationErrorsExitTwo) {
  const auto d = scratch("bad");
  write_text((d / "neg.ini").string(), "generator = lattice\nepsilon = -0.1\n");
  EXPECT_EQ(cli("run --config " + (d / "neg.ini").string() + " --out " + (d / "o").string()).code, 2);
  write_text((d / "broken.json").string(), "{\"range\": ");
  EXPECT_EQ(cli("run --config " + (d / "broken.json").string()).code, 2);
  EXPECT_EQ(cli("run").code, 2);
  EXPECT_EQ(cli("run --preset nonexistent").code, 2);
  EXPECT_EQ(cli("frobnicate").code, 2);
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("generate --window 5,1 --out " + (d / "c.csv").string()).code, 2);
  EXPECT_EQ(cli("--help").code, 0);
}

TEST(Run, GateFailureExitsOne) {
  // Thue–Morse with the pure-point expectation must fail its purity gate
  const auto d = scratch("gatefail");
  write_text((d / "tm.ini").string(), "preset = thue-morse-full\nexpect = pure-point\ndworkin = false\n");
  EXPECT_EQ(cli("run --config " + (d / "tm.ini").string() + " --out " + (d / "o").string()).code, 1);
  EXPECT_FALSE(report_of(d / "o")["gates"]["purity"]["pass"].get<bool>());
}

TEST(Run, DeterministicAcrossWorkerCounts) {
  const auto d = scratch("det");
  write_text((d / "p.ini").string(), kPerturbedIni);
  ASSERT_EQ(cli("run --config " + (d / "p.ini").string() + " --workers 1 --out " + (d / "w1").string()).code, 0);
  ASSERT_EQ(cli("run --config " + (d / "p.ini").string() + " --workers 8 --out " + (d / "w8").string()).code, 0);
  for (const char* f : {"comb.csv", "gamma.csv", "spectrum.csv"})
    EXPECT_EQ(read_text((d / "w1" / f).string()), read_text((d / "w8" / f).string())) << f;
}

TEST(Run, JsonAndIniConfigsAgree) {
  const auto d = scratch("fmt");
  write_text((d / "p.ini").string(), kPerturbedIni);
  write_text((d / "p.json").string(),
             R"({"name":"perturbed",
                 "generator":{"kind":"perturbed-lattice","spacing":1,"epsilon":0.2,"displacement":"iid","seed":7},
                 "epsilon":1e-3,"range":8,"k_range":[-1.5,1.5],"expect":"none","dworkin":false,
                 "vanhove":{"base":64,"factor":2,"nmax":4}})");
  ASSERT_EQ(cli("run --config " + (d / "p.ini").string() + " --out " + (d / "a").string()).code, 0);
  ASSERT_EQ(cli("run --config " + (d / "p.json").string() + " --out " + (d / "b").string()).code, 0);
  for (const char* f : {"comb.csv", "gamma.csv", "spectrum.csv"})
    EXPECT_EQ(read_text((d / "a" / f).string()), read_text((d / "b" / f).string())) << f;
}

TEST(Config, Parsing) {
  const auto m = parse_ini(kPerturbedIni);
  EXPECT_EQ(m.at("vanhove.nmax"), "4");
  const RunConfig c = config_from_map(m);
  EXPECT_EQ(c.n_max, 4);
  EXPECT_EQ(c.k_lo, -1.5);
  EXPECT_EQ(c.expect, Expectation::none);
  EXPECT_EQ(c.generator.seed, 7u);
  EXPECT_TRUE(validate(c).empty());
  RunConfig bad = c;
  bad.range = 1000.0;
  EXPECT_FALSE(validate(bad).empty());
  EXPECT_THROW(parse_ini("[unterminated\n"), Error);
}

TEST(Selftest, PassesQuickly) {
  const auto t0 = std::chrono::steady_clock::now();
  const CliResult r = cli("selftest");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(r.code, 0);
  EXPECT_LT(secs, 60.0);
  EXPECT_EQ(r.out.find("not ok"), std::string::npos);
  const CliResult list = cli("selftest --list");
  EXPECT_EQ(list.code, 0);
  EXPECT_EQ(static_cast<std::size_t>(std::count(list.out.begin(), list.out.end(), '\n')), self_checks().size());
}

TEST(Selftest, MutatedTauIsCaught) {
  const CliResult r = cli("selftest --mutate-tau 1.618");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("not ok"), std::string::npos);
  EXPECT_NE(r.out.find("diffraction.fibonacci-membership"), std::string::npos);
}

TEST(Subcommands, StagedWorkflow) {
  const auto d = scratch("staged");
  const std::string g = (d / "gamma.csv").string(), s = (d / "spectrum.csv").string();
  const std::string seq = " --in fibonacci --nmax 5 --base 100";
  ASSERT_EQ(cli("autocorr" + seq + " --range 3 --out " + g).code, 0);
  ASSERT_EQ(cli("diffract" + seq + " --range -3,3 --out " + s).code, 0);
  const CliResult p = cli("purity --gamma " + g + " --spectrum " + s + " --phi tent:0.5 --gate 0.9");
  EXPECT_EQ(p.code, 0);
  EXPECT_GE(json::parse(p.out)["purity"]["value"].get<double>(), 0.9);
  EXPECT_EQ(cli("purity --gamma " + g + " --spectrum " + s + " --phi tent:0.5 --gate 1.01").code, 1);
  // artifacts read back unchanged
  EXPECT_EQ(autocorrelation_csv(read_autocorrelation(g)), read_text(g));
  EXPECT_EQ(spectrum_csv(read_spectrum(s)), read_text(s));
}

TEST(Subcommands, GenerateAndTopology) {
  const auto d = scratch("topo");
  const std::string a = (d / "a.csv").string(), b = (d / "b.csv").string(), p = (d / "p.csv").string();
  ASSERT_EQ(cli("generate --kind lattice --window -5,200 --out " + a).code, 0);
  ASSERT_EQ(cli("generate --kind perturbed-lattice --epsilon 0.01 --seed 3 --window -5,200 --out " + b).code, 0);
  ASSERT_EQ(cli("generate --kind perturbed-lattice --epsilon 0.3 --seed 3 --window -5,200 --out " + p).code, 0);
  EXPECT_EQ(comb_csv(read_comb(b)), read_text(b));

  auto field = [](const CliResult& r, const char* key) { return json::parse(r.out)[key]; };
  const CliResult near = cli("topology ukv --in " + a + " --other " + b + " --K 0,10 --V 0.05");
  EXPECT_EQ(near.code, 0);
  EXPECT_TRUE(field(near, "related").get<bool>());
  EXPECT_FALSE(field(cli("topology ukv --in " + a + " --other " + p + " --K 0,10 --V 0.05"), "related").get<bool>());
  EXPECT_TRUE(field(cli("topology flc --in " + a + " --r 3"), "flc").get<bool>());
  EXPECT_TRUE(field(cli("topology fell --in " + a + " --C 0.2,0.8 --F 2.9,3.1"), "member").get<bool>());
  EXPECT_TRUE(field(cli("topology repetitivity --in " + a + " --K 0,5 --V 0.05 --t0 1 --step 0.25 --count 200 --R 5"),
                    "dense")
                  .get<bool>());
  EXPECT_EQ(cli("topology bogus --in " + a).code, 2);
  EXPECT_EQ(cli("topology ukv --in " + a).code, 2);
}

TEST(Subcommands, Verify) {
  const std::string small = " --in lattice --nmax 4 --base 100";
  const CliResult dw = cli("verify dworkin" + small);
  EXPECT_EQ(dw.code, 0);
  EXPECT_LE(json::parse(dw.out)["max_rel_error"]["value"].get<double>(), 5e-2);
  EXPECT_EQ(cli("verify zerowindow" + small + " --window 0.3,0.7 --tol 1e-2").code, 0);
  // the window around k = 1 carries the lattice atom
  EXPECT_EQ(cli("verify zerowindow" + small + " --window 0.8,1.2 --tol 1e-2").code, 1);
  EXPECT_EQ(cli("verify spectralmass" + small + " --range -2.5,2.5").code, 0);
  EXPECT_EQ(cli("verify eigengroup --in fibonacci --nmax 6 --base 100").code, 0);
  EXPECT_EQ(cli("verify nothing" + small).code, 2);
}
