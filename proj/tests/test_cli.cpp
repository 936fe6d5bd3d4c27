#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "toric/exact.hpp"
#include "toric/noise.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("TORIC_CLI");
  REQUIRE(p != nullptr);
  return p;
}

fs::path scratch_dir() {
  const char* p = std::getenv("TORIC_TMP");
  REQUIRE(p != nullptr);
  fs::create_directories(p);
  return p;
}

struct CmdResult {
  int exit_code;
  std::string out;
};

CmdResult run_cli(const std::string& args) {
  fs::path out = scratch_dir() / "stdout.txt";
  std::string cmd = cli_path() + " " + args + " > " + out.string() + " 2> " +
                    (scratch_dir() / "stderr.txt").string();
  int rc = std::system(cmd.c_str());
  std::ifstream f(out);
  std::stringstream ss;
  ss << f.rdbuf();
  return {WEXITSTATUS(rc), ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("decode: xz run emits normalized per-sector class tables") {
  CmdResult r = run_cli("decode --l 16 --p 0.08 --model xz --decoder rg2x1 --bp 3 --seed 7");
  REQUIRE(r.exit_code == 0);
  json out = json::parse(r.out);
  auto dx = out["distribution_x"].get<std::vector<double>>();
  auto dz = out["distribution_z"].get<std::vector<double>>();
  REQUIRE(dx.size() == 4);
  double sx = 0, sz = 0, s16 = 0;
  for (double v : dx) sx += v;
  for (double v : dz) sz += v;
  for (double v : out["distribution"].get<std::vector<double>>()) s16 += v;
  CHECK(sx == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sz == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(s16 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(out["correction_syndrome_matches"].get<bool>());
}

TEST_CASE("decode: CLI output equals the library oracle at l=2") {
  CmdResult r = run_cli("decode --l 2 --p 0.1 --model depol --decoder exact --seed 1");
  REQUIRE(r.exit_code == 0);
  json out = json::parse(r.out);
  auto dist = out["distribution"].get<std::vector<double>>();

  toric::Lattice lat(2);
  toric::ChannelParam ch{toric::ChannelModel::depolarizing, 0.1, 1.0};
  toric::rng::Stream rng(1, 0);
  toric::PauliFrame err = toric::sample_error(lat, ch, rng);
  toric::Syndrome syn = toric::syndrome(lat, err);
  toric::QubitPrior prior = toric::prior_from_channel(lat, ch);
  toric::ClassDistribution d =
      toric::class_probabilities_exact(lat, syn, prior, toric::Sector::both);
  for (int c = 0; c < 16; ++c) CHECK(dist[c] == doctest::Approx(d.p[c]).epsilon(1e-12));
}

TEST_CASE("decode: explicit defect lists round-trip through the correction") {
  CmdResult r = run_cli(
      "decode --l 8 --p 0.05 --model depol --decoder rg2x2 --bp 2 "
      "--plaq-defects \"0,0;3,4\" --site-defects \"1,1;5,2\"");
  REQUIRE(r.exit_code == 0);
  json out = json::parse(r.out);
  CHECK(out["correction_syndrome_matches"].get<bool>());
  CHECK(out["syndrome"]["plaq_defects"].size() == 2);
  CHECK(out["syndrome"]["site_defects"].size() == 2);

  // odd parity must be rejected with a usage error
  CmdResult bad = run_cli("decode --l 8 --plaq-defects \"0,0\"");
  CHECK(bad.exit_code == 1);
}

TEST_CASE("sweep: smoke run writes csv, jsonl and manifest; replay is byte-identical") {
  fs::path dir = scratch_dir() / "sweep_smoke";
  fs::remove_all(dir);
  CmdResult r = run_cli("sweep --l 4,8 --p-grid 0.03,0.06 --model xz --decoder rg2x1 --bp 2 "
                        "--trials 50 --seed 11 --out " + dir.string());
  REQUIRE(r.exit_code == 0);
  std::string csv = slurp(dir / "sweep.csv");
  CHECK(csv.rfind("l,p,trials,failures,failure_rate,ci_low,ci_high,mean_decode_us\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + 4 points

  std::ifstream jsonl(dir / "sweep.jsonl");
  int lines = 0;
  std::string line;
  while (std::getline(jsonl, line)) {
    json rec = json::parse(line);
    CHECK(rec["trials"] == 50);
    ++lines;
  }
  CHECK(lines == 4);

  json manifest = json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["config"]["seed"] == 11);
  CHECK(manifest["points"].size() == 4);

  fs::path dir2 = scratch_dir() / "sweep_replay";
  fs::remove_all(dir2);
  CmdResult rr = run_cli("sweep --replay " + (dir / "manifest.json").string() + " --out " +
                         dir2.string());
  REQUIRE(rr.exit_code == 0);
  CHECK(slurp(dir2 / "sweep.csv") == csv);
}

TEST_CASE("threshold: reports crossing for synthetic curves and no-crossing otherwise") {
  fs::path csv = scratch_dir() / "synthetic.csv";
  {
    std::ofstream f(csv);
    f << "l,p,trials,failures,failure_rate,ci_low,ci_high,mean_decode_us\n";
    for (int l : {8, 16}) {
      for (double p : {0.08, 0.09, 0.1, 0.11, 0.12}) {
        double rate = std::min(0.9, std::pow(p / 0.1, double(l)));
        long fails = long(rate * 10000);
        f << l << "," << p << ",10000," << fails << "," << fails / 10000.0 << ",0,1,1.0\n";
      }
    }
  }
  CmdResult r = run_cli("threshold --in " + csv.string() + " --out " +
                        (scratch_dir() / "th_out").string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("p_th") != std::string::npos);
  json rep = json::parse(slurp(scratch_dir() / "th_out" / "threshold.json"));
  CHECK(rep["found"].get<bool>());
  CHECK(std::abs(rep["p_th"].get<double>() - 0.1) < 0.01);

  fs::path flat = scratch_dir() / "flat.csv";
  {
    std::ofstream f(flat);
    f << "l,p,trials,failures,failure_rate,ci_low,ci_high,mean_decode_us\n";
    for (int l : {8, 16})
      for (double p : {0.08, 0.1, 0.12}) f << l << "," << p << ",100,10,0.1,0,1,1.0\n";
  }
  CmdResult nr = run_cli("threshold --in " + flat.string());
  REQUIRE(nr.exit_code == 0);
  CHECK(nr.out.find("no crossing") != std::string::npos);
}

TEST_CASE("usage errors exit with code 1") {
  CHECK(run_cli("decode --l 3 --decoder rg2x2").exit_code == 1);   // not a power of two
  CHECK(run_cli("sweep --l 8 --p-grid bogus").exit_code == 1);
  CHECK(run_cli("nonsense").exit_code == 1);
}
