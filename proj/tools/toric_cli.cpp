// Command-line front end: single decodes, Monte Carlo sweeps, threshold
// estimation, and the exact-vs-RG oracle check.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "toric/montecarlo.hpp"

using nlohmann::json;
using namespace toric;

namespace {

constexpr const char* kArtifactVersion = "0.1.0";
constexpr const char* kCsvSchema = "l,p,trials,failures,failure_rate,ci_low,ci_high,mean_decode_us";

struct RunOptions {
  int l = 16;
  double p = 0.08;
  std::vector<int> sizes;
  std::string p_grid;
  std::string model = "depol";
  std::string decoder = "rg2x2";
  int bp = 3;
  long trials = 1000;
  uint64_t seed = 0;
  int threads = 1;
  std::string out_dir;
  std::string plaq_defects, site_defects;
  std::string replay_path;
  std::string pair_mode = "marginalize";
};

ChannelModel parse_model(const std::string& s) {
  if (s == "depol") return ChannelModel::depolarizing;
  if (s == "xz") return ChannelModel::independent_xz;
  throw CLI::ValidationError("--model", "expected depol or xz");
}

std::string model_name(ChannelModel m) {
  return m == ChannelModel::depolarizing ? "depol" : "xz";
}

void parse_decoder(const std::string& s, ChannelModel model, DecoderKind* kind, RgConfig* rg) {
  rg->sector = model == ChannelModel::independent_xz ? SectorMode::independent_xz
                                                     : SectorMode::correlated;
  if (s == "exact") {
    *kind = DecoderKind::exact;
  } else if (s == "minenergy") {
    *kind = DecoderKind::min_energy;
  } else if (s == "rg2x2") {
    *kind = DecoderKind::rg;
    rg->variant = BlockVariant::two_by_two;
  } else if (s == "rg2x1") {
    *kind = DecoderKind::rg;
    rg->variant = BlockVariant::two_by_one;
  } else {
    throw CLI::ValidationError("--decoder", "expected exact, minenergy, rg2x2 or rg2x1");
  }
}

std::vector<double> parse_p_grid(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    double lo, hi, step;
    char c1, c2;
    std::istringstream is(spec);
    if (!(is >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0)
      throw CLI::ValidationError("--p-grid", "expected lo:hi:step or comma list");
    for (double p = lo; p <= hi + 1e-12; p += step) out.push_back(p);
  } else {
    std::istringstream is(spec);
    std::string tok;
    while (std::getline(is, tok, ',')) out.push_back(std::stod(tok));
  }
  if (out.empty()) throw CLI::ValidationError("--p-grid", "empty grid");
  return out;
}

std::vector<std::pair<int, int>> parse_coords(const std::string& spec) {
  std::vector<std::pair<int, int>> out;
  std::istringstream is(spec);
  std::string tok;
  while (std::getline(is, tok, ';')) {
    if (tok.empty()) continue;
    int i, j;
    char c;
    std::istringstream p(tok);
    if (!(p >> i >> c >> j) || c != ',')
      throw CLI::ValidationError("defect list", "expected i,j;i,j;...");
    out.emplace_back(i, j);
  }
  return out;
}

std::string utc_now() {
  auto t = std::chrono::system_clock::now();
  std::time_t tt = std::chrono::system_clock::to_time_t(t);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
  return buf;
}

std::string csv_row(const PointResult& pt, double mean_us) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.10g,%ld,%ld,%.10g,%.10g,%.10g,%.3f", pt.l, pt.p, pt.trials,
                pt.failures, pt.failure_rate, pt.ci_low, pt.ci_high, mean_us);
  return buf;
}

json point_json(const PointResult& pt) {
  return json{{"l", pt.l},
              {"p", pt.p},
              {"trials", pt.trials},
              {"failures", pt.failures},
              {"failure_rate", pt.failure_rate},
              {"ci_low", pt.ci_low},
              {"ci_high", pt.ci_high},
              {"mean_decode_us", pt.mean_decode_us}};
}

json config_json(const TrialConfig& cfg, const std::string& decoder_name,
                 const std::string& pair_mode) {
  return json{{"sizes", cfg.sizes},
              {"p_grid", cfg.p_grid},
              {"trials", cfg.trials},
              {"decoder", decoder_name},
              {"model", model_name(cfg.model)},
              {"bp", cfg.rg.bp_rounds},
              {"pair_correlations", pair_mode},
              {"seed", cfg.seed},
              {"threads", cfg.threads}};
}

int cmd_decode(const RunOptions& opt) {
  Lattice lat(opt.l);
  ChannelModel model = parse_model(opt.model);
  ChannelParam ch{model, opt.p, 1.0};
  DecoderKind kind;
  RgConfig rg;
  rg.bp_rounds = opt.bp;
  rg.pair_correlations =
      opt.pair_mode == "keep_joint" ? PairHandling::keep_joint : PairHandling::marginalize;
  parse_decoder(opt.decoder, model, &kind, &rg);
  auto decoder = make_decoder(lat, kind, rg, ch);

  Syndrome syn(lat.n_plaq(), lat.n_sites());
  json sampled;
  if (!opt.plaq_defects.empty() || !opt.site_defects.empty()) {
    for (auto [i, j] : parse_coords(opt.plaq_defects)) syn.plaq.flip(lat.plaq_index(i, j));
    for (auto [i, j] : parse_coords(opt.site_defects)) syn.site.flip(lat.site_index(i, j));
    if (syn.plaq.parity() || syn.site.parity())
      throw CLI::ValidationError("defect list", "defect parities must be even");
  } else {
    rng::Stream rng(opt.seed, 0);
    PauliFrame err = sample_error(lat, ch, rng);
    syn = syndrome(lat, err);
    sampled["weight"] = err.weight();
    sampled["class_bits"] = winding_parities(lat, err).bits;
  }

  DecodeResult res = decoder->decode(syn);
  if (!sampled.is_null()) sampled["success"] = res.chosen.bits == sampled["class_bits"];

  json out;
  out["l"] = opt.l;
  out["p"] = opt.p;
  out["model"] = opt.model;
  out["decoder"] = opt.decoder;
  out["bp"] = rg.bp_rounds;
  out["seed"] = opt.seed;
  json plaq = json::array(), site = json::array();
  for (int j = 0; j < lat.l2; ++j)
    for (int i = 0; i < lat.l1; ++i) {
      if (syn.plaq.get(lat.plaq_index(i, j))) plaq.push_back({i, j});
      if (syn.site.get(lat.site_index(i, j))) site.push_back({i, j});
    }
  out["syndrome"] = {{"plaq_defects", plaq}, {"site_defects", site}};
  out["distribution"] = std::vector<double>(res.dist.p.begin(), res.dist.p.end());
  if (model == ChannelModel::independent_xz && kind != DecoderKind::min_energy) {
    std::vector<double> dx(4, 0.0), dz(4, 0.0);
    for (int b = 0; b < 16; ++b) {
      dx[b & 3] += res.dist.p[b];
      dz[(b >> 2) & 3] += res.dist.p[b];
    }
    out["distribution_x"] = dx;
    out["distribution_z"] = dz;
  }
  out["chosen_class"] = {{"bits", res.chosen.bits},
                         {"x_wind", {res.chosen.x_wind_1(), res.chosen.x_wind_2()}},
                         {"z_wind", {res.chosen.z_wind_1(), res.chosen.z_wind_2()}}};
  out["tie"] = res.tie;
  out["correction_weight"] = res.correction.weight();
  out["correction_syndrome_matches"] = syndrome(lat, res.correction) == syn;
  if (!sampled.is_null()) out["sampled_error"] = sampled;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int write_sweep_outputs(const TrialConfig& cfg, const SweepResult& result,
                        const std::string& decoder_name, const std::string& pair_mode,
                        const std::string& out_dir, const std::string& started,
                        const std::vector<double>* timing_override) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  std::ofstream csv(fs::path(out_dir) / "sweep.csv");
  csv << kCsvSchema << "\n";
  std::ofstream jsonl(fs::path(out_dir) / "sweep.jsonl");
  for (size_t i = 0; i < result.points.size(); ++i) {
    double us = timing_override ? (*timing_override)[i] : result.points[i].mean_decode_us;
    csv << csv_row(result.points[i], us) << "\n";
    PointResult pt = result.points[i];
    pt.mean_decode_us = us;
    jsonl << point_json(pt).dump() << "\n";
  }

  json manifest;
  manifest["artifact_version"] = kArtifactVersion;
  manifest["csv_schema"] = kCsvSchema;
  manifest["seed"] = cfg.seed;
  manifest["config"] = config_json(cfg, decoder_name, pair_mode);
  manifest["started_utc"] = started;
  manifest["finished_utc"] = utc_now();
  json pts = json::array();
  for (size_t i = 0; i < result.points.size(); ++i) {
    PointResult pt = result.points[i];
    if (timing_override) pt.mean_decode_us = (*timing_override)[i];
    pts.push_back(point_json(pt));
  }
  manifest["points"] = pts;
  std::ofstream mf(fs::path(out_dir) / "manifest.json");
  mf << manifest.dump(2) << "\n";
  std::cerr << "wrote " << (fs::path(out_dir) / "sweep.csv").string() << "\n";
  return 0;
}

int cmd_sweep(RunOptions& opt) {
  TrialConfig cfg;
  std::string decoder_name = opt.decoder;
  std::string pair_mode = opt.pair_mode;
  std::vector<double> replay_timing;
  std::vector<long> replay_failures;

  if (!opt.replay_path.empty()) {
    std::ifstream in(opt.replay_path);
    if (!in) throw std::runtime_error("cannot open manifest " + opt.replay_path);
    json manifest = json::parse(in);
    const json& c = manifest["config"];
    cfg.sizes = c["sizes"].get<std::vector<int>>();
    cfg.p_grid = c["p_grid"].get<std::vector<double>>();
    cfg.trials = c["trials"].get<long>();
    cfg.model = parse_model(c["model"].get<std::string>());
    decoder_name = c["decoder"].get<std::string>();
    pair_mode = c.value("pair_correlations", "marginalize");
    cfg.rg.bp_rounds = c["bp"].get<int>();
    cfg.seed = c["seed"].get<uint64_t>();
    cfg.threads = opt.threads;
    for (const auto& pt : manifest["points"]) {
      replay_timing.push_back(pt["mean_decode_us"].get<double>());
      replay_failures.push_back(pt["failures"].get<long>());
    }
  } else {
    cfg.sizes = opt.sizes.empty() ? std::vector<int>{opt.l} : opt.sizes;
    cfg.p_grid = parse_p_grid(opt.p_grid.empty() ? std::to_string(opt.p) : opt.p_grid);
    cfg.trials = opt.trials;
    cfg.model = parse_model(opt.model);
    cfg.seed = opt.seed;
    cfg.threads = opt.threads;
    cfg.rg.bp_rounds = opt.bp;
  }
  cfg.rg.pair_correlations =
      pair_mode == "keep_joint" ? PairHandling::keep_joint : PairHandling::marginalize;
  parse_decoder(decoder_name, cfg.model, &cfg.decoder, &cfg.rg);

  std::string started = utc_now();
  SweepResult result = sweep(cfg, [](const PointResult& pt) {
    std::fprintf(stderr, "l=%d p=%.4f failures=%ld/%ld rate=%.5f (%.1f us/decode)\n", pt.l, pt.p,
                 pt.failures, pt.trials, pt.failure_rate, pt.mean_decode_us);
  });

  if (!opt.replay_path.empty()) {
    for (size_t i = 0; i < result.points.size(); ++i) {
      if (result.points[i].failures != replay_failures[i])
        throw std::runtime_error("replay mismatch at point " + std::to_string(i));
    }
    std::cerr << "replay verified: failure counts identical\n";
  }

  std::string out_dir = opt.out_dir.empty() ? "sweep_out" : opt.out_dir;
  return write_sweep_outputs(cfg, result, decoder_name, pair_mode, out_dir, started,
                             opt.replay_path.empty() ? nullptr : &replay_timing);
}

SweepResult read_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kCsvSchema)
    throw std::runtime_error("unexpected CSV header in " + path);
  SweepResult r;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    PointResult pt;
    if (std::sscanf(line.c_str(), "%d,%lf,%ld,%ld,%lf,%lf,%lf,%lf", &pt.l, &pt.p, &pt.trials,
                    &pt.failures, &pt.failure_rate, &pt.ci_low, &pt.ci_high,
                    &pt.mean_decode_us) != 8)
      throw std::runtime_error("bad CSV row: " + line);
    r.points.push_back(pt);
  }
  return r;
}

int cmd_threshold(const std::string& in_path, const std::string& out_dir, uint64_t seed) {
  SweepResult r = read_sweep_csv(in_path);
  ThresholdEstimate est = estimate_threshold(r, seed);
  json rep;
  rep["input"] = in_path;
  rep["found"] = est.found;
  json pairs = json::array();
  for (const auto& pc : est.pairs) {
    pairs.push_back({{"l_small", pc.l_small},
                     {"l_big", pc.l_big},
                     {"found", pc.found},
                     {"p_cross", pc.found ? json(pc.p_cross) : json()}});
  }
  rep["pairs"] = pairs;
  if (est.found) {
    rep["p_th"] = est.p_th;
    rep["spread"] = est.spread;
    rep["ci_low"] = est.ci_low;
    rep["ci_high"] = est.ci_high;
    std::printf("p_th = %.5f  (pair spread %.5f, bootstrap 95%% CI [%.5f, %.5f])\n", est.p_th,
                est.spread, est.ci_low, est.ci_high);
    for (const auto& pc : est.pairs)
      if (pc.found)
        std::printf("  l=%d vs l=%d: crossing at %.5f\n", pc.l_small, pc.l_big, pc.p_cross);
      else
        std::printf("  l=%d vs l=%d: no crossing\n", pc.l_small, pc.l_big);
  } else {
    std::printf("no crossing in range\n");
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream f(std::filesystem::path(out_dir) / "threshold.json");
    f << rep.dump(2) << "\n";
  }
  return 0;
}

int cmd_oracle_check(long trials, uint64_t seed) {
  // small-lattice equivalence of the recursive decoder against the exact one
  int failures = 0;
  {
    Lattice lat(2);
    for (double p : {0.05, 0.1, 0.19}) {
      ChannelParam ch{ChannelModel::depolarizing, p, 1.0};
      QubitPrior prior = prior_from_channel(lat, ch);
      RgConfig cfg{BlockVariant::two_by_two, SectorMode::correlated, 3,
                   PairHandling::marginalize};
      double max_err = 0.0;
      for (int t = 0; t < 200; ++t) {
        rng::Stream rng(seed, uint64_t(t) + 1000 * uint64_t(p * 100));
        Syndrome syn = syndrome(lat, sample_error(lat, ch, rng));
        DecodeResult r = rg_decode(lat, syn, prior, cfg);
        ClassDistribution d = class_probabilities_exact(lat, syn, prior, Sector::both);
        for (int c = 0; c < 16; ++c) max_err = std::max(max_err, std::abs(r.dist.p[c] - d.p[c]));
      }
      std::printf("l=2 depol p=%.2f: max |rg - exact| = %.2e %s\n", p, max_err,
                  max_err < 1e-9 ? "OK" : "FAIL");
      failures += max_err >= 1e-9;
    }
  }
  {
    Lattice lat(4);
    double p = 0.05;
    ChannelParam ch{ChannelModel::independent_xz, p, 1.0};
    QubitPrior prior = prior_from_channel(lat, ch);
    RgConfig cfg{BlockVariant::two_by_two, SectorMode::independent_xz, 3,
                 PairHandling::marginalize};
    RgDecoder dec(lat, cfg, prior);
    long rg_ok = 0, ml_ok = 0;
    for (long t = 0; t < trials; ++t) {
      rng::Stream rng(seed ^ 0xabcdef, uint64_t(t));
      PauliFrame err = sample_error(lat, ch, rng);
      Syndrome syn = syndrome(lat, err);
      uint8_t truth = winding_parities(lat, err).bits;
      rg_ok += dec.decode(syn).chosen.bits == truth;
      ClassDistribution dx = class_probabilities_exact(lat, syn, prior, Sector::x_only);
      ClassDistribution dz = class_probabilities_exact(lat, syn, prior, Sector::z_only);
      ml_ok += uint8_t(dx.argmax() | (dz.argmax() << 2)) == truth;
    }
    double gap = std::abs(double(rg_ok) - double(ml_ok)) / double(trials);
    std::printf("l=4 xz p=%.2f: rg success %.4f, exact ML %.4f, gap %.4f %s\n", p,
                double(rg_ok) / trials, double(ml_ok) / trials, gap, gap < 0.02 ? "OK" : "FAIL");
    failures += gap >= 0.02;
  }
  if (failures) {
    std::printf("oracle-check: %d check(s) FAILED\n", failures);
    return 2;
  }
  std::printf("oracle-check: all checks passed\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toric-code RG/BP decoding toolkit"};
  app.require_subcommand(1);
  RunOptions opt;

  CLI::App* dec = app.add_subcommand("decode", "decode one syndrome and print the class table");
  dec->add_option("--l", opt.l, "lattice size");
  dec->add_option("--p", opt.p, "channel error probability");
  dec->add_option("--model", opt.model, "noise model: depol or xz");
  dec->add_option("--decoder", opt.decoder, "exact, minenergy, rg2x2 or rg2x1");
  dec->add_option("--bp", opt.bp, "belief propagation rounds");
  dec->add_option("--seed", opt.seed, "seed for the sampled syndrome");
  dec->add_option("--plaq-defects", opt.plaq_defects, "explicit plaquette defects i,j;i,j");
  dec->add_option("--site-defects", opt.site_defects, "explicit site defects i,j;i,j");
  dec->add_option("--pair-correlations", opt.pair_mode, "marginalize or keep_joint");
  dec->set_config("--config");

  CLI::App* sw = app.add_subcommand("sweep", "Monte Carlo failure-rate sweep");
  sw->add_option("--l", opt.sizes, "lattice sizes")->delimiter(',');
  sw->add_option("--p-grid", opt.p_grid, "p grid: lo:hi:step or comma list");
  sw->add_option("--p", opt.p, "single p (when no grid is given)");
  sw->add_option("--model", opt.model, "noise model: depol or xz");
  sw->add_option("--decoder", opt.decoder, "exact, minenergy, rg2x2 or rg2x1");
  sw->add_option("--bp", opt.bp, "belief propagation rounds");
  sw->add_option("--trials", opt.trials, "trials per grid point");
  sw->add_option("--seed", opt.seed, "master seed");
  sw->add_option("--threads", opt.threads, "worker threads");
  sw->add_option("--out", opt.out_dir, "output directory");
  sw->add_option("--replay", opt.replay_path, "re-run a manifest and verify counts");
  sw->add_option("--pair-correlations", opt.pair_mode, "marginalize or keep_joint");
  sw->set_config("--config");

  CLI::App* th = app.add_subcommand("threshold", "estimate the crossing point of sweep curves");
  std::string in_path, th_out;
  uint64_t th_seed = 12345;
  th->add_option("--in", in_path, "sweep.csv produced by the sweep command")->required();
  th->add_option("--out", th_out, "directory for threshold.json");
  th->add_option("--seed", th_seed, "bootstrap seed");

  CLI::App* oc = app.add_subcommand("oracle-check", "exact-vs-RG equivalence suite");
  oc->add_option("--trials", opt.trials, "trials for the l=4 comparison");
  oc->add_option("--seed", opt.seed, "master seed");

  try {
    app.parse(argc, argv);
    if (dec->parsed()) return cmd_decode(opt);
    if (sw->parsed()) return cmd_sweep(opt);
    if (th->parsed()) return cmd_threshold(in_path, th_out, th_seed);
    if (oc->parsed()) return cmd_oracle_check(opt.trials == 1000 ? 2000 : opt.trials, opt.seed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
