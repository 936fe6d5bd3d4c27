#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "helpers.hpp"
#include "toric/montecarlo.hpp"

using namespace toric;

TEST_CASE("wilson interval contains the point estimate and covers synthetic draws") {
  WilsonInterval ci = wilson_interval(10, 100);
  CHECK(ci.low < 0.1);
  CHECK(ci.high > 0.1);
  CHECK(wilson_interval(0, 50).low == 0.0);
  CHECK(wilson_interval(50, 50).high == 1.0);

  // coverage: ~95% of Bernoulli(0.3) batches should cover 0.3
  int covered = 0, reps = 400;
  for (int r = 0; r < reps; ++r) {
    rng::Stream rng(71, uint64_t(r));
    long k = 0, n = 200;
    for (long t = 0; t < n; ++t) k += rng.next_bool(0.3);
    WilsonInterval w = wilson_interval(k, n);
    covered += w.low <= 0.3 && 0.3 <= w.high;
  }
  CHECK(covered > 0.9 * reps);
}

TEST_CASE("p=0 trials always succeed") {
  Lattice lat(8);
  ChannelParam ch{ChannelModel::independent_xz, 0.0, 1.0};
  RgConfig rg{BlockVariant::two_by_one, SectorMode::independent_xz, 3, PairHandling::marginalize};
  auto dec = make_decoder(lat, DecoderKind::rg, rg, ch);
  for (int t = 0; t < 20; ++t) {
    rng::Stream rng(72, uint64_t(t));
    CHECK(run_trial(lat, ch, *dec, rng));
  }
}

TEST_CASE("fully mixed channel with the exact decoder succeeds at chance level") {
  Lattice lat(2);
  ChannelParam ch{ChannelModel::depolarizing, 0.75, 1.0};
  auto dec = make_decoder(lat, DecoderKind::exact, RgConfig{}, ch);
  long succ = 0, n = 10000;
  for (long t = 0; t < n; ++t) {
    rng::Stream rng(73, uint64_t(t));
    succ += run_trial(lat, ch, *dec, rng);
  }
  double expect = 1.0 / 16, sigma = std::sqrt(expect * (1 - expect) / double(n));
  CHECK(std::abs(double(succ) / double(n) - expect) < 5 * sigma);
}

TEST_CASE("sweep is deterministic and thread-count independent") {
  TrialConfig cfg;
  cfg.sizes = {4, 8};
  cfg.p_grid = {0.04, 0.08};
  cfg.trials = 200;
  cfg.decoder = DecoderKind::rg;
  cfg.rg = {BlockVariant::two_by_one, SectorMode::independent_xz, 2, PairHandling::marginalize};
  cfg.model = ChannelModel::independent_xz;
  cfg.seed = 99;
  cfg.threads = 1;
  SweepResult a = sweep(cfg);
  SweepResult b = sweep(cfg);
  cfg.threads = 3;
  SweepResult c = sweep(cfg);
  REQUIRE(a.points.size() == 4);
  for (size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].failures == b.points[i].failures);
    CHECK(a.points[i].failures == c.points[i].failures);
    CHECK(a.points[i].trials == 200);
    CHECK(a.points[i].errors == 0);
    CHECK(a.points[i].mean_decode_us > 0.0);
    CHECK(a.points[i].ci_low <= a.points[i].failure_rate);
    CHECK(a.points[i].failure_rate <= a.points[i].ci_high);
  }
}

TEST_CASE("trials that throw fail the sweep") {
  TrialConfig cfg;
  cfg.sizes = {8};  // too large for the exact decoder
  cfg.p_grid = {0.05};
  cfg.trials = 3;
  cfg.decoder = DecoderKind::exact;
  cfg.model = ChannelModel::independent_xz;
  cfg.seed = 1;
  CHECK_THROWS_AS(sweep(cfg), std::runtime_error);
}

TEST_CASE("failure rate decays with size below threshold") {
  TrialConfig cfg;
  cfg.sizes = {8, 16};
  cfg.p_grid = {0.05};
  cfg.trials = 300;
  cfg.decoder = DecoderKind::rg;
  cfg.rg = {BlockVariant::two_by_one, SectorMode::independent_xz, 3, PairHandling::marginalize};
  cfg.model = ChannelModel::independent_xz;
  cfg.seed = 7;
  SweepResult r = sweep(cfg);
  CHECK(r.points[1].failure_rate < 0.10);
  CHECK(r.points[1].failure_rate <= r.points[0].failure_rate + 0.05);
}

namespace {

SweepResult synthetic_curves(const std::vector<int>& sizes, const std::vector<double>& ps,
                             double p0) {
  SweepResult r;
  for (int l : sizes) {
    for (double p : ps) {
      PointResult pt;
      pt.l = l;
      pt.p = p;
      pt.trials = 100000;
      pt.failure_rate = std::min(0.9, std::pow(p / p0, double(l)));
      pt.failures = long(pt.failure_rate * pt.trials);
      pt.failure_rate = double(pt.failures) / pt.trials;
      r.points.push_back(pt);
    }
  }
  return r;
}

}  // namespace

TEST_CASE("threshold estimation: synthetic crossing and no-crossing cases") {
  std::vector<double> ps{0.07, 0.08, 0.09, 0.1, 0.11, 0.12, 0.13};
  SweepResult crossing = synthetic_curves({4, 8, 16}, ps, 0.1);
  ThresholdEstimate est = estimate_threshold(crossing, 5, 50);
  CHECK(est.found);
  CHECK(std::abs(est.p_th - 0.1) < 0.01);
  CHECK(est.pairs.size() == 2);
  for (const auto& pc : est.pairs) CHECK(pc.found);

  // identical curves never cross
  SweepResult flat;
  for (int l : {4, 8}) {
    for (double p : ps) {
      PointResult pt;
      pt.l = l;
      pt.p = p;
      pt.trials = 1000;
      pt.failures = 100;
      pt.failure_rate = 0.1;
      flat.points.push_back(pt);
    }
  }
  ThresholdEstimate none = estimate_threshold(flat);
  CHECK_FALSE(none.found);

  CHECK_THROWS_AS(estimate_threshold(SweepResult{}), std::invalid_argument);
}
