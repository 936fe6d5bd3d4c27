#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "toric/rg.hpp"

namespace toric {

enum class DecoderKind { rg, exact, min_energy };

struct TrialConfig {
  std::vector<int> sizes;
  std::vector<double> p_grid;
  long trials = 1000;
  DecoderKind decoder = DecoderKind::rg;
  RgConfig rg;
  ChannelModel model = ChannelModel::independent_xz;
  uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

struct PointResult {
  int l = 0;
  double p = 0.0;
  long trials = 0;
  long failures = 0;
  long errors = 0;  // trials that threw; nonzero fails the run
  double failure_rate = 0.0;
  double ci_low = 0.0, ci_high = 0.0;
  double mean_decode_us = 0.0;
};

struct SweepResult {
  std::vector<PointResult> points;
};

struct WilsonInterval {
  double low = 0.0, high = 1.0;
};
WilsonInterval wilson_interval(long failures, long trials, double z = 1.959963984540054);

class ClassDecoder {
 public:
  virtual ~ClassDecoder() = default;
  virtual DecodeResult decode(const Syndrome& syn) const = 0;
};

std::unique_ptr<ClassDecoder> make_decoder(const Lattice& lat, DecoderKind kind,
                                           const RgConfig& rg_cfg, const ChannelParam& ch);

// One decode attempt: sample an error, decode its syndrome, and declare
// success when the residual (correction XOR error) acts trivially.
bool run_trial(const Lattice& lat, const ChannelParam& ch, const ClassDecoder& decoder,
               rng::Stream& rng);

// Deterministic for a fixed config: per-trial streams are derived from the
// master seed and a global trial id, so thread count cannot change counts.
SweepResult sweep(const TrialConfig& cfg,
                  const std::function<void(const PointResult&)>& on_point = {});

struct ThresholdEstimate {
  struct PairCrossing {
    int l_small = 0, l_big = 0;
    bool found = false;
    double p_cross = 0.0;
  };
  bool found = false;
  double p_th = 0.0;
  double spread = 0.0;            // max - min across crossing pairs
  double ci_low = 0.0, ci_high = 0.0;  // bootstrap over trial resampling
  std::vector<PairCrossing> pairs;
};

// Crossing of linearly interpolated log-failure curves for each consecutive
// size pair. Curves that never cross in range report found = false.
ThresholdEstimate estimate_threshold(const SweepResult& results, uint64_t bootstrap_seed = 12345,
                                     int bootstrap_rounds = 200);

}  // namespace toric
