#include "toric/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

namespace toric {

void TrialConfig::validate() const {
  if (sizes.empty() || p_grid.empty()) throw std::invalid_argument("empty sweep grid");
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
  for (double p : p_grid)
    if (!(p >= 0.0) || p >= 1.0) throw std::invalid_argument("p grid entry out of range");
}

WilsonInterval wilson_interval(long failures, long trials, double z) {
  if (trials <= 0) return {0.0, 1.0};
  double n = static_cast<double>(trials);
  double phat = failures / n;
  double z2 = z * z;
  double denom = 1.0 + z2 / n;
  double center = (phat + z2 / (2.0 * n)) / denom;
  double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

namespace {

class RgClassDecoder final : public ClassDecoder {
 public:
  RgClassDecoder(const Lattice& lat, const RgConfig& cfg, QubitPrior prior)
      : impl_(lat, cfg, std::move(prior)) {}
  DecodeResult decode(const Syndrome& syn) const override { return impl_.decode(syn); }

 private:
  RgDecoder impl_;
};

class ExactClassDecoder final : public ClassDecoder {
 public:
  ExactClassDecoder(const Lattice& lat, QubitPrior prior, ChannelModel model)
      : lat_(lat), prior_(std::move(prior)), model_(model) {}

  DecodeResult decode(const Syndrome& syn) const override {
    ClassDistribution dist;
    if (model_ == ChannelModel::depolarizing) {
      dist = class_probabilities_exact(lat_, syn, prior_, Sector::both);
    } else {
      ClassDistribution dx = class_probabilities_exact(lat_, syn, prior_, Sector::x_only);
      ClassDistribution dz = class_probabilities_exact(lat_, syn, prior_, Sector::z_only);
      dist.n_classes = 16;
      for (int b = 0; b < 16; ++b) dist.p[b] = dx.p[b & 3] * dz.p[(b >> 2) & 3];
    }
    HomologyClass chosen(uint8_t(dist.argmax()));
    PauliFrame canon = canonical_correction(lat_, syn);
    PauliFrame corr = canon ^ logical_representative(lat_, chosen ^ winding_parities(lat_, canon));
    return DecodeResult{dist, chosen, dist.argmax_set().size() > 1, std::move(corr)};
  }

 private:
  Lattice lat_;
  QubitPrior prior_;
  ChannelModel model_;
};

class MinEnergyClassDecoder final : public ClassDecoder {
 public:
  MinEnergyClassDecoder(const Lattice& lat, ChannelModel model) : lat_(lat), model_(model) {}

  DecodeResult decode(const Syndrome& syn) const override {
    HomologyClass chosen;
    ClassDistribution dist;
    bool tie = false;
    if (model_ == ChannelModel::depolarizing) {
      MinEnergyResult r = min_energy_class(lat_, syn, Sector::both);
      chosen = r.cls;
      tie = r.argmin_classes.size() > 1;
      dist.p[chosen.bits] = 1.0;
    } else {
      MinEnergyResult rx = min_energy_class(lat_, syn, Sector::x_only);
      MinEnergyResult rz = min_energy_class(lat_, syn, Sector::z_only);
      chosen = rx.cls ^ rz.cls;
      tie = rx.argmin_classes.size() > 1 || rz.argmin_classes.size() > 1;
      dist.p[chosen.bits] = 1.0;
    }
    PauliFrame canon = canonical_correction(lat_, syn);
    PauliFrame corr = canon ^ logical_representative(lat_, chosen ^ winding_parities(lat_, canon));
    return DecodeResult{dist, chosen, tie, std::move(corr)};
  }

 private:
  Lattice lat_;
  ChannelModel model_;
};

}  // namespace

std::unique_ptr<ClassDecoder> make_decoder(const Lattice& lat, DecoderKind kind,
                                           const RgConfig& rg_cfg, const ChannelParam& ch) {
  QubitPrior prior = prior_from_channel(lat, ch);
  switch (kind) {
    case DecoderKind::rg:
      return std::make_unique<RgClassDecoder>(lat, rg_cfg, std::move(prior));
    case DecoderKind::exact:
      return std::make_unique<ExactClassDecoder>(lat, std::move(prior), ch.model);
    case DecoderKind::min_energy:
      return std::make_unique<MinEnergyClassDecoder>(lat, ch.model);
  }
  throw std::invalid_argument("unknown decoder kind");
}

bool run_trial(const Lattice& lat, const ChannelParam& ch, const ClassDecoder& decoder,
               rng::Stream& rng) {
  PauliFrame error = sample_error(lat, ch, rng);
  Syndrome syn = syndrome(lat, error);
  DecodeResult res = decoder.decode(syn);
  return is_stabilizer_element(lat, res.correction ^ error);
}

SweepResult sweep(const TrialConfig& cfg, const std::function<void(const PointResult&)>& on_point) {
  cfg.validate();
  SweepResult out;
  uint64_t point_index = 0;
  for (int l : cfg.sizes) {
    Lattice lat(l);
    for (double p : cfg.p_grid) {
      ChannelParam ch{cfg.model, p, 1.0};
      std::unique_ptr<ClassDecoder> decoder = make_decoder(lat, cfg.decoder, cfg.rg, ch);

      std::atomic<long> failures{0}, errors{0};
      std::atomic<long long> decode_ns{0};
      std::atomic<long> next_trial{0};
      auto worker = [&]() {
        for (;;) {
          long t = next_trial.fetch_add(1);
          if (t >= cfg.trials) break;
          rng::Stream stream(cfg.seed, (point_index << 40) ^ uint64_t(t));
          try {
            PauliFrame error = sample_error(lat, ch, stream);
            Syndrome syn = syndrome(lat, error);
            auto t0 = std::chrono::steady_clock::now();
            DecodeResult res = decoder->decode(syn);
            auto t1 = std::chrono::steady_clock::now();
            decode_ns += std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
            if (!is_stabilizer_element(lat, res.correction ^ error)) ++failures;
          } catch (const std::exception&) {
            ++errors;
          }
        }
      };
      if (cfg.threads <= 1) {
        worker();
      } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < cfg.threads; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
      }

      PointResult pr;
      pr.l = l;
      pr.p = p;
      pr.trials = cfg.trials;
      pr.failures = failures.load();
      pr.errors = errors.load();
      pr.failure_rate = double(pr.failures) / double(pr.trials);
      WilsonInterval ci = wilson_interval(pr.failures, pr.trials);
      pr.ci_low = ci.low;
      pr.ci_high = ci.high;
      pr.mean_decode_us = double(decode_ns.load()) / 1000.0 / double(pr.trials);
      out.points.push_back(pr);
      if (on_point) on_point(pr);
      ++point_index;
    }
  }
  long total_errors = 0;
  for (const auto& pr : out.points) total_errors += pr.errors;
  if (total_errors > 0)
    throw std::runtime_error(std::to_string(total_errors) + " trials threw; run is unhealthy");
  return out;
}

namespace {

struct Curve {
  int l = 0;
  std::vector<double> p;
  std::vector<double> rate;  // floored failure rates
  std::vector<long> trials;
  std::vector<long> failures;
};

std::vector<Curve> curves_from(const SweepResult& results) {
  std::map<int, Curve> by_l;
  for (const auto& pt : results.points) {
    Curve& c = by_l[pt.l];
    c.l = pt.l;
    c.p.push_back(pt.p);
    c.rate.push_back(std::max(pt.failure_rate, 0.5 / double(pt.trials)));
    c.trials.push_back(pt.trials);
    c.failures.push_back(pt.failures);
  }
  std::vector<Curve> out;
  for (auto& [l, c] : by_l) out.push_back(std::move(c));
  return out;
}

// First ascending sign change of log f_big - log f_small, linearly
// interpolated in p. Identical curves yield no crossing.
bool crossing_of(const std::vector<double>& p, const std::vector<double>& f_small,
                 const std::vector<double>& f_big, double* out) {
  for (size_t i = 0; i + 1 < p.size(); ++i) {
    double d0 = std::log(f_big[i]) - std::log(f_small[i]);
    double d1 = std::log(f_big[i + 1]) - std::log(f_small[i + 1]);
    bool change = (d0 < 0.0 && d1 >= 0.0) || (d0 <= 0.0 && d1 > 0.0);
    if (!change) continue;
    *out = d1 != d0 ? p[i] + (0.0 - d0) * (p[i + 1] - p[i]) / (d1 - d0) : p[i];
    return true;
  }
  return false;
}

}  // namespace

ThresholdEstimate estimate_threshold(const SweepResult& results, uint64_t bootstrap_seed,
                                     int bootstrap_rounds) {
  std::vector<Curve> curves = curves_from(results);
  if (curves.size() < 2) throw std::invalid_argument("need at least two lattice sizes");
  std::sort(curves.begin(), curves.end(), [](const Curve& a, const Curve& b) { return a.l < b.l; });
  for (size_t i = 1; i < curves.size(); ++i)
    if (curves[i].p != curves[0].p)
      throw std::invalid_argument("size curves must share the same p grid");

  ThresholdEstimate est;
  std::vector<double> crossings;
  for (size_t i = 0; i + 1 < curves.size(); ++i) {
    ThresholdEstimate::PairCrossing pc;
    pc.l_small = curves[i].l;
    pc.l_big = curves[i + 1].l;
    pc.found = crossing_of(curves[i].p, curves[i].rate, curves[i + 1].rate, &pc.p_cross);
    if (pc.found) crossings.push_back(pc.p_cross);
    est.pairs.push_back(pc);
  }
  if (crossings.empty()) return est;

  est.found = true;
  double mean = 0.0;
  for (double c : crossings) mean += c;
  est.p_th = mean / crossings.size();
  auto [mn, mx] = std::minmax_element(crossings.begin(), crossings.end());
  est.spread = *mx - *mn;

  // Bootstrap: resample failure counts binomially at the observed rates.
  std::vector<double> samples;
  samples.reserve(bootstrap_rounds);
  for (int round = 0; round < bootstrap_rounds; ++round) {
    rng::Stream stream(bootstrap_seed, uint64_t(round));
    std::vector<Curve> resampled = curves;
    for (Curve& c : resampled) {
      for (size_t i = 0; i < c.p.size(); ++i) {
        double rate = double(c.failures[i]) / double(c.trials[i]);
        long k = 0;
        for (long t = 0; t < c.trials[i]; ++t) k += stream.next_bool(rate);
        c.rate[i] = std::max(double(k) / double(c.trials[i]), 0.5 / double(c.trials[i]));
      }
    }
    std::vector<double> cs;
    for (size_t i = 0; i + 1 < resampled.size(); ++i) {
      double x;
      if (crossing_of(resampled[i].p, resampled[i].rate, resampled[i + 1].rate, &x))
        cs.push_back(x);
    }
    if (!cs.empty()) {
      double m = 0.0;
      for (double c : cs) m += c;
      samples.push_back(m / cs.size());
    }
  }
  if (samples.size() >= 10) {
    std::sort(samples.begin(), samples.end());
    est.ci_low = samples[size_t(0.025 * (samples.size() - 1))];
    est.ci_high = samples[size_t(0.975 * (samples.size() - 1))];
  } else {
    est.ci_low = *mn;
    est.ci_high = *mx;
  }
  return est;
}

}  // namespace toric
