#include "toric/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace toric {

int ClassDistribution::argmax() const {
  int best = 0;
  for (int c = 1; c < n_classes; ++c)
    if (p[c] > p[best]) best = c;
  return best;
}

std::vector<int> ClassDistribution::argmax_set() const {
  int best = argmax();
  std::vector<int> out;
  for (int c = 0; c < n_classes; ++c)
    if (p[c] == p[best]) out.push_back(c);
  return out;
}

double ClassDistribution::sum() const {
  double s = 0.0;
  for (int c = 0; c < n_classes; ++c) s += p[c];
  return s;
}

namespace {

uint64_t frame_mask(const BitVec& part) {
  uint64_t m = 0;
  for (size_t i = 0; i < part.nbits; ++i)
    if (part.get(i)) m |= uint64_t(1) << i;
  return m;
}

struct Gen {
  uint64_t mask;
  int part;  // 0 flips the X support, 1 flips the Z support
};

struct Setup {
  int nq = 0;
  Sector sector = Sector::both;
  int n_classes = 16;
  uint64_t x0 = 0, z0 = 0;
  std::vector<Gen> gens;
  uint64_t rep_x1 = 0, rep_x2 = 0;  // X-part masks of the bit-0 / bit-1 representatives
  uint64_t rep_z1 = 0, rep_z2 = 0;  // Z-part masks of the bit-2 / bit-3 representatives
  uint8_t base_bits = 0;
};

void check_guard(const Lattice& lat, Sector sector) {
  if (lat.n_qubits() > 64)
    throw std::invalid_argument("lattice too large for exact enumeration (" +
                                std::to_string(lat.n_qubits()) + " qubits)");
  int span = 0;
  if (sector != Sector::z_only) span += lat.n_sites() - 1;
  if (sector != Sector::x_only) span += lat.n_plaq() - 1;
  if (span > 30)
    throw std::invalid_argument("lattice too large for exact enumeration (stabilizer span 2^" +
                                std::to_string(span) + ")");
}

Setup build_setup(const Lattice& lat, const Syndrome& syn, Sector sector) {
  check_guard(lat, sector);
  Setup s;
  s.nq = lat.n_qubits();
  s.sector = sector;
  s.n_classes = sector == Sector::both ? 16 : 4;

  Syndrome restricted(lat.n_plaq(), lat.n_sites());
  if (sector != Sector::z_only) restricted.plaq = syn.plaq;
  if (sector != Sector::x_only) restricted.site = syn.site;
  PauliFrame canon = canonical_correction(lat, restricted);
  s.x0 = frame_mask(canon.x);
  s.z0 = frame_mask(canon.z);
  s.base_bits = winding_parities(lat, canon).bits;

  // Independent stabilizer generators: all site stars but one (X type), all
  // plaquettes but one (Z type), as the sector demands.
  if (sector != Sector::z_only) {
    for (int idx = 0; idx + 1 < lat.n_sites(); ++idx)
      s.gens.push_back({frame_mask(site_operator(lat, idx % lat.l1, idx / lat.l1).x), 0});
  }
  if (sector != Sector::x_only) {
    for (int idx = 0; idx + 1 < lat.n_plaq(); ++idx)
      s.gens.push_back({frame_mask(plaquette_operator(lat, idx % lat.l1, idx / lat.l1).z), 1});
  }

  s.rep_x1 = frame_mask(logical_representative(lat, HomologyClass(1)).x);
  s.rep_x2 = frame_mask(logical_representative(lat, HomologyClass(2)).x);
  s.rep_z1 = frame_mask(logical_representative(lat, HomologyClass(4)).z);
  s.rep_z2 = frame_mask(logical_representative(lat, HomologyClass(8)).z);
  return s;
}

int class_slot(const Setup& s, uint8_t label) {
  switch (s.sector) {
    case Sector::both:
      return label;
    case Sector::x_only:
      return label & 3;
    case Sector::z_only:
      return (label >> 2) & 3;
  }
  return 0;
}

// Runs the coset enumeration: for each admitted class, visits every element
// of starting-config XOR stabilizer span in Gray-code order.
// Policy interface: start(slot, x, z) for the first config, step(slot, x, z)
// after each generator flip.
template <class Policy>
void enumerate(const Setup& s, Policy& pol) {
  int lx_count = s.sector == Sector::z_only ? 1 : 4;
  int lz_count = s.sector == Sector::x_only ? 1 : 4;
  for (int lx = 0; lx < lx_count; ++lx) {
    for (int lz = 0; lz < lz_count; ++lz) {
      uint8_t label = s.base_bits ^ uint8_t(lx) ^ uint8_t(lz << 2);
      int slot = class_slot(s, label);
      uint64_t x = s.x0 ^ (lx & 1 ? s.rep_x1 : 0) ^ (lx & 2 ? s.rep_x2 : 0);
      uint64_t z = s.z0 ^ (lz & 1 ? s.rep_z1 : 0) ^ (lz & 2 ? s.rep_z2 : 0);
      pol.start(slot, x, z);
      uint64_t n = uint64_t(1) << s.gens.size();
      for (uint64_t t = 1; t < n; ++t) {
        const Gen& g = s.gens[std::countr_zero(t)];
        if (g.part == 0)
          x ^= g.mask;
        else
          z ^= g.mask;
        pol.step(slot, x, z);
      }
    }
  }
}

enum class WeightKind { pauli, xz_sum, x_part, z_part };

int config_weight(WeightKind kind, uint64_t x, uint64_t z) {
  switch (kind) {
    case WeightKind::pauli:
      return std::popcount(x | z);
    case WeightKind::xz_sum:
      return std::popcount(x) + std::popcount(z);
    case WeightKind::x_part:
      return std::popcount(x);
    case WeightKind::z_part:
      return std::popcount(z);
  }
  return 0;
}

// Uniform-channel accumulation: every consistent chain weighs ratio^W, where
// W is the chosen weight measure. Long-double sums keep small ratios exact
// enough without log-sum-exp rescaling.
struct UniformPolicy {
  WeightKind kind;
  std::array<long double, 130> tab{};
  std::array<long double, 16> total{};
  std::array<long double, 16> weight_sum{};

  UniformPolicy(WeightKind k, double ratio, int max_w) : kind(k) {
    long double t = 1.0L;
    for (int w = 0; w <= max_w; ++w) {
      tab[w] = t;
      t *= ratio;
    }
  }
  void start(int slot, uint64_t x, uint64_t z) { step(slot, x, z); }
  void step(int slot, uint64_t x, uint64_t z) {
    int w = config_weight(kind, x, z);
    total[slot] += tab[w];
    weight_sum[slot] += w * tab[w];
  }
};

// Arbitrary per-qubit priors; log-domain with a per-class running maximum.
struct GeneralPolicy {
  const Setup& s;
  std::vector<std::array<double, 4>> logtab;  // per qubit, per letter
  std::array<double, 16> max_log{};
  std::array<double, 16> scaled_sum{};
  double logw = 0.0;
  uint64_t prev_x = 0, prev_z = 0;

  GeneralPolicy(const Setup& setup, const QubitPrior& prior) : s(setup) {
    logtab.resize(s.nq);
    for (int q = 0; q < s.nq; ++q) {
      const auto& t = prior.q[q];
      std::array<double, 4> lt;
      if (s.sector == Sector::both) {
        for (int l = 0; l < 4; ++l) lt[l] = t[l] > 0 ? std::log(t[l]) : -1e300;
      } else if (s.sector == Sector::x_only) {
        double pf = t[1] + t[2];
        lt = {pf < 1 ? std::log(1 - pf) : -1e300, pf > 0 ? std::log(pf) : -1e300, 0, 0};
      } else {
        double pf = t[3] + t[2];
        lt = {pf < 1 ? std::log(1 - pf) : -1e300, 0, 0, pf > 0 ? std::log(pf) : -1e300};
      }
      logtab[q] = lt;
    }
    max_log.fill(-std::numeric_limits<double>::infinity());
  }

  double letter_log(int q, uint64_t x, uint64_t z) const {
    int xb = int((x >> q) & 1), zb = int((z >> q) & 1);
    int letter = xb ? (zb ? 2 : 1) : (zb ? 3 : 0);
    return logtab[q][letter];
  }

  void accumulate(int slot) {
    if (logw <= -1e290) return;  // zero-probability config
    if (logw > max_log[slot]) {
      scaled_sum[slot] = scaled_sum[slot] * std::exp(max_log[slot] - logw) + 1.0;
      max_log[slot] = logw;
    } else {
      scaled_sum[slot] += std::exp(logw - max_log[slot]);
    }
  }

  void start(int slot, uint64_t x, uint64_t z) {
    logw = 0.0;
    for (int q = 0; q < s.nq; ++q) logw += letter_log(q, x, z);
    prev_x = x;
    prev_z = z;
    accumulate(slot);
  }
  void step(int slot, uint64_t x, uint64_t z) {
    uint64_t changed = (prev_x ^ x) | (prev_z ^ z);
    while (changed) {
      int q = std::countr_zero(changed);
      changed &= changed - 1;
      logw += letter_log(q, x, z) - letter_log(q, prev_x, prev_z);
    }
    prev_x = x;
    prev_z = z;
    accumulate(slot);
  }
};

struct MinWeightPolicy {
  WeightKind kind;
  std::array<int, 16> min_w{};
  explicit MinWeightPolicy(WeightKind k) : kind(k) { min_w.fill(std::numeric_limits<int>::max()); }
  void start(int slot, uint64_t x, uint64_t z) { step(slot, x, z); }
  void step(int slot, uint64_t x, uint64_t z) {
    min_w[slot] = std::min(min_w[slot], config_weight(kind, x, z));
  }
};

bool priors_uniform(const QubitPrior& prior) {
  for (size_t i = 1; i < prior.q.size(); ++i)
    if (prior.q[i] != prior.q[0]) return false;
  return !prior.q.empty();
}

}  // namespace

ClassDistribution class_probabilities_exact(const Lattice& lat, const Syndrome& syn,
                                            const QubitPrior& prior, Sector sector) {
  if (prior.n() != lat.n_qubits())
    throw std::invalid_argument("prior size does not match lattice");
  Setup s = build_setup(lat, syn, sector);

  ClassDistribution dist;
  dist.n_classes = s.n_classes;
  std::array<long double, 16> totals{};

  bool fast = false;
  if (priors_uniform(prior)) {
    const auto& t = prior.q[0];
    if (sector != Sector::both) {
      double pf = sector == Sector::x_only ? t[1] + t[2] : t[3] + t[2];
      WeightKind k = sector == Sector::x_only ? WeightKind::x_part : WeightKind::z_part;
      UniformPolicy pol(k, pf < 1.0 ? pf / (1.0 - pf) : 0.0, s.nq);
      if (pf < 1.0) {
        enumerate(s, pol);
        totals = pol.total;
        fast = true;
      }
    } else if (t[1] == t[2] && t[2] == t[3] && t[0] > 0) {
      UniformPolicy pol(WeightKind::pauli, t[1] / t[0], s.nq);
      enumerate(s, pol);
      totals = pol.total;
      fast = true;
    } else if (t[0] > 0 && std::abs(t[0] * t[2] - t[1] * t[3]) <= 1e-15 * t[0] && t[1] == t[3]) {
      UniformPolicy pol(WeightKind::xz_sum, t[1] / t[0], 2 * s.nq);
      enumerate(s, pol);
      totals = pol.total;
      fast = true;
    }
  }
  if (!fast) {
    GeneralPolicy pol(s, prior);
    enumerate(s, pol);
    double m = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < s.n_classes; ++c)
      if (pol.max_log[c] > m) m = pol.max_log[c];
    for (int c = 0; c < s.n_classes; ++c)
      totals[c] = pol.scaled_sum[c] > 0
                      ? static_cast<long double>(pol.scaled_sum[c]) * std::exp((long double)(pol.max_log[c] - m))
                      : 0.0L;
  }

  long double norm = 0.0L;
  for (int c = 0; c < s.n_classes; ++c) norm += totals[c];
  if (!(norm > 0.0L)) throw std::runtime_error("class probabilities vanished");
  for (int c = 0; c < s.n_classes; ++c) dist.p[c] = static_cast<double>(totals[c] / norm);
  return dist;
}

FreeEnergyReport free_energy_report(const Lattice& lat, const Syndrome& syn,
                                    const ChannelParam& ch, Sector sector) {
  ch.validate();
  if (!(ch.p > 0.0)) throw std::invalid_argument("free energy needs p > 0");
  Setup s = build_setup(lat, syn, sector);

  FreeEnergyReport rep;
  rep.n_classes = s.n_classes;
  double ratio;
  WeightKind kind;
  if (ch.model == ChannelModel::depolarizing) {
    rep.beta = nishimori_beta(ch.p, ch.j);
    ratio = ch.p / (3.0 * (1.0 - ch.p));
    kind = sector == Sector::both  ? WeightKind::pauli
           : sector == Sector::x_only ? WeightKind::x_part
                                      : WeightKind::z_part;
  } else {
    rep.beta = std::log((1.0 - ch.p) / ch.p) / ch.j;
    ratio = ch.p / (1.0 - ch.p);
    kind = sector == Sector::both  ? WeightKind::xz_sum
           : sector == Sector::x_only ? WeightKind::x_part
                                      : WeightKind::z_part;
  }
  UniformPolicy pol(kind, ratio, 2 * s.nq);
  enumerate(s, pol);

  double log_ratio = std::log(ratio);
  long double z_all = 0.0L;
  for (int c = 0; c < s.n_classes; ++c) z_all += pol.total[c];
  rep.log_z = static_cast<double>(std::log(z_all));
  for (int c = 0; c < s.n_classes; ++c) {
    double z_cls = static_cast<double>(pol.total[c]);
    double mean_w = static_cast<double>(pol.weight_sum[c] / pol.total[c]);
    auto& pc = rep.cls[c];
    pc.energy = ch.j * mean_w;
    pc.entropy = std::log(z_cls) - mean_w * log_ratio;
    pc.free_energy = pc.energy - pc.entropy / rep.beta;
  }
  return rep;
}

MinEnergyResult min_energy_class(const Lattice& lat, const Syndrome& syn, Sector sector) {
  Setup s = build_setup(lat, syn, sector);
  WeightKind kind = sector == Sector::both  ? WeightKind::pauli
                    : sector == Sector::x_only ? WeightKind::x_part
                                               : WeightKind::z_part;
  MinWeightPolicy pol(kind);
  enumerate(s, pol);

  MinEnergyResult res;
  res.n_classes = s.n_classes;
  int best = 0;
  for (int c = 0; c < s.n_classes; ++c) {
    res.weight_per_class[c] = pol.min_w[c];
    if (pol.min_w[c] < pol.min_w[best]) best = c;
  }
  res.min_weight = pol.min_w[best];
  for (int c = 0; c < s.n_classes; ++c)
    if (pol.min_w[c] == res.min_weight) res.argmin_classes.push_back(c);
  uint8_t bits = uint8_t(best);
  if (sector == Sector::z_only) bits = uint8_t(best << 2);
  res.cls = HomologyClass(bits);
  return res;
}

Matching mwpm_small(const std::vector<std::pair<int, int>>& defects, int l1, int l2) {
  size_t k = defects.size();
  if (k % 2 != 0) throw std::invalid_argument("odd number of defects cannot be paired");
  if (k > 20) throw std::invalid_argument("mwpm_small handles at most 20 defects");
  Matching m;
  if (k == 0) return m;

  auto dist = [&](int a, int b) {
    int di = std::abs(defects[a].first - defects[b].first) % l1;
    int dj = std::abs(defects[a].second - defects[b].second) % l2;
    return std::min(di, l1 - di) + std::min(dj, l2 - dj);
  };

  uint32_t full = (uint32_t(1) << k) - 1;
  const int kInf = std::numeric_limits<int>::max() / 2;
  std::vector<int> dp(full + 1, kInf);
  dp[0] = 0;
  for (uint32_t mask = 1; mask <= full; ++mask) {
    if (std::popcount(mask) % 2 != 0) continue;
    int i = std::countr_zero(mask);
    for (int j = i + 1; j < static_cast<int>(k); ++j) {
      if (!(mask >> j & 1)) continue;
      uint32_t rest = mask ^ (1u << i) ^ (1u << j);
      if (dp[rest] < kInf) dp[mask] = std::min(dp[mask], dp[rest] + dist(i, j));
    }
  }

  uint32_t mask = full;
  while (mask) {
    int i = std::countr_zero(mask);
    for (int j = i + 1; j < static_cast<int>(k); ++j) {
      if (!(mask >> j & 1)) continue;
      uint32_t rest = mask ^ (1u << i) ^ (1u << j);
      if (dp[rest] + dist(i, j) == dp[mask]) {  // smallest partner wins ties
        m.pairs.emplace_back(i, j);
        mask = rest;
        break;
      }
    }
  }
  m.total_distance = dp[full];
  return m;
}

}  // namespace toric
