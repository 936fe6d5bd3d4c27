#pragma once

#include <vector>

#include "toric/lattice.hpp"
#include "toric/noise.hpp"
#include "toric/rng.hpp"

namespace toric::testing {

inline PauliFrame random_frame(const Lattice& lat, rng::Stream& rng, double p = 0.3) {
  PauliFrame f(lat.n_qubits());
  for (int q = 0; q < lat.n_qubits(); ++q) {
    if (rng.next_bool(p)) f.x.set(q, true);
    if (rng.next_bool(p)) f.z.set(q, true);
  }
  return f;
}

inline PauliFrame random_stabilizer_product(const Lattice& lat, rng::Stream& rng, int count) {
  PauliFrame f(lat.n_qubits());
  for (int t = 0; t < count; ++t) {
    int i = int(rng.next_u64() % uint64_t(lat.l1));
    int j = int(rng.next_u64() % uint64_t(lat.l2));
    f ^= rng.next_bool(0.5) ? site_operator(lat, i, j) : plaquette_operator(lat, i, j);
  }
  return f;
}

inline Syndrome random_syndrome(const Lattice& lat, rng::Stream& rng, double p = 0.1) {
  ChannelParam ch{ChannelModel::depolarizing, p, 1.0};
  return syndrome(lat, sample_error(lat, ch, rng));
}

// Independent GF(2) membership oracle: row-reduces the generator set and
// tests whether `v` lies in its span.
class F2Span {
 public:
  explicit F2Span(size_t nbits) : nbits_(nbits), words_((nbits + 63) / 64) {}

  void add(const BitVec& gen) {
    std::vector<uint64_t> row = gen.words;
    reduce(row);
    if (!is_zero(row)) rows_.push_back(row);
  }

  bool contains(const BitVec& v) const {
    std::vector<uint64_t> row = v.words;
    reduce(row);
    return is_zero(row);
  }

 private:
  static int leading_bit(const std::vector<uint64_t>& row) {
    for (size_t w = row.size(); w-- > 0;)
      if (row[w]) return int(w) * 64 + (63 - std::countl_zero(row[w]));
    return -1;
  }
  static bool is_zero(const std::vector<uint64_t>& row) {
    for (uint64_t w : row)
      if (w) return false;
    return true;
  }
  void reduce(std::vector<uint64_t>& row) const {
    for (const auto& r : rows_) {
      int lead = leading_bit(r);
      if (lead >= 0 && (row[lead >> 6] >> (lead & 63) & 1))
        for (size_t w = 0; w < row.size(); ++w) row[w] ^= r[w];
    }
  }

  size_t nbits_;
  size_t words_;
  std::vector<std::vector<uint64_t>> rows_;
};

// Membership in the full stabilizer group, checked by row reduction rather
// than through the winding-parity shortcut.
inline bool stabilizer_member_oracle(const Lattice& lat, const PauliFrame& f) {
  F2Span xspan(lat.n_qubits()), zspan(lat.n_qubits());
  for (int j = 0; j < lat.l2; ++j) {
    for (int i = 0; i < lat.l1; ++i) {
      xspan.add(site_operator(lat, i, j).x);
      zspan.add(plaquette_operator(lat, i, j).z);
    }
  }
  return xspan.contains(f.x) && zspan.contains(f.z);
}

}  // namespace toric::testing
