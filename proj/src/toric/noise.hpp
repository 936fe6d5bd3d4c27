#pragma once

#include <array>
#include <vector>

#include "toric/lattice.hpp"
#include "toric/rng.hpp"

namespace toric {

enum class ChannelModel { depolarizing, independent_xz };

// For depolarizing, p is the total Pauli-error probability (X, Y, Z each
// with p/3). For independent_xz, p is both the bit-flip and the phase-flip
// probability, applied independently. Syndromes are always exact.
struct ChannelParam {
  ChannelModel model = ChannelModel::depolarizing;
  double p = 0.0;
  double j = 1.0;  // energy unit

  void validate() const;
};

// Per-qubit distribution over (I, X, Y, Z).
struct QubitPrior {
  std::vector<std::array<double, 4>> q;

  int n() const { return static_cast<int>(q.size()); }
  void normalize();
};

PauliFrame sample_error(const Lattice& lat, const ChannelParam& ch, rng::Stream& rng);

QubitPrior prior_from_channel(const Lattice& lat, const ChannelParam& ch);

// beta = (1/J) ln(3(1-p)/p). Rejects p <= 0 and p >= 1.
double nishimori_beta(double p, double j = 1.0);

// E(c) = J * weight(c); every non-identity Pauli counts once.
double chain_energy(const PauliFrame& frame, double j = 1.0);

}  // namespace toric
