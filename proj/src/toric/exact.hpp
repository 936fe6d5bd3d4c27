#pragma once

#include <array>
#include <utility>
#include <vector>

#include "toric/lattice.hpp"
#include "toric/noise.hpp"

namespace toric {

enum class Sector { both, x_only, z_only };

// Probabilities over homology classes. Index layout matches HomologyClass
// bits: both-sector uses indices 0..15 as (b0 | b1<<1 | b2<<2 | b3<<3);
// x_only uses 0..3 as (b0 | b1<<1); z_only uses 0..3 as (b2 | b3<<1).
struct ClassDistribution {
  std::array<double, 16> p{};
  int n_classes = 16;

  int argmax() const;
  std::vector<int> argmax_set() const;  // exact ties, lowest index first
  double sum() const;
};

struct FreeEnergyReport {
  struct PerClass {
    double free_energy = 0.0;
    double energy = 0.0;
    double entropy = 0.0;
  };
  std::array<PerClass, 16> cls{};
  int n_classes = 16;
  double beta = 0.0;
  double log_z = 0.0;
};

struct MinEnergyResult {
  HomologyClass cls;                  // lowest-index argmin class
  int min_weight = 0;                 // its minimal consistent-chain weight
  std::vector<int> argmin_classes;    // all classes attaining min_weight
  std::array<int, 16> weight_per_class{};
  int n_classes = 16;
};

struct Matching {
  std::vector<std::pair<int, int>> pairs;  // indices into the defect list
  int total_distance = 0;
};

// Exhaustive class probabilities by coset enumeration: one consistent
// representative composed with the full stabilizer span and the logical
// representatives. Feasibility guard keeps the span at or below 2^30
// (sector both: l <= 4; single sector: l <= 4 on square lattices).
ClassDistribution class_probabilities_exact(const Lattice& lat, const Syndrome& syn,
                                            const QubitPrior& prior, Sector sector);

// Per-class Gibbs quantities at the Nishimori temperature of the channel.
FreeEnergyReport free_energy_report(const Lattice& lat, const Syndrome& syn,
                                    const ChannelParam& ch, Sector sector = Sector::both);

MinEnergyResult min_energy_class(const Lattice& lat, const Syndrome& syn, Sector sector);

// Minimum-total-distance perfect matching of defect coordinates under the
// torus Manhattan metric. Exact subset DP; at most 20 defects. Ties resolve
// to the lexicographically smallest pairing.
Matching mwpm_small(const std::vector<std::pair<int, int>>& defects, int l1, int l2);

}  // namespace toric
