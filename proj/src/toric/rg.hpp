#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "toric/exact.hpp"
#include "toric/lattice.hpp"
#include "toric/noise.hpp"

namespace toric {

enum class BlockVariant { two_by_two, two_by_one };
enum class SectorMode { correlated, independent_xz };
enum class PairHandling { marginalize, keep_joint };

struct RgConfig {
  BlockVariant variant = BlockVariant::two_by_two;
  SectorMode sector = SectorMode::correlated;
  int bp_rounds = 3;
  PairHandling pair_correlations = PairHandling::marginalize;
};

// One level's tiling of the torus into overlapping code blocks. Each cell
// owns a fixed set of qubits, borrows the remainder of its block from
// adjacent cells, and emits two coarse qubits (one coarse horizontal edge,
// one coarse vertical edge).
struct BlockGeometry {
  Lattice fine;
  Lattice coarse;
  BlockVariant variant = BlockVariant::two_by_two;
  int merge_axis = -1;  // two_by_one: 0 halves l1, 1 halves l2; two_by_two: -1
  int na = 0, nb = 0;   // cell grid

  BlockGeometry(const Lattice& f, const Lattice& c) : fine(f), coarse(c) {}

  int n_slots = 0;
  std::vector<uint8_t> slot_owned;
  std::vector<uint16_t> plaq_slot_masks;  // interior plaquette checks, as slot masks
  uint16_t site_slot_mask = 0;            // interior site check (0 when absent)
  uint16_t cut_xh = 0, cut_xv = 0;        // coarse-qubit X cuts (owned slots)
  uint16_t cut_zh = 0, cut_zv = 0;        // coarse-qubit Z cuts (owned slots)

  struct SharedSlot {
    int slot;
    int da, db;  // cell offset of the neighbour sharing this qubit
    int nslot;   // the slot this qubit occupies in the neighbour's block
  };
  std::vector<SharedSlot> shared;
  std::array<int, 16> shared_index_of_slot{};  // slot -> index into `shared`, or -1

  // Consistent X-configurations per interior plaquette syndrome pattern;
  // entry = slot mask | (coarse class bits << 16).
  std::vector<std::vector<uint32_t>> xconfigs;

  int cell_count() const { return na * nb; }
  int cell_index(int a, int b) const { return wrap_b(b) * na + wrap_a(a); }
  int wrap_a(int a) const { return ((a % na) + na) % na; }
  int wrap_b(int b) const { return ((b % nb) + nb) % nb; }

  void cell_qubits(int a, int b, int* out) const;     // n_slots fine qubit ids
  void interior_plaqs(int a, int b, int* out) const;  // ids matching plaq_slot_masks order
  int interior_site(int a, int b) const;              // -1 when absent
  int coarse_h_qubit(int a, int b) const;
  int coarse_v_qubit(int a, int b) const;
};

BlockGeometry build_geometry(const Lattice& fine, BlockVariant variant, int merge_axis = 0);

// Coarse check = XOR of the fine checks it merges (4 per cell for 2x2 blocks,
// 2 for 2x1), separately for plaquettes and sites.
Syndrome coarse_syndrome(const BlockGeometry& g, const Syndrome& fine);

// The induced coarse error: per coarse qubit, X part = fine X parity over the
// cell's X cut, Z part = fine Z parity over the Z cut. Closed frames keep
// their homology class under this map.
PauliFrame reduce_frame(const BlockGeometry& g, const PauliFrame& fine);

// Per-qubit factor tables for one level. Alphabet 2 restricts letters to
// {0: no flip, 1: flip} of a single sector; alphabet 4 is full (I,X,Y,Z).
struct LevelPriors {
  int alphabet = 4;
  std::vector<std::array<double, 4>> q;

  // keep_joint mode: joint table over the coarse pair emitted by one cell of
  // the previous level, indexed letter_h * 4 + letter_v. Both partners point
  // at the same table.
  bool has_pairs = false;
  std::vector<int> pair_partner;   // partner qubit id, or -1
  std::vector<uint8_t> pair_role;  // 0: first table axis, 1: second
  std::vector<int> pair_id;
  std::vector<std::array<double, 16>> pair_tables;
};

// Incoming messages, one per (cell, shared slot): the neighbour's conditional
// distribution for that qubit's error letter.
struct BlockBelief {
  int alphabet = 4;
  int shared_per_cell = 0;
  std::vector<std::array<double, 4>> msgs;
};

BlockBelief init_beliefs(const BlockGeometry& g, int alphabet);

// Synchronous flooding rounds: every cell recomputes, for each shared qubit,
// the conditional marginal given its interior syndrome and the incoming
// messages on its other shared qubits, then all messages are replaced at
// once. rounds == 0 leaves `bel` untouched.
void bp_pass(const BlockGeometry& g, const LevelPriors& priors, const Syndrome& fine_syn,
             BlockBelief& bel, int rounds);

// Joint distribution of the cell's two coarse qubits, indexed
// (xh | xv<<1 | zh<<2 | zv<<3); alphabet-2 levels use indices 0..3.
std::array<double, 16> block_likelihoods(const BlockGeometry& g, int a, int b,
                                         const LevelPriors& priors, const Syndrome& fine_syn,
                                         const BlockBelief& bel);

struct DecodeResult {
  ClassDistribution dist;  // over the 16 homology classes
  HomologyClass chosen;
  bool tie = false;
  PauliFrame correction;
};

// Maps the site-sector (Z) decoding problem onto an equivalent
// plaquette-sector (X) problem on the same torus: the qubit relabeling
// h(i,j) -> v(i,j-1), v(i,j) -> h(i-1,j) carries every site support onto a
// plaquette support.
PauliFrame dualize_frame_z_to_x(const Lattice& lat, const PauliFrame& f);
Syndrome dualize_site_to_plaq(const Lattice& lat, const Syndrome& syn);

class RgDecoder {
 public:
  RgDecoder(const Lattice& lat, const RgConfig& cfg, QubitPrior prior);

  DecodeResult decode(const Syndrome& syn) const;

  const RgConfig& config() const { return cfg_; }
  int levels() const { return static_cast<int>(geoms_.size()); }
  const BlockGeometry& geometry(int level) const { return geoms_[level]; }

 private:
  Lattice lat_;
  RgConfig cfg_;
  QubitPrior prior_;
  std::vector<BlockGeometry> geoms_;  // reduction chain down to the 2x2 base
};

// Recursive block decoding: per level, run belief propagation, convert block
// likelihoods into the next level's noise model, reduce the syndrome, and
// finish with the exact enumerator on the 2x2 base.
DecodeResult rg_decode(const Lattice& lat, const Syndrome& syn, const QubitPrior& prior,
                       const RgConfig& cfg);

}  // namespace toric
