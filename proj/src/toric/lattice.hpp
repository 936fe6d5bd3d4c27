#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <vector>

namespace toric {

// Word-backed bit vector. Bits past `nbits` are kept zero so that equality
// and popcount can work on whole words.
struct BitVec {
  std::vector<uint64_t> words;
  size_t nbits = 0;

  BitVec() = default;
  explicit BitVec(size_t n) : words((n + 63) / 64, 0), nbits(n) {}

  bool get(size_t i) const { return (words[i >> 6] >> (i & 63)) & 1u; }
  void set(size_t i, bool v) {
    uint64_t m = uint64_t(1) << (i & 63);
    if (v)
      words[i >> 6] |= m;
    else
      words[i >> 6] &= ~m;
  }
  void flip(size_t i) { words[i >> 6] ^= uint64_t(1) << (i & 63); }
  void clear() { std::fill(words.begin(), words.end(), 0); }

  BitVec& operator^=(const BitVec& o) {
    for (size_t w = 0; w < words.size(); ++w) words[w] ^= o.words[w];
    return *this;
  }

  size_t popcount() const {
    size_t n = 0;
    for (uint64_t w : words) n += std::popcount(w);
    return n;
  }
  bool any() const {
    for (uint64_t w : words)
      if (w) return true;
    return false;
  }
  bool parity() const { return popcount() & 1; }

  friend bool operator==(const BitVec& a, const BitVec& b) {
    return a.nbits == b.nbits && a.words == b.words;
  }
};

// An n-qubit Pauli operator stored as paired X/Z support vectors; overall
// phases are not tracked. Composition is bitwise XOR of both parts.
struct PauliFrame {
  BitVec x, z;

  PauliFrame() = default;
  explicit PauliFrame(int n_qubits) : x(n_qubits), z(n_qubits) {}

  int n() const { return static_cast<int>(x.nbits); }

  // Letter codes follow the (I, X, Y, Z) prior order: 0=I 1=X 2=Y 3=Z.
  int letter(int q) const {
    bool xb = x.get(q), zb = z.get(q);
    return xb ? (zb ? 2 : 1) : (zb ? 3 : 0);
  }
  void set_letter(int q, int letter) {
    x.set(q, letter == 1 || letter == 2);
    z.set(q, letter == 2 || letter == 3);
  }

  int weight() const {
    size_t n = 0;
    for (size_t w = 0; w < x.words.size(); ++w) n += std::popcount(x.words[w] | z.words[w]);
    return static_cast<int>(n);
  }
  int weight_x() const { return static_cast<int>(x.popcount()); }
  int weight_z() const { return static_cast<int>(z.popcount()); }

  PauliFrame& operator^=(const PauliFrame& o) {
    x ^= o.x;
    z ^= o.z;
    return *this;
  }
  friend PauliFrame operator^(PauliFrame a, const PauliFrame& b) { return a ^= b; }
  friend bool operator==(const PauliFrame& a, const PauliFrame& b) = default;
};

// Violated-check indicator bits: plaquette defects flag odd X-overlap with a
// plaquette, site defects flag odd Z-overlap with a site star.
struct Syndrome {
  BitVec plaq, site;

  Syndrome() = default;
  Syndrome(int n_plaq, int n_site) : plaq(n_plaq), site(n_site) {}

  Syndrome& operator^=(const Syndrome& o) {
    plaq ^= o.plaq;
    site ^= o.site;
    return *this;
  }
  friend bool operator==(const Syndrome& a, const Syndrome& b) = default;
  bool any() const { return plaq.any() || site.any(); }
};

// Winding parities of a frame against the four reference loops. Bit layout:
//   bit 0: X support vs the j=0 row of horizontal edges
//   bit 1: X support vs the i=0 column of vertical edges
//   bit 2: Z support vs the i=0 column of horizontal edges
//   bit 3: Z support vs the j=0 row of vertical edges
// There are 16 values; composition of frames XORs the bits, and the zero
// value on a closed frame means membership in the stabilizer group.
struct HomologyClass {
  uint8_t bits = 0;

  HomologyClass() = default;
  explicit HomologyClass(uint8_t b) : bits(b) {}

  bool trivial() const { return bits == 0; }
  bool x_wind_1() const { return bits & 1; }
  bool x_wind_2() const { return bits & 2; }
  bool z_wind_1() const { return bits & 4; }
  bool z_wind_2() const { return bits & 8; }

  friend HomologyClass operator^(HomologyClass a, HomologyClass b) {
    return HomologyClass(a.bits ^ b.bits);
  }
  friend bool operator==(HomologyClass a, HomologyClass b) = default;
};

// Toric-code lattice on an l1 x l2 torus. Qubits sit on edges: h(i,j) joins
// vertex (i,j) to (i+1,j), v(i,j) joins (i,j) to (i,j+1), coordinates wrap.
// Plaquette (i,j) is the unit square with lower-left corner (i,j); site (i,j)
// is the star of vertex (i,j).
struct Lattice {
  int l1 = 0, l2 = 0;

  explicit Lattice(int l) : Lattice(l, l) {}
  Lattice(int l1_, int l2_);

  int n_qubits() const { return 2 * l1 * l2; }
  int n_plaq() const { return l1 * l2; }
  int n_sites() const { return l1 * l2; }
  bool is_square() const { return l1 == l2; }
  int size() const { return l1; }  // linear size; meaningful for square lattices

  int wrap1(int i) const { return ((i % l1) + l1) % l1; }
  int wrap2(int j) const { return ((j % l2) + l2) % l2; }

  int h_qubit(int i, int j) const { return wrap2(j) * l1 + wrap1(i); }
  int v_qubit(int i, int j) const { return l1 * l2 + wrap2(j) * l1 + wrap1(i); }
  bool is_horizontal(int q) const { return q < l1 * l2; }

  int plaq_index(int i, int j) const { return wrap2(j) * l1 + wrap1(i); }
  int site_index(int i, int j) const { return wrap2(j) * l1 + wrap1(i); }

  std::array<int, 4> plaq_support(int i, int j) const {
    return {h_qubit(i, j), h_qubit(i, j + 1), v_qubit(i, j), v_qubit(i + 1, j)};
  }
  std::array<int, 4> site_support(int i, int j) const {
    return {h_qubit(i, j), h_qubit(i - 1, j), v_qubit(i, j), v_qubit(i, j - 1)};
  }
};

Syndrome syndrome(const Lattice& lat, const PauliFrame& frame);

// Winding parities without the closed-frame precondition. Constant on cosets
// of the stabilizer group, including cosets of open frames.
HomologyClass winding_parities(const Lattice& lat, const PauliFrame& frame);

// Requires syndrome(frame) == 0; throws std::invalid_argument otherwise.
HomologyClass homology_class(const Lattice& lat, const PauliFrame& frame);

// Deterministic frame whose syndrome equals `syn`: defects of each sector are
// routed to the raster-first defect along straight i-then-j paths.
PauliFrame canonical_correction(const Lattice& lat, const Syndrome& syn);

bool is_stabilizer_element(const Lattice& lat, const PauliFrame& frame);

// Z on the plaquette boundary (a stabilizer generator).
PauliFrame plaquette_operator(const Lattice& lat, int i, int j);
// X on the site star (a stabilizer generator).
PauliFrame site_operator(const Lattice& lat, int i, int j);

// Product of reference logical loops selected by the class bits; its winding
// parities equal `cls` exactly.
PauliFrame logical_representative(const Lattice& lat, HomologyClass cls);

PauliFrame translated(const Lattice& lat, const PauliFrame& frame, int di, int dj);
Syndrome translated(const Lattice& lat, const Syndrome& syn, int di, int dj);

}  // namespace toric
