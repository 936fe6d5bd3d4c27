#include "toric/lattice.hpp"

#include <stdexcept>
#include <string>

namespace toric {

Lattice::Lattice(int l1_, int l2_) : l1(l1_), l2(l2_) {
  if (l1 < 2 || l2 < 2)
    throw std::invalid_argument("lattice dimensions must be at least 2, got " +
                                std::to_string(l1) + "x" + std::to_string(l2));
}

Syndrome syndrome(const Lattice& lat, const PauliFrame& frame) {
  if (frame.n() != lat.n_qubits())
    throw std::invalid_argument("frame has " + std::to_string(frame.n()) +
                                " qubits, lattice needs " + std::to_string(lat.n_qubits()));
  Syndrome syn(lat.n_plaq(), lat.n_sites());
  for (int j = 0; j < lat.l2; ++j) {
    for (int i = 0; i < lat.l1; ++i) {
      bool pd = false;
      for (int q : lat.plaq_support(i, j)) pd ^= frame.x.get(q);
      if (pd) syn.plaq.set(lat.plaq_index(i, j), true);
      bool sd = false;
      for (int q : lat.site_support(i, j)) sd ^= frame.z.get(q);
      if (sd) syn.site.set(lat.site_index(i, j), true);
    }
  }
  return syn;
}

HomologyClass winding_parities(const Lattice& lat, const PauliFrame& frame) {
  bool b0 = false, b1 = false, b2 = false, b3 = false;
  for (int i = 0; i < lat.l1; ++i) {
    b0 ^= frame.x.get(lat.h_qubit(i, 0));
    b3 ^= frame.z.get(lat.v_qubit(i, 0));
  }
  for (int j = 0; j < lat.l2; ++j) {
    b1 ^= frame.x.get(lat.v_qubit(0, j));
    b2 ^= frame.z.get(lat.h_qubit(0, j));
  }
  return HomologyClass(uint8_t(b0 | (b1 << 1) | (b2 << 2) | (b3 << 3)));
}

HomologyClass homology_class(const Lattice& lat, const PauliFrame& frame) {
  if (syndrome(lat, frame).any())
    throw std::invalid_argument("homology_class requires a closed frame (zero syndrome)");
  return winding_parities(lat, frame);
}

namespace {

// Walk one plaquette defect at (i,j) to the pivot (pi,pj), flipping X along
// the dual path: first i to pi at fixed j, then j to pj at fixed i=pi.
void route_plaq_defect(const Lattice& lat, PauliFrame& f, int i, int j, int pi, int pj) {
  while (i > pi) f.x.flip(lat.v_qubit(i--, j));
  while (i < pi) f.x.flip(lat.v_qubit(++i, j));
  while (j > pj) f.x.flip(lat.h_qubit(pi, j--));
  while (j < pj) f.x.flip(lat.h_qubit(pi, ++j));
}

void route_site_defect(const Lattice& lat, PauliFrame& f, int i, int j, int pi, int pj) {
  while (i > pi) f.z.flip(lat.h_qubit(--i, j));
  while (i < pi) f.z.flip(lat.h_qubit(i++, j));
  while (j > pj) f.z.flip(lat.v_qubit(pi, --j));
  while (j < pj) f.z.flip(lat.v_qubit(pi, j++));
}

}  // namespace

PauliFrame canonical_correction(const Lattice& lat, const Syndrome& syn) {
  if (syn.plaq.parity() || syn.site.parity())
    throw std::invalid_argument("syndrome has odd defect parity");
  PauliFrame f(lat.n_qubits());
  int pivot = -1;
  for (int idx = 0; idx < lat.n_plaq(); ++idx) {
    if (!syn.plaq.get(idx)) continue;
    if (pivot < 0) {
      pivot = idx;
      continue;
    }
    route_plaq_defect(lat, f, idx % lat.l1, idx / lat.l1, pivot % lat.l1, pivot / lat.l1);
  }
  pivot = -1;
  for (int idx = 0; idx < lat.n_sites(); ++idx) {
    if (!syn.site.get(idx)) continue;
    if (pivot < 0) {
      pivot = idx;
      continue;
    }
    route_site_defect(lat, f, idx % lat.l1, idx / lat.l1, pivot % lat.l1, pivot / lat.l1);
  }
  return f;
}

bool is_stabilizer_element(const Lattice& lat, const PauliFrame& frame) {
  return !syndrome(lat, frame).any() && winding_parities(lat, frame).trivial();
}

PauliFrame plaquette_operator(const Lattice& lat, int i, int j) {
  PauliFrame f(lat.n_qubits());
  for (int q : lat.plaq_support(i, j)) f.z.flip(q);
  return f;
}

PauliFrame site_operator(const Lattice& lat, int i, int j) {
  PauliFrame f(lat.n_qubits());
  for (int q : lat.site_support(i, j)) f.x.flip(q);
  return f;
}

PauliFrame logical_representative(const Lattice& lat, HomologyClass cls) {
  PauliFrame f(lat.n_qubits());
  if (cls.x_wind_1())  // X along the i=0 column of horizontal edges
    for (int j = 0; j < lat.l2; ++j) f.x.flip(lat.h_qubit(0, j));
  if (cls.x_wind_2())  // X along the j=0 row of vertical edges
    for (int i = 0; i < lat.l1; ++i) f.x.flip(lat.v_qubit(i, 0));
  if (cls.z_wind_1())  // Z along the j=0 row of horizontal edges
    for (int i = 0; i < lat.l1; ++i) f.z.flip(lat.h_qubit(i, 0));
  if (cls.z_wind_2())  // Z along the i=0 column of vertical edges
    for (int j = 0; j < lat.l2; ++j) f.z.flip(lat.v_qubit(0, j));
  return f;
}

PauliFrame translated(const Lattice& lat, const PauliFrame& frame, int di, int dj) {
  PauliFrame out(lat.n_qubits());
  for (int j = 0; j < lat.l2; ++j) {
    for (int i = 0; i < lat.l1; ++i) {
      int hs = lat.h_qubit(i, j), ht = lat.h_qubit(i + di, j + dj);
      out.x.set(ht, frame.x.get(hs));
      out.z.set(ht, frame.z.get(hs));
      int vs = lat.v_qubit(i, j), vt = lat.v_qubit(i + di, j + dj);
      out.x.set(vt, frame.x.get(vs));
      out.z.set(vt, frame.z.get(vs));
    }
  }
  return out;
}

Syndrome translated(const Lattice& lat, const Syndrome& syn, int di, int dj) {
  Syndrome out(lat.n_plaq(), lat.n_sites());
  for (int j = 0; j < lat.l2; ++j) {
    for (int i = 0; i < lat.l1; ++i) {
      out.plaq.set(lat.plaq_index(i + di, j + dj), syn.plaq.get(lat.plaq_index(i, j)));
      out.site.set(lat.site_index(i + di, j + dj), syn.site.get(lat.site_index(i, j)));
    }
  }
  return out;
}

}  // namespace toric
