#include "toric/rg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace toric {

namespace {

constexpr double kMsgFloor = 1e-30;

inline int letter_of(int xb, int zb) { return xb ? (zb ? 2 : 1) : (zb ? 3 : 0); }

uint16_t slot_mask(std::initializer_list<int> slots) {
  uint16_t m = 0;
  for (int s : slots) m |= uint16_t(1) << s;
  return m;
}

}  // namespace

BlockGeometry build_geometry(const Lattice& fine, BlockVariant variant, int merge_axis) {
  if (variant == BlockVariant::two_by_two) {
    if (fine.l1 % 2 || fine.l2 % 2)
      throw std::invalid_argument("two_by_two blocks need even lattice dimensions");
    merge_axis = -1;
  } else {
    if (merge_axis != 0 && merge_axis != 1)
      throw std::invalid_argument("two_by_one merge axis must be 0 or 1");
    if ((merge_axis == 0 ? fine.l1 : fine.l2) % 2)
      throw std::invalid_argument("two_by_one blocks need an even merge axis");
  }

  Lattice coarse = variant == BlockVariant::two_by_two
                       ? Lattice(fine.l1 / 2, fine.l2 / 2)
                       : (merge_axis == 0 ? Lattice(fine.l1 / 2, fine.l2)
                                          : Lattice(fine.l1, fine.l2 / 2));
  BlockGeometry g(fine, coarse);
  g.variant = variant;
  g.merge_axis = merge_axis;
  g.na = coarse.l1;
  g.nb = coarse.l2;

  if (variant == BlockVariant::two_by_two) {
    g.n_slots = 12;
    g.slot_owned = {1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0};
    g.plaq_slot_masks = {slot_mask({0, 2, 4, 5}), slot_mask({1, 3, 5, 10}),
                         slot_mask({2, 8, 6, 7}), slot_mask({3, 9, 7, 11})};
    g.site_slot_mask = slot_mask({2, 3, 5, 7});
    g.cut_xh = slot_mask({0, 1});
    g.cut_xv = slot_mask({4, 6});
    g.cut_zh = slot_mask({1, 3});
    g.cut_zv = slot_mask({6, 7});
    g.shared = {{0, 0, -1, 8}, {1, 0, -1, 9}, {4, -1, 0, 10}, {6, -1, 0, 11},
                {8, 0, 1, 0},  {9, 0, 1, 1},  {10, 1, 0, 4},  {11, 1, 0, 6}};
  } else if (merge_axis == 0) {
    g.n_slots = 7;
    g.slot_owned = {1, 1, 0, 0, 1, 1, 0};
    g.plaq_slot_masks = {slot_mask({0, 2, 4, 5}), slot_mask({1, 3, 5, 6})};
    g.site_slot_mask = 0;
    g.cut_xh = slot_mask({0, 1});
    g.cut_xv = slot_mask({4});
    g.cut_zh = slot_mask({1});
    g.cut_zv = slot_mask({4, 5});
    g.shared = {{0, 0, -1, 2}, {1, 0, -1, 3}, {4, -1, 0, 6},
                {2, 0, 1, 0},  {3, 0, 1, 1},  {6, 1, 0, 4}};
  } else {
    g.n_slots = 7;
    g.slot_owned = {1, 1, 0, 1, 1, 0, 0};
    g.plaq_slot_masks = {slot_mask({0, 1, 3, 5}), slot_mask({1, 2, 4, 6})};
    g.site_slot_mask = 0;
    g.cut_xh = slot_mask({0});
    g.cut_xv = slot_mask({3, 4});
    g.cut_zh = slot_mask({0, 1});
    g.cut_zv = slot_mask({4});
    g.shared = {{0, 0, -1, 2}, {3, -1, 0, 5}, {4, -1, 0, 6},
                {2, 0, 1, 0},  {5, 1, 0, 3},  {6, 1, 0, 4}};
  }

  g.shared_index_of_slot.fill(-1);
  for (size_t si = 0; si < g.shared.size(); ++si)
    g.shared_index_of_slot[g.shared[si].slot] = static_cast<int>(si);

  int npat = 1 << g.plaq_slot_masks.size();
  g.xconfigs.assign(npat, {});
  for (uint32_t cfg = 0; cfg < (1u << g.n_slots); ++cfg) {
    int pat = 0;
    for (size_t t = 0; t < g.plaq_slot_masks.size(); ++t)
      pat |= (std::popcount(cfg & g.plaq_slot_masks[t]) & 1) << t;
    uint32_t cls = (std::popcount(cfg & g.cut_xh) & 1) |
                   ((std::popcount(cfg & g.cut_xv) & 1) << 1);
    g.xconfigs[pat].push_back(cfg | (cls << 16));
  }
  return g;
}

void BlockGeometry::cell_qubits(int a, int b, int* out) const {
  const Lattice& L = fine;
  if (variant == BlockVariant::two_by_two) {
    int i0 = 2 * a, j0 = 2 * b;
    out[0] = L.h_qubit(i0, j0);
    out[1] = L.h_qubit(i0 + 1, j0);
    out[2] = L.h_qubit(i0, j0 + 1);
    out[3] = L.h_qubit(i0 + 1, j0 + 1);
    out[4] = L.v_qubit(i0, j0);
    out[5] = L.v_qubit(i0 + 1, j0);
    out[6] = L.v_qubit(i0, j0 + 1);
    out[7] = L.v_qubit(i0 + 1, j0 + 1);
    out[8] = L.h_qubit(i0, j0 + 2);
    out[9] = L.h_qubit(i0 + 1, j0 + 2);
    out[10] = L.v_qubit(i0 + 2, j0);
    out[11] = L.v_qubit(i0 + 2, j0 + 1);
  } else if (merge_axis == 0) {
    int i0 = 2 * a, j = b;
    out[0] = L.h_qubit(i0, j);
    out[1] = L.h_qubit(i0 + 1, j);
    out[2] = L.h_qubit(i0, j + 1);
    out[3] = L.h_qubit(i0 + 1, j + 1);
    out[4] = L.v_qubit(i0, j);
    out[5] = L.v_qubit(i0 + 1, j);
    out[6] = L.v_qubit(i0 + 2, j);
  } else {
    int i = a, j0 = 2 * b;
    out[0] = L.h_qubit(i, j0);
    out[1] = L.h_qubit(i, j0 + 1);
    out[2] = L.h_qubit(i, j0 + 2);
    out[3] = L.v_qubit(i, j0);
    out[4] = L.v_qubit(i, j0 + 1);
    out[5] = L.v_qubit(i + 1, j0);
    out[6] = L.v_qubit(i + 1, j0 + 1);
  }
}

void BlockGeometry::interior_plaqs(int a, int b, int* out) const {
  const Lattice& L = fine;
  if (variant == BlockVariant::two_by_two) {
    int i0 = 2 * a, j0 = 2 * b;
    out[0] = L.plaq_index(i0, j0);
    out[1] = L.plaq_index(i0 + 1, j0);
    out[2] = L.plaq_index(i0, j0 + 1);
    out[3] = L.plaq_index(i0 + 1, j0 + 1);
  } else if (merge_axis == 0) {
    out[0] = L.plaq_index(2 * a, b);
    out[1] = L.plaq_index(2 * a + 1, b);
  } else {
    out[0] = L.plaq_index(a, 2 * b);
    out[1] = L.plaq_index(a, 2 * b + 1);
  }
}

int BlockGeometry::interior_site(int a, int b) const {
  if (variant == BlockVariant::two_by_two) return fine.site_index(2 * a + 1, 2 * b + 1);
  return -1;
}

int BlockGeometry::coarse_h_qubit(int a, int b) const { return coarse.h_qubit(a, b); }
int BlockGeometry::coarse_v_qubit(int a, int b) const { return coarse.v_qubit(a, b); }

namespace {

void merged_sites(const BlockGeometry& g, int a, int b, int* out, int* count) {
  const Lattice& L = g.fine;
  if (g.variant == BlockVariant::two_by_two) {
    int i0 = 2 * a, j0 = 2 * b;
    out[0] = L.site_index(i0, j0);
    out[1] = L.site_index(i0 + 1, j0);
    out[2] = L.site_index(i0, j0 + 1);
    out[3] = L.site_index(i0 + 1, j0 + 1);
    *count = 4;
  } else if (g.merge_axis == 0) {
    out[0] = L.site_index(2 * a, b);
    out[1] = L.site_index(2 * a + 1, b);
    *count = 2;
  } else {
    out[0] = L.site_index(a, 2 * b);
    out[1] = L.site_index(a, 2 * b + 1);
    *count = 2;
  }
}

}  // namespace

Syndrome coarse_syndrome(const BlockGeometry& g, const Syndrome& fine_syn) {
  Syndrome out(g.coarse.n_plaq(), g.coarse.n_sites());
  int ids[4], count;
  for (int b = 0; b < g.nb; ++b) {
    for (int a = 0; a < g.na; ++a) {
      g.interior_plaqs(a, b, ids);
      bool pd = false;
      for (size_t t = 0; t < g.plaq_slot_masks.size(); ++t) pd ^= fine_syn.plaq.get(ids[t]);
      if (pd) out.plaq.set(g.coarse.plaq_index(a, b), true);
      merged_sites(g, a, b, ids, &count);
      bool sd = false;
      for (int t = 0; t < count; ++t) sd ^= fine_syn.site.get(ids[t]);
      if (sd) out.site.set(g.coarse.site_index(a, b), true);
    }
  }
  return out;
}

PauliFrame reduce_frame(const BlockGeometry& g, const PauliFrame& fine_frame) {
  PauliFrame out(g.coarse.n_qubits());
  int qubits[12];
  for (int b = 0; b < g.nb; ++b) {
    for (int a = 0; a < g.na; ++a) {
      g.cell_qubits(a, b, qubits);
      bool xh = false, xv = false, zh = false, zv = false;
      for (int k = 0; k < g.n_slots; ++k) {
        uint16_t bit = uint16_t(1) << k;
        if (g.cut_xh & bit) xh ^= fine_frame.x.get(qubits[k]);
        if (g.cut_xv & bit) xv ^= fine_frame.x.get(qubits[k]);
        if (g.cut_zh & bit) zh ^= fine_frame.z.get(qubits[k]);
        if (g.cut_zv & bit) zv ^= fine_frame.z.get(qubits[k]);
      }
      int qh = g.coarse_h_qubit(a, b), qv = g.coarse_v_qubit(a, b);
      out.x.set(qh, xh);
      out.z.set(qh, zh);
      out.x.set(qv, xv);
      out.z.set(qv, zv);
    }
  }
  return out;
}

BlockBelief init_beliefs(const BlockGeometry& g, int alphabet) {
  BlockBelief bel;
  bel.alphabet = alphabet;
  bel.shared_per_cell = static_cast<int>(g.shared.size());
  std::array<double, 4> uniform{};
  for (int l = 0; l < alphabet; ++l) uniform[l] = 1.0 / alphabet;
  bel.msgs.assign(size_t(g.cell_count()) * bel.shared_per_cell, uniform);
  return bel;
}

namespace {

// Everything one cell's enumeration needs, gathered up front.
struct CellCtx {
  int nq = 0;
  int cell = 0;
  int qubits[12];
  double fac[12][4];  // prior x incoming message
  double pri[12][4];  // prior only
  int pattern = 0;
  bool has_site = false;
  int site_obs = 0;
  // keep_joint bookkeeping
  bool with_pairs = false;
  int pair_slot[12];     // partner's slot within this block, or -1
  int pair_tbl[12];      // pair table id
  uint8_t pair_first[12];  // 1 when this slot is the table's first axis
};

void gather(const BlockGeometry& g, int a, int b, const LevelPriors& priors,
            const Syndrome& syn, const BlockBelief* bel, CellCtx& c) {
  c.nq = g.n_slots;
  c.cell = g.cell_index(a, b);
  g.cell_qubits(a, b, c.qubits);
  for (int k = 0; k < c.nq; ++k) {
    const auto& t = priors.q[c.qubits[k]];
    for (int l = 0; l < 4; ++l) c.pri[k][l] = c.fac[k][l] = t[l];
  }
  if (bel) {
    for (size_t si = 0; si < g.shared.size(); ++si) {
      int k = g.shared[si].slot;
      const auto& m = bel->msgs[size_t(c.cell) * g.shared.size() + si];
      for (int l = 0; l < 4; ++l) c.fac[k][l] = c.pri[k][l] * m[l];
    }
  }
  int ids[4];
  g.interior_plaqs(a, b, ids);
  c.pattern = 0;
  for (size_t t = 0; t < g.plaq_slot_masks.size(); ++t)
    c.pattern |= int(syn.plaq.get(ids[t])) << t;
  int sid = g.interior_site(a, b);
  c.has_site = sid >= 0;
  c.site_obs = c.has_site && syn.site.get(sid) ? 1 : 0;

  c.with_pairs = priors.has_pairs;
  if (c.with_pairs) {
    for (int k = 0; k < c.nq; ++k) {
      c.pair_slot[k] = -1;
      int partner = priors.pair_partner[c.qubits[k]];
      if (partner < 0) continue;
      for (int m = 0; m < c.nq; ++m) {
        if (m != k && c.qubits[m] == partner) {
          c.pair_slot[k] = m;
          c.pair_tbl[k] = priors.pair_id[c.qubits[k]];
          c.pair_first[k] = priors.pair_role[c.qubits[k]] == 0;
          break;
        }
      }
    }
  }
}

void clamp_normalize(double* v, int alphabet) {
  double s = 0.0;
  for (int l = 0; l < alphabet; ++l) {
    v[l] = std::max(v[l], kMsgFloor);
    s += v[l];
  }
  for (int l = 0; l < alphabet; ++l) v[l] /= s;
}

// ---- single-sector (alphabet 2) engine, per-qubit factors ----

void likelihood_a2(const BlockGeometry& g, const CellCtx& c, double* out16) {
  double acc[4] = {0, 0, 0, 0};
  for (uint32_t e : g.xconfigs[c.pattern]) {
    uint32_t cfg = e & 0xffffu;
    double w = 1.0;
    for (int k = 0; k < c.nq; ++k) w *= c.fac[k][(cfg >> k) & 1];
    acc[e >> 16] += w;
  }
  for (int i = 0; i < 4; ++i) out16[i] = acc[i];
}

void messages_a2(const BlockGeometry& g, const CellCtx& c, double out[][4]) {
  int ns = static_cast<int>(g.shared.size());
  for (int si = 0; si < ns; ++si) out[si][0] = out[si][1] = 0.0;
  double pre[13], suf[13], f[12];
  for (uint32_t e : g.xconfigs[c.pattern]) {
    uint32_t cfg = e & 0xffffu;
    pre[0] = 1.0;
    for (int k = 0; k < c.nq; ++k) {
      f[k] = c.fac[k][(cfg >> k) & 1];
      pre[k + 1] = pre[k] * f[k];
    }
    suf[c.nq] = 1.0;
    for (int k = c.nq - 1; k >= 0; --k) suf[k] = suf[k + 1] * f[k];
    for (int si = 0; si < ns; ++si) {
      int k = g.shared[si].slot;
      int bit = (cfg >> k) & 1;
      out[si][bit] += pre[k] * suf[k + 1] * c.pri[k][bit];
    }
  }
}

// ---- correlated (alphabet 4) engine, per-qubit factors ----
//
// The Z parts are never enumerated: for a fixed X configuration the Z letters
// are independent across qubits, so parities over the interior site support
// and the two Z cuts come from signed products (a 3-bit Walsh transform).

struct ZMeta {
  int n_subsets = 0;         // site (when present), zh, zv
  uint8_t member[12] = {};   // per slot, membership bits in subset order
};

ZMeta zmeta_for(const BlockGeometry& g) {
  ZMeta m;
  uint16_t subsets[3];
  if (g.site_slot_mask) {
    subsets[0] = g.site_slot_mask;
    subsets[1] = g.cut_zh;
    subsets[2] = g.cut_zv;
    m.n_subsets = 3;
  } else {
    subsets[0] = g.cut_zh;
    subsets[1] = g.cut_zv;
    m.n_subsets = 2;
  }
  for (int k = 0; k < g.n_slots; ++k)
    for (int s = 0; s < m.n_subsets; ++s)
      if (subsets[s] >> k & 1) m.member[k] |= uint8_t(1) << s;
  return m;
}

void likelihood_a4(const BlockGeometry& g, const ZMeta& zm, const CellCtx& c, double* out16) {
  for (int i = 0; i < 16; ++i) out16[i] = 0.0;
  int ne = 1 << zm.n_subsets;
  double s0[12], s1[12], A[8];
  for (uint32_t e : g.xconfigs[c.pattern]) {
    uint32_t cfg = e & 0xffffu;
    int xcls = e >> 16;
    for (int k = 0; k < c.nq; ++k) {
      int xb = (cfg >> k) & 1;
      double a0 = c.fac[k][letter_of(xb, 0)];
      double a1 = c.fac[k][letter_of(xb, 1)];
      s0[k] = a0 + a1;
      s1[k] = a0 - a1;
    }
    for (int eps = 0; eps < ne; ++eps) {
      double prod = 1.0;
      for (int k = 0; k < c.nq; ++k)
        prod *= (std::popcount(unsigned(eps & zm.member[k])) & 1) ? s1[k] : s0[k];
      A[eps] = prod;
    }
    for (int zh = 0; zh < 2; ++zh) {
      for (int zv = 0; zv < 2; ++zv) {
        int b = c.has_site ? (c.site_obs | zh << 1 | zv << 2) : (zh | zv << 1);
        double j = 0.0;
        for (int eps = 0; eps < ne; ++eps)
          j += (std::popcount(unsigned(eps & b)) & 1) ? -A[eps] : A[eps];
        out16[xcls | zh << 2 | zv << 3] += std::max(j / ne, 0.0);
      }
    }
  }
}

void messages_a4(const BlockGeometry& g, const CellCtx& c, double out[][4]) {
  int ns = static_cast<int>(g.shared.size());
  for (int si = 0; si < ns; ++si)
    for (int l = 0; l < 4; ++l) out[si][l] = 0.0;

  uint16_t site = g.site_slot_mask;
  double s0[12], s1[12];
  double pre0[13], suf0[13], pre1[13], suf1[13];
  for (uint32_t e : g.xconfigs[c.pattern]) {
    uint32_t cfg = e & 0xffffu;
    for (int k = 0; k < c.nq; ++k) {
      int xb = (cfg >> k) & 1;
      double a0 = c.fac[k][letter_of(xb, 0)];
      double a1 = c.fac[k][letter_of(xb, 1)];
      s0[k] = a0 + a1;
      s1[k] = (site >> k & 1) ? a0 - a1 : s0[k];  // sign only on site members
    }
    pre0[0] = pre1[0] = 1.0;
    for (int k = 0; k < c.nq; ++k) {
      pre0[k + 1] = pre0[k] * s0[k];
      pre1[k + 1] = pre1[k] * s1[k];
    }
    suf0[c.nq] = suf1[c.nq] = 1.0;
    for (int k = c.nq - 1; k >= 0; --k) {
      suf0[k] = suf0[k + 1] * s0[k];
      suf1[k] = suf1[k + 1] * s1[k];
    }
    for (int si = 0; si < ns; ++si) {
      int k = g.shared[si].slot;
      int xb = (cfg >> k) & 1;
      double b0 = c.pri[k][letter_of(xb, 0)];
      double b1 = c.pri[k][letter_of(xb, 1)];
      double t0 = b0 + b1, t1 = b0 - b1;
      double bkt0 = pre0[k] * suf0[k + 1];  // site-parity sign off
      double bkt1 = pre1[k] * suf1[k + 1];  // site-parity sign on
      int ksite = site >> k & 1;
      if (c.has_site) {
        // A[es][ek] = bkt(es) * (t with sign (es & ksite) ^ ek)
        double a00 = bkt0 * t0, a01 = bkt0 * t1;
        double a10 = bkt1 * (ksite ? t1 : t0), a11 = bkt1 * (ksite ? t0 : t1);
        int sp = c.site_obs;
        double sgn = sp ? -1.0 : 1.0;
        double j0 = (a00 + sgn * a10 + a01 + sgn * a11) * 0.25;  // z_k = 0
        double j1 = (a00 + sgn * a10 - a01 - sgn * a11) * 0.25;  // z_k = 1
        out[si][letter_of(xb, 0)] += std::max(j0, 0.0);
        out[si][letter_of(xb, 1)] += std::max(j1, 0.0);
      } else {
        double j0 = (bkt0 * t0 + bkt0 * t1) * 0.5;
        double j1 = (bkt0 * t0 - bkt0 * t1) * 0.5;
        out[si][letter_of(xb, 0)] += std::max(j0, 0.0);
        out[si][letter_of(xb, 1)] += std::max(j1, 0.0);
      }
    }
  }
}

// ---- generic engine with joint pair factors (keep_joint mode) ----

struct GroupCtx {
  // per slot: -1 none, else group id; groups are singles or ordered pairs
  struct Grp {
    int k1, k2;          // k2 = -1 for singles
    double tbl[16];      // pairs: [l1*4+l2]; singles unused
  };
  int n_groups = 0;
  Grp grp[12];
  int group_of[12];
};

// Builds groups with all incoming messages folded in; `exclude_msg_slot`
// strips one slot's incoming message (for its outgoing message).
GroupCtx build_groups(const CellCtx& c, const LevelPriors& priors, const BlockBelief* bel,
                      const BlockGeometry& g, int exclude_msg_slot) {
  GroupCtx gc;
  std::array<const double*, 12> msg{};
  if (bel) {
    for (size_t si = 0; si < g.shared.size(); ++si) {
      int k = g.shared[si].slot;
      if (k != exclude_msg_slot)
        msg[k] = bel->msgs[size_t(c.cell) * g.shared.size() + si].data();
    }
  }
  bool used[12] = {};
  for (int k = 0; k < c.nq; ++k) {
    if (used[k]) continue;
    int partner = c.with_pairs ? c.pair_slot[k] : -1;
    auto& grp = gc.grp[gc.n_groups];
    if (partner >= 0) {
      int k1 = c.pair_first[k] ? k : partner;
      int k2 = c.pair_first[k] ? partner : k;
      const auto& raw = priors.pair_tables[c.pair_tbl[k]];
      for (int l1 = 0; l1 < 4; ++l1)
        for (int l2 = 0; l2 < 4; ++l2) {
          double w = raw[l1 * 4 + l2];
          if (msg[k1]) w *= msg[k1][l1];
          if (msg[k2]) w *= msg[k2][l2];
          grp.tbl[l1 * 4 + l2] = w;
        }
      grp.k1 = k1;
      grp.k2 = k2;
      used[k1] = used[k2] = true;
      gc.group_of[k1] = gc.group_of[k2] = gc.n_groups;
    } else {
      grp.k1 = k;
      grp.k2 = -1;
      for (int l = 0; l < 4; ++l) grp.tbl[l] = c.pri[k][l] * (msg[k] ? msg[k][l] : 1.0);
      used[k] = true;
      gc.group_of[k] = gc.n_groups;
    }
    ++gc.n_groups;
  }
  return gc;
}

// Joint over z-parity subsets for one group at one x assignment: value for
// each sign pattern over the group's z bits.
void group_zsums(const GroupCtx::Grp& grp, uint32_t cfg, double* d /*4 entries*/) {
  int x1 = (cfg >> grp.k1) & 1;
  if (grp.k2 < 0) {
    double a0 = grp.tbl[letter_of(x1, 0)], a1 = grp.tbl[letter_of(x1, 1)];
    d[0] = a0 + a1;
    d[1] = a0 - a1;
  } else {
    int x2 = (cfg >> grp.k2) & 1;
    double w[4];
    for (int z1 = 0; z1 < 2; ++z1)
      for (int z2 = 0; z2 < 2; ++z2)
        w[z1 * 2 + z2] = grp.tbl[letter_of(x1, z1) * 4 + letter_of(x2, z2)];
    d[0] = w[0] + w[1] + w[2] + w[3];  // signs (+,+)
    d[1] = w[0] - w[1] + w[2] - w[3];  // sign on z2
    d[2] = w[0] + w[1] - w[2] - w[3];  // sign on z1
    d[3] = w[0] - w[1] - w[2] + w[3];  // sign on both
  }
}

void likelihood_groups(const BlockGeometry& g, const ZMeta& zm, const CellCtx& c,
                       const GroupCtx& gc, int alphabet, double* out16) {
  for (int i = 0; i < 16; ++i) out16[i] = 0.0;
  if (alphabet == 2) {
    for (uint32_t e : g.xconfigs[c.pattern]) {
      uint32_t cfg = e & 0xffffu;
      double w = 1.0;
      for (int t = 0; t < gc.n_groups; ++t) {
        const auto& grp = gc.grp[t];
        int x1 = (cfg >> grp.k1) & 1;
        w *= grp.k2 < 0 ? grp.tbl[x1] : grp.tbl[x1 * 4 + ((cfg >> grp.k2) & 1)];
      }
      out16[e >> 16] += w;
    }
    return;
  }
  int ne = 1 << zm.n_subsets;
  double d[12][4], A[8];
  for (uint32_t e : g.xconfigs[c.pattern]) {
    uint32_t cfg = e & 0xffffu;
    int xcls = e >> 16;
    for (int t = 0; t < gc.n_groups; ++t) group_zsums(gc.grp[t], cfg, d[t]);
    for (int eps = 0; eps < ne; ++eps) {
      double prod = 1.0;
      for (int t = 0; t < gc.n_groups; ++t) {
        const auto& grp = gc.grp[t];
        int s1 = std::popcount(unsigned(eps & zm.member[grp.k1])) & 1;
        if (grp.k2 < 0) {
          prod *= d[t][s1];
        } else {
          int s2 = std::popcount(unsigned(eps & zm.member[grp.k2])) & 1;
          prod *= d[t][s1 * 2 + s2];
        }
      }
      A[eps] = prod;
    }
    for (int zh = 0; zh < 2; ++zh)
      for (int zv = 0; zv < 2; ++zv) {
        int b = c.has_site ? (c.site_obs | zh << 1 | zv << 2) : (zh | zv << 1);
        double j = 0.0;
        for (int eps = 0; eps < ne; ++eps)
          j += (std::popcount(unsigned(eps & b)) & 1) ? -A[eps] : A[eps];
        out16[xcls | zh << 2 | zv << 3] += std::max(j / ne, 0.0);
      }
  }
}

void messages_groups(const BlockGeometry& g, const CellCtx& c, const LevelPriors& priors,
                     const BlockBelief* bel, int alphabet, double out[][4]) {
  int ns = static_cast<int>(g.shared.size());
  for (int si = 0; si < ns; ++si) {
    int kq = g.shared[si].slot;
    GroupCtx gc = build_groups(c, priors, bel, g, kq);
    for (int l = 0; l < 4; ++l) out[si][l] = 0.0;
    if (alphabet == 2) {
      for (uint32_t e : g.xconfigs[c.pattern]) {
        uint32_t cfg = e & 0xffffu;
        double w = 1.0;
        for (int t = 0; t < gc.n_groups; ++t) {
          const auto& grp = gc.grp[t];
          int x1 = (cfg >> grp.k1) & 1;
          w *= grp.k2 < 0 ? grp.tbl[x1] : grp.tbl[x1 * 4 + ((cfg >> grp.k2) & 1)];
        }
        out[si][(cfg >> kq) & 1] += w;
      }
      continue;
    }
    // subsets: optional site parity, plus the message qubit's own z bit
    uint16_t subsets[2];
    int nsub = 0;
    if (c.has_site) subsets[nsub++] = g.site_slot_mask;
    uint16_t kmask = uint16_t(1) << kq;
    subsets[nsub++] = kmask;
    uint8_t member[12] = {};
    for (int k = 0; k < c.nq; ++k)
      for (int s = 0; s < nsub; ++s)
        if (subsets[s] >> k & 1) member[k] |= uint8_t(1) << s;
    int ne = 1 << nsub;
    double d[12][4], A[4];
    for (uint32_t e : g.xconfigs[c.pattern]) {
      uint32_t cfg = e & 0xffffu;
      for (int t = 0; t < gc.n_groups; ++t) group_zsums(gc.grp[t], cfg, d[t]);
      for (int eps = 0; eps < ne; ++eps) {
        double prod = 1.0;
        for (int t = 0; t < gc.n_groups; ++t) {
          const auto& grp = gc.grp[t];
          int s1 = std::popcount(unsigned(eps & member[grp.k1])) & 1;
          if (grp.k2 < 0)
            prod *= d[t][s1];
          else
            prod *= d[t][s1 * 2 + (std::popcount(unsigned(eps & member[grp.k2])) & 1)];
        }
        A[eps] = prod;
      }
      int xb = (cfg >> kq) & 1;
      for (int zk = 0; zk < 2; ++zk) {
        int b = c.has_site ? (c.site_obs | zk << 1) : zk;
        double j = 0.0;
        for (int eps = 0; eps < ne; ++eps)
          j += (std::popcount(unsigned(eps & b)) & 1) ? -A[eps] : A[eps];
        out[si][letter_of(xb, zk)] += std::max(j / ne, 0.0);
      }
    }
  }
}

}  // namespace

void bp_pass(const BlockGeometry& g, const LevelPriors& priors, const Syndrome& fine_syn,
             BlockBelief& bel, int rounds) {
  if (rounds <= 0) return;
  int ns = static_cast<int>(g.shared.size());
  std::vector<std::array<double, 4>> next(bel.msgs.size());
  CellCtx c;
  double out[8][4];
  for (int r = 0; r < rounds; ++r) {
    for (int b = 0; b < g.nb; ++b) {
      for (int a = 0; a < g.na; ++a) {
        gather(g, a, b, priors, fine_syn, &bel, c);
        if (priors.has_pairs)
          messages_groups(g, c, priors, &bel, priors.alphabet, out);
        else if (priors.alphabet == 2)
          messages_a2(g, c, out);
        else
          messages_a4(g, c, out);
        for (int si = 0; si < ns; ++si) {
          clamp_normalize(out[si], priors.alphabet);
          const auto& sh = g.shared[si];
          int ncell = g.cell_index(a + sh.da, b + sh.db);
          int nsi = g.shared_index_of_slot[sh.nslot];
          auto& slot = next[size_t(ncell) * ns + nsi];
          for (int l = 0; l < 4; ++l) slot[l] = out[si][l];
        }
      }
    }
    bel.msgs.swap(next);
  }
}

std::array<double, 16> block_likelihoods(const BlockGeometry& g, int a, int b,
                                         const LevelPriors& priors, const Syndrome& fine_syn,
                                         const BlockBelief& bel) {
  CellCtx c;
  gather(g, a, b, priors, fine_syn, &bel, c);
  ZMeta zm = zmeta_for(g);
  std::array<double, 16> out{};
  if (priors.has_pairs) {
    GroupCtx gc = build_groups(c, priors, &bel, g, -1);
    likelihood_groups(g, zm, c, gc, priors.alphabet, out.data());
  } else if (priors.alphabet == 2) {
    likelihood_a2(g, c, out.data());
  } else {
    likelihood_a4(g, zm, c, out.data());
  }
  double s = 0.0;
  for (double v : out) s += v;
  if (!(s > 0.0)) throw std::runtime_error("block likelihood vanished");
  for (double& v : out) v /= s;
  return out;
}

PauliFrame dualize_frame_z_to_x(const Lattice& lat, const PauliFrame& f) {
  PauliFrame out(lat.n_qubits());
  for (int j = 0; j < lat.l2; ++j) {
    for (int i = 0; i < lat.l1; ++i) {
      if (f.z.get(lat.h_qubit(i, j))) out.x.set(lat.v_qubit(i, j - 1), true);
      if (f.z.get(lat.v_qubit(i, j))) out.x.set(lat.h_qubit(i - 1, j), true);
    }
  }
  return out;
}

Syndrome dualize_site_to_plaq(const Lattice& lat, const Syndrome& syn) {
  Syndrome out(lat.n_plaq(), lat.n_sites());
  for (int j = 0; j < lat.l2; ++j)
    for (int i = 0; i < lat.l1; ++i)
      if (syn.site.get(lat.site_index(i, j)))
        out.plaq.set(lat.plaq_index(i - 1, j - 1), true);
  return out;
}

namespace {

struct LevelData {
  Syndrome syn;
  LevelPriors priors;
  PauliFrame ref;
};

LevelPriors reduce_priors(const BlockGeometry& g, const LevelData& st, const BlockBelief& bel,
                          PairHandling pairs) {
  LevelPriors next;
  next.alphabet = st.priors.alphabet;
  next.q.assign(g.coarse.n_qubits(), {});
  if (pairs == PairHandling::keep_joint) {
    next.has_pairs = true;
    next.pair_partner.assign(g.coarse.n_qubits(), -1);
    next.pair_role.assign(g.coarse.n_qubits(), 0);
    next.pair_id.assign(g.coarse.n_qubits(), -1);
    next.pair_tables.reserve(g.cell_count());
  }
  for (int b = 0; b < g.nb; ++b) {
    for (int a = 0; a < g.na; ++a) {
      std::array<double, 16> like = block_likelihoods(g, a, b, st.priors, st.syn, bel);
      int qh = g.coarse_h_qubit(a, b), qv = g.coarse_v_qubit(a, b);
      auto& th = next.q[qh];
      auto& tv = next.q[qv];
      if (next.alphabet == 2) {
        for (int bb = 0; bb < 4; ++bb) {
          th[bb & 1] += like[bb];
          tv[(bb >> 1) & 1] += like[bb];
        }
      } else {
        for (int bb = 0; bb < 16; ++bb) {
          th[letter_of(bb & 1, (bb >> 2) & 1)] += like[bb];
          tv[letter_of((bb >> 1) & 1, (bb >> 3) & 1)] += like[bb];
        }
      }
      if (pairs == PairHandling::keep_joint) {
        std::array<double, 16> tbl{};
        if (next.alphabet == 2) {
          for (int bb = 0; bb < 4; ++bb) tbl[(bb & 1) * 4 + ((bb >> 1) & 1)] += like[bb];
        } else {
          for (int bb = 0; bb < 16; ++bb) {
            int lh = letter_of(bb & 1, (bb >> 2) & 1);
            int lv = letter_of((bb >> 1) & 1, (bb >> 3) & 1);
            tbl[lh * 4 + lv] += like[bb];
          }
        }
        int id = static_cast<int>(next.pair_tables.size());
        next.pair_tables.push_back(tbl);
        next.pair_partner[qh] = qv;
        next.pair_partner[qv] = qh;
        next.pair_role[qh] = 0;
        next.pair_role[qv] = 1;
        next.pair_id[qh] = next.pair_id[qv] = id;
      }
    }
  }
  return next;
}

// 2x2 base enumeration with joint pair factors (only needed in keep_joint
// mode; the marginalize path goes through class_probabilities_exact).
ClassDistribution base_exact_groups(const Lattice& lat, const Syndrome& syn,
                                    const LevelPriors& priors, Sector sector) {
  Syndrome restricted(lat.n_plaq(), lat.n_sites());
  restricted.plaq = syn.plaq;
  if (sector != Sector::x_only) restricted.site = syn.site;
  PauliFrame canon = canonical_correction(lat, restricted);
  std::vector<PauliFrame> gens;
  for (int idx = 0; idx + 1 < lat.n_sites(); ++idx)
    gens.push_back(site_operator(lat, idx % lat.l1, idx / lat.l1));
  if (sector == Sector::both)
    for (int idx = 0; idx + 1 < lat.n_plaq(); ++idx)
      gens.push_back(plaquette_operator(lat, idx % lat.l1, idx / lat.l1));

  int lx_count = 4, lz_count = sector == Sector::both ? 4 : 1;
  ClassDistribution dist;
  dist.n_classes = sector == Sector::both ? 16 : 4;
  long double totals[16] = {};
  for (int lx = 0; lx < lx_count; ++lx) {
    for (int lz = 0; lz < lz_count; ++lz) {
      HomologyClass lc(uint8_t(lx | lz << 2));
      PauliFrame start = canon ^ logical_representative(lat, lc);
      uint8_t label = winding_parities(lat, start).bits;
      int slot = sector == Sector::both ? label : (label & 3);
      for (uint32_t s = 0; s < (1u << gens.size()); ++s) {
        PauliFrame f = start;
        for (size_t t = 0; t < gens.size(); ++t)
          if (s >> t & 1) f ^= gens[t];
        long double w = 1.0L;
        for (int q = 0; q < lat.n_qubits(); ++q) {
          int partner = priors.pair_partner.empty() ? -1 : priors.pair_partner[q];
          if (partner >= 0 && priors.pair_role[q] != 0) continue;  // counted at the first axis
          int l1 = f.letter(q);
          if (priors.alphabet == 2) l1 = f.x.get(q);
          if (partner >= 0) {
            int l2 = priors.alphabet == 2 ? int(f.x.get(partner)) : f.letter(partner);
            w *= priors.pair_tables[priors.pair_id[q]][l1 * 4 + l2];
          } else {
            w *= priors.q[q][l1];
          }
        }
        totals[slot] += w;
      }
    }
  }
  long double norm = 0.0L;
  for (int i = 0; i < dist.n_classes; ++i) norm += totals[i];
  if (!(norm > 0.0L)) throw std::runtime_error("base class probabilities vanished");
  for (int i = 0; i < dist.n_classes; ++i) dist.p[i] = double(totals[i] / norm);
  return dist;
}

ClassDistribution run_chain(const Lattice& entry_lat, const std::vector<BlockGeometry>& geoms,
                            LevelData st, const RgConfig& cfg, Sector base_sector) {
  uint8_t entry_bits = winding_parities(entry_lat, st.ref).bits;
  for (const BlockGeometry& g : geoms) {
    BlockBelief bel = init_beliefs(g, st.priors.alphabet);
    bp_pass(g, st.priors, st.syn, bel, cfg.bp_rounds);
    LevelData next;
    next.priors = reduce_priors(g, st, bel, cfg.pair_correlations);
    next.syn = coarse_syndrome(g, st.syn);
    next.ref = reduce_frame(g, st.ref);
    st = std::move(next);
  }
  const Lattice& base_lat = geoms.empty() ? entry_lat : geoms.back().coarse;

  ClassDistribution base;
  if (st.priors.has_pairs) {
    base = base_exact_groups(base_lat, st.syn, st.priors, base_sector);
  } else {
    QubitPrior qp;
    qp.q = st.priors.q;
    if (st.priors.alphabet == 2)
      for (auto& t : qp.q) t = {t[0], t[1], 0.0, 0.0};
    base = class_probabilities_exact(base_lat, st.syn, qp, base_sector);
  }

  uint8_t exit_bits = winding_parities(base_lat, st.ref).bits;
  int delta = entry_bits ^ exit_bits;
  if (base_sector != Sector::both) delta &= 3;
  ClassDistribution out;
  out.n_classes = base.n_classes;
  for (int i = 0; i < base.n_classes; ++i) out.p[i] = base.p[i ^ delta];
  return out;
}

LevelPriors priors_from_qubit_prior(const QubitPrior& prior) {
  LevelPriors lp;
  lp.alphabet = 4;
  lp.q = prior.q;
  return lp;
}

}  // namespace

RgDecoder::RgDecoder(const Lattice& lat, const RgConfig& cfg, QubitPrior prior)
    : lat_(lat), cfg_(cfg), prior_(std::move(prior)) {
  if (!lat_.is_square() || (lat_.l1 & (lat_.l1 - 1)) != 0)
    throw std::invalid_argument("rg decoding requires a square power-of-two lattice");
  if (cfg_.bp_rounds < 0) throw std::invalid_argument("bp_rounds must be non-negative");
  if (prior_.n() != lat_.n_qubits())
    throw std::invalid_argument("prior size does not match lattice");
  Lattice cur = lat_;
  while (!(cur.l1 == 2 && cur.l2 == 2)) {
    BlockGeometry g =
        cfg_.variant == BlockVariant::two_by_two
            ? build_geometry(cur, BlockVariant::two_by_two)
            : build_geometry(cur, BlockVariant::two_by_one, cur.l1 >= cur.l2 ? 0 : 1);
    cur = g.coarse;
    geoms_.push_back(std::move(g));
  }
}

DecodeResult RgDecoder::decode(const Syndrome& syn) const {
  ClassDistribution dist;
  HomologyClass chosen;
  bool tie = false;

  if (cfg_.sector == SectorMode::correlated) {
    LevelData st;
    st.syn = syn;
    st.priors = priors_from_qubit_prior(prior_);
    st.ref = canonical_correction(lat_, syn);
    dist = run_chain(lat_, geoms_, std::move(st), cfg_, Sector::both);
    chosen = HomologyClass(uint8_t(dist.argmax()));
    tie = dist.argmax_set().size() > 1;
  } else {
    // X problem: plaquette syndrome with the bit-flip marginal of the prior.
    LevelData stx;
    stx.syn = Syndrome(lat_.n_plaq(), lat_.n_sites());
    stx.syn.plaq = syn.plaq;
    stx.priors.alphabet = 2;
    stx.priors.q.resize(lat_.n_qubits());
    for (int q = 0; q < lat_.n_qubits(); ++q) {
      double pf = prior_.q[q][1] + prior_.q[q][2];
      stx.priors.q[q] = {1.0 - pf, pf, 0.0, 0.0};
    }
    stx.ref = canonical_correction(lat_, stx.syn);
    ClassDistribution dx = run_chain(lat_, geoms_, std::move(stx), cfg_, Sector::x_only);

    // Z problem, carried to the dual indexing where it becomes an X problem.
    LevelData stz;
    stz.syn = dualize_site_to_plaq(lat_, syn);
    stz.priors.alphabet = 2;
    stz.priors.q.resize(lat_.n_qubits());
    for (int j = 0; j < lat_.l2; ++j) {
      for (int i = 0; i < lat_.l1; ++i) {
        int hq = lat_.h_qubit(i, j), vq = lat_.v_qubit(i, j);
        double ph = prior_.q[hq][3] + prior_.q[hq][2];
        double pv = prior_.q[vq][3] + prior_.q[vq][2];
        stz.priors.q[lat_.v_qubit(i, j - 1)] = {1.0 - ph, ph, 0.0, 0.0};
        stz.priors.q[lat_.h_qubit(i - 1, j)] = {1.0 - pv, pv, 0.0, 0.0};
      }
    }
    Syndrome zsrc(lat_.n_plaq(), lat_.n_sites());
    zsrc.site = syn.site;
    stz.ref = dualize_frame_z_to_x(lat_, canonical_correction(lat_, zsrc));
    ClassDistribution dz = run_chain(lat_, geoms_, std::move(stz), cfg_, Sector::x_only);

    // Dual winding bits come back as (b0, b1) = (zw2, zw1).
    dist.n_classes = 16;
    for (int b = 0; b < 16; ++b)
      dist.p[b] = dx.p[b & 3] * dz.p[((b >> 3) & 1) | (((b >> 2) & 1) << 1)];
    int bx = dx.argmax(), bz = dz.argmax();
    chosen = HomologyClass(uint8_t(bx | ((bz >> 1) << 2) | ((bz & 1) << 3)));
    tie = dx.argmax_set().size() > 1 || dz.argmax_set().size() > 1;
  }

  PauliFrame canon = canonical_correction(lat_, syn);
  HomologyClass canon_cls = winding_parities(lat_, canon);
  PauliFrame correction = canon ^ logical_representative(lat_, chosen ^ canon_cls);
  return DecodeResult{dist, chosen, tie, std::move(correction)};
}

DecodeResult rg_decode(const Lattice& lat, const Syndrome& syn, const QubitPrior& prior,
                       const RgConfig& cfg) {
  return RgDecoder(lat, cfg, prior).decode(syn);
}

}  // namespace toric
