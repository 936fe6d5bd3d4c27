#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "helpers.hpp"
#include "toric/lattice.hpp"

using namespace toric;
using namespace toric::testing;

TEST_CASE("lattice counts and index maps are bijective") {
  for (int l : {2, 3, 4, 8}) {
    Lattice lat(l);
    CHECK(lat.n_qubits() == 2 * l * l);
    std::vector<int> seen(lat.n_qubits(), 0);
    for (int j = 0; j < l; ++j)
      for (int i = 0; i < l; ++i) {
        seen[lat.h_qubit(i, j)]++;
        seen[lat.v_qubit(i, j)]++;
      }
    for (int c : seen) CHECK(c == 1);
  }
  CHECK_THROWS_AS(Lattice(1), std::invalid_argument);
}

TEST_CASE("plaquette and site neighborhoods have 4 distinct qubits and close up") {
  for (int l : {2, 4, 6}) {
    Lattice lat(l);
    PauliFrame all_plaq(lat.n_qubits()), all_site(lat.n_qubits());
    for (int j = 0; j < l; ++j)
      for (int i = 0; i < l; ++i) {
        auto ps = lat.plaq_support(i, j);
        auto ss = lat.site_support(i, j);
        for (int a = 0; a < 4; ++a)
          for (int b = a + 1; b < 4; ++b) {
            CHECK(ps[a] != ps[b]);
            CHECK(ss[a] != ss[b]);
          }
        all_plaq ^= plaquette_operator(lat, i, j);
        all_site ^= site_operator(lat, i, j);
      }
    // products of all generators are the identity
    CHECK(all_plaq.weight() == 0);
    CHECK(all_site.weight() == 0);
  }
}

TEST_CASE("syndrome of identity is empty; single X flags its two plaquettes") {
  Lattice lat(8);
  CHECK_FALSE(syndrome(lat, PauliFrame(lat.n_qubits())).any());

  for (int q = 0; q < lat.n_qubits(); ++q) {
    PauliFrame f(lat.n_qubits());
    f.x.set(q, true);
    Syndrome syn = syndrome(lat, f);
    CHECK(syn.plaq.popcount() == 2);
    CHECK(syn.site.popcount() == 0);
    // the two flagged plaquettes are exactly those whose support contains q
    for (int j = 0; j < lat.l2; ++j)
      for (int i = 0; i < lat.l1; ++i) {
        auto ps = lat.plaq_support(i, j);
        bool touches = std::count(ps.begin(), ps.end(), q) > 0;
        CHECK(syn.plaq.get(lat.plaq_index(i, j)) == touches);
      }
  }
}

TEST_CASE("single Y creates two plaquette and two site defects") {
  Lattice lat(6);
  PauliFrame f(lat.n_qubits());
  f.set_letter(lat.v_qubit(3, 2), 2);
  Syndrome syn = syndrome(lat, f);
  CHECK(syn.plaq.popcount() == 2);
  CHECK(syn.site.popcount() == 2);
}

TEST_CASE("syndrome rejects frames of the wrong size") {
  Lattice lat(4);
  CHECK_THROWS_AS(syndrome(lat, PauliFrame(10)), std::invalid_argument);
}

TEST_CASE("syndrome is linear and defect parities are even") {
  Lattice lat(8);
  rng::Stream rng(11, 0);
  for (int t = 0; t < 200; ++t) {
    PauliFrame f = random_frame(lat, rng), g = random_frame(lat, rng);
    Syndrome sf = syndrome(lat, f), sg = syndrome(lat, g);
    CHECK_FALSE(sf.plaq.parity());
    CHECK_FALSE(sf.site.parity());
    Syndrome sum = sf;
    sum ^= sg;
    CHECK(syndrome(lat, f ^ g) == sum);
  }
}

TEST_CASE("stabilizer products are trivial-class; reference loops are not") {
  Lattice lat(8);
  rng::Stream rng(12, 0);
  for (int t = 0; t < 50; ++t) {
    PauliFrame s = random_stabilizer_product(lat, rng, 50);
    CHECK(homology_class(lat, s).trivial());
    CHECK(is_stabilizer_element(lat, s));
  }
  // each reference logical sets exactly its own bit
  for (int b = 0; b < 4; ++b) {
    PauliFrame rep = logical_representative(lat, HomologyClass(uint8_t(1 << b)));
    CHECK(homology_class(lat, rep).bits == (1 << b));
    CHECK_FALSE(is_stabilizer_element(lat, rep));
  }
  // and winding_parities(representative(c)) == c for every class
  for (int c = 0; c < 16; ++c) {
    PauliFrame rep = logical_representative(lat, HomologyClass(uint8_t(c)));
    CHECK(homology_class(lat, rep).bits == c);
  }
  CHECK(is_stabilizer_element(lat, plaquette_operator(lat, 3, 5)));
}

TEST_CASE("homology_class rejects open frames") {
  Lattice lat(4);
  PauliFrame f(lat.n_qubits());
  f.x.set(lat.h_qubit(1, 1), true);
  CHECK_THROWS_AS(homology_class(lat, f), std::invalid_argument);
}

TEST_CASE("homology_class is a homomorphism on closed frames") {
  Lattice lat(6);
  rng::Stream rng(13, 0);
  for (int t = 0; t < 100; ++t) {
    PauliFrame a = random_stabilizer_product(lat, rng, 20);
    a ^= logical_representative(lat, HomologyClass(uint8_t(rng.next_u64() & 15)));
    PauliFrame b = random_stabilizer_product(lat, rng, 20);
    b ^= logical_representative(lat, HomologyClass(uint8_t(rng.next_u64() & 15)));
    CHECK((homology_class(lat, a) ^ homology_class(lat, b)) == homology_class(lat, a ^ b));
  }
}

TEST_CASE("two chains with equal endpoints, one detouring around a handle") {
  Lattice lat(4);
  // both chains connect plaquette defects at (0,1) and (2,1)
  PauliFrame direct(lat.n_qubits());
  direct.x.set(lat.v_qubit(1, 1), true);
  direct.x.set(lat.v_qubit(2, 1), true);
  PauliFrame detour(lat.n_qubits());
  detour.x.set(lat.v_qubit(3, 1), true);
  detour.x.set(lat.v_qubit(0, 1), true);
  CHECK(syndrome(lat, direct) == syndrome(lat, detour));

  PauliFrame loop = direct ^ detour;
  CHECK_FALSE(homology_class(lat, loop).trivial());
  CHECK_FALSE(stabilizer_member_oracle(lat, loop));

  // a same-side alternate route differs by a contractible loop instead
  PauliFrame alternate(lat.n_qubits());
  alternate.x.set(lat.h_qubit(0, 1), true);
  alternate.x.set(lat.v_qubit(1, 0), true);
  alternate.x.set(lat.v_qubit(2, 0), true);
  alternate.x.set(lat.h_qubit(2, 1), true);
  CHECK(syndrome(lat, alternate) == syndrome(lat, direct));
  CHECK(homology_class(lat, direct ^ alternate).trivial());
  CHECK(stabilizer_member_oracle(lat, direct ^ alternate));
}

TEST_CASE("winding agreement with stabilizer membership oracle, fuzzed") {
  Lattice lat(4);
  rng::Stream rng(14, 0);
  for (int t = 0; t < 200; ++t) {
    PauliFrame f = random_stabilizer_product(lat, rng, 12);
    if (rng.next_bool(0.5))
      f ^= logical_representative(lat, HomologyClass(uint8_t(1 + rng.next_u64() % 15)));
    CHECK(is_stabilizer_element(lat, f) == stabilizer_member_oracle(lat, f));
  }
}

TEST_CASE("canonical correction: empty syndrome, adjacent defects, round trips") {
  Lattice lat(8);
  Syndrome empty(lat.n_plaq(), lat.n_sites());
  CHECK(canonical_correction(lat, empty).weight() == 0);

  // two horizontally adjacent plaquette defects connect by their shared edge
  Syndrome adj(lat.n_plaq(), lat.n_sites());
  adj.plaq.set(lat.plaq_index(3, 4), true);
  adj.plaq.set(lat.plaq_index(4, 4), true);
  PauliFrame corr = canonical_correction(lat, adj);
  CHECK(corr.weight() == 1);
  CHECK(corr.x.get(lat.v_qubit(4, 4)));
  CHECK(syndrome(lat, corr) == adj);

  // vertically adjacent pair: single shared edge as well
  Syndrome adj2(lat.n_plaq(), lat.n_sites());
  adj2.plaq.set(lat.plaq_index(5, 2), true);
  adj2.plaq.set(lat.plaq_index(5, 3), true);
  PauliFrame corr2 = canonical_correction(lat, adj2);
  CHECK(corr2.weight() == 1);
  CHECK(syndrome(lat, corr2) == adj2);

  CHECK_THROWS_AS(canonical_correction(lat, [&] {
                    Syndrome s(lat.n_plaq(), lat.n_sites());
                    s.plaq.set(0, true);
                    return s;
                  }()),
                  std::invalid_argument);
}

TEST_CASE("canonical correction round-trips sampled syndromes at l=32") {
  Lattice lat(32);
  rng::Stream rng(15, 0);
  for (int t = 0; t < 200; ++t) {
    Syndrome syn = random_syndrome(lat, rng, 0.08);
    PauliFrame corr = canonical_correction(lat, syn);
    CHECK(syndrome(lat, corr) == syn);
  }
}

TEST_CASE("l=2 exhaustive: 64 closed frames in the trivial class") {
  Lattice lat(2);
  int closed_trivial = 0;
  for (uint32_t xm = 0; xm < 256; ++xm) {
    for (uint32_t zm = 0; zm < 256; ++zm) {
      PauliFrame f(8);
      for (int q = 0; q < 8; ++q) {
        f.x.set(q, xm >> q & 1);
        f.z.set(q, zm >> q & 1);
      }
      if (!syndrome(lat, f).any() && winding_parities(lat, f).trivial()) ++closed_trivial;
    }
  }
  CHECK(closed_trivial == 64);  // 2^(2*l*l - 2)
}

TEST_CASE("translation preserves syndrome structure") {
  Lattice lat(6);
  rng::Stream rng(16, 0);
  PauliFrame f = random_frame(lat, rng, 0.2);
  Syndrome s = syndrome(lat, f);
  CHECK(syndrome(lat, translated(lat, f, 2, 3)) == translated(lat, s, 2, 3));
}
