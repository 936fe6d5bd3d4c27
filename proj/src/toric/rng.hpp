#pragma once

#include <cstdint>

namespace toric::rng {

// SplitMix64 finalizer: full-avalanche 64-bit mixer.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based generator. A stream is keyed by (master seed, stream id), so
// per-trial streams can be created in any order, on any thread, and still
// produce identical draws for identical ids.
class Stream {
 public:
  Stream(uint64_t master_seed, uint64_t stream_id)
      : base_(mix64(master_seed ^ mix64(stream_id))) {}

  uint64_t next_u64() { return mix64(base_ + (counter_++) * 0x9e3779b97f4a7c15ULL); }

  // Uniform in [0, 1).
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  bool next_bool(double p) { return next_double() < p; }

 private:
  uint64_t base_;
  uint64_t counter_ = 0;
};

}  // namespace toric::rng
