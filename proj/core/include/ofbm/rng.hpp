#pragma once

#include <cstdint>

namespace ofbm {

// Role tags so that every (seed, replicate, component, role) tuple owns a
// disjoint counter plane of the Philox cipher. Streams never collide and are
// independent of threading or evaluation order.
enum class StreamRole : uint32_t {
  kTelegraphSign = 0,     // jump times multiplying the first kernel
  kTelegraphSignHat = 1,  // jump times multiplying the second kernel
  kGaussian = 2,          // Gaussian draws (exact sampler, noise sequences)
  kSpectrum = 3,          // randomized spectrum for circulant embedding
  kGeneric = 4,
};

// Counter-based stream built on Philox4x32-10 (Salmon et al. 2011 constants).
// The 128-bit counter is laid out as [block_lo, block_hi, component|role, replicate],
// the 64-bit key is the user seed.
class RngStream {
 public:
  RngStream(uint64_t seed, uint32_t replicate, uint32_t component, StreamRole role);

  uint32_t next_u32();
  uint64_t next_u64();

  // Uniform on the open interval (0,1): ((k + 0.5) * 2^-53), never 0 or 1.
  double uniform();

  // Standard normal via Box-Muller (pairs cached, fixed draw order).
  double gaussian();

  // Exponential with the given rate (> 0).
  double exponential(double rate);

  // Raw one-shot block, exposed for known-answer tests.
  static void block(const uint32_t counter[4], const uint32_t key[2], uint32_t out[4]);

 private:
  void refill();

  uint32_t key_[2];
  uint32_t base_[2];   // counter words 2..3 (stream identity)
  uint64_t block_ = 0; // counter words 0..1
  uint32_t buf_[4];
  int buf_pos_ = 4;
  double cached_gauss_ = 0.0;
  bool has_cached_gauss_ = false;
};

}  // namespace ofbm
