#include "ofbm/rng.hpp"

#include <cmath>

#include "ofbm/error.hpp"

namespace ofbm {

namespace {

constexpr uint32_t kW32A = 0x9E3779B9u;
constexpr uint32_t kW32B = 0xBB67AE85u;
constexpr uint32_t kM4x32A = 0xD2511F53u;
constexpr uint32_t kM4x32B = 0xCD9E8D57u;

inline void mul_hi_lo(uint32_t a, uint32_t b, uint32_t* lo, uint32_t* hi) {
  uint64_t p = uint64_t(a) * b;
  *lo = uint32_t(p);
  *hi = uint32_t(p >> 32);
}

inline void one_round(uint32_t c[4], const uint32_t k[2]) {
  uint32_t lo0, hi0, lo1, hi1;
  mul_hi_lo(kM4x32A, c[0], &lo0, &hi0);
  mul_hi_lo(kM4x32B, c[2], &lo1, &hi1);
  uint32_t r0 = hi1 ^ c[1] ^ k[0];
  uint32_t r1 = lo1;
  uint32_t r2 = hi0 ^ c[3] ^ k[1];
  uint32_t r3 = lo0;
  c[0] = r0;
  c[1] = r1;
  c[2] = r2;
  c[3] = r3;
}

}  // namespace

void RngStream::block(const uint32_t counter[4], const uint32_t key[2], uint32_t out[4]) {
  uint32_t c[4] = {counter[0], counter[1], counter[2], counter[3]};
  uint32_t k[2] = {key[0], key[1]};
  for (int r = 0; r < 10; ++r) {
    one_round(c, k);
    if (r < 9) {
      k[0] += kW32A;
      k[1] += kW32B;
    }
  }
  out[0] = c[0];
  out[1] = c[1];
  out[2] = c[2];
  out[3] = c[3];
}

RngStream::RngStream(uint64_t seed, uint32_t replicate, uint32_t component, StreamRole role) {
  key_[0] = uint32_t(seed);
  key_[1] = uint32_t(seed >> 32);
  base_[0] = (uint32_t(role) << 20) | (component & 0xFFFFFu);
  base_[1] = replicate;
}

void RngStream::refill() {
  uint32_t counter[4] = {uint32_t(block_), uint32_t(block_ >> 32), base_[0], base_[1]};
  block(counter, key_, buf_);
  ++block_;
  buf_pos_ = 0;
}

uint32_t RngStream::next_u32() {
  if (buf_pos_ >= 4) refill();
  return buf_[buf_pos_++];
}

uint64_t RngStream::next_u64() {
  uint64_t lo = next_u32();
  uint64_t hi = next_u32();
  return (hi << 32) | lo;
}

double RngStream::uniform() {
  uint64_t k = next_u64() >> 11;  // 53 bits
  return (double(k) + 0.5) * 0x1p-53;
}

double RngStream::gaussian() {
  if (has_cached_gauss_) {
    has_cached_gauss_ = false;
    return cached_gauss_;
  }
  double u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 6.283185307179586476925286766559 * u2;
  cached_gauss_ = r * std::sin(a);
  has_cached_gauss_ = true;
  return r * std::cos(a);
}

double RngStream::exponential(double rate) {
  if (!(rate > 0.0)) throw InvalidInputError("exponential: rate must be positive");
  return -std::log(uniform()) / rate;
}

}  // namespace ofbm
