#include "rmtl/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace rmtl {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += kGolden);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index) {
  std::uint64_t sm = master_seed + kGolden * (stream_index + 1);
  for (auto& word : state_) word = splitmix64(sm);
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

std::uint64_t RngStream::derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t sm = seed + kGolden * (salt + 1);
  splitmix64(sm);
  return splitmix64(sm);
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double RngStream::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be > 0");
  return -std::log(1.0 - uniform01()) / rate;
}

double RngStream::uniform(double lo, double hi) {
  return lo + uniform01() * (hi - lo);
}

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("below: n must be positive");
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

Eigen::VectorXd standard_normal_vector(int dim, RngStream& rng) {
  if (dim < 1) throw std::invalid_argument("standard_normal_vector: dim must be >= 1");
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.normal();
  return v;
}

}  // namespace rmtl
