#include "trflab/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace trflab {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

double to_unit_interval(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::array<std::uint32_t, 4> RngStream::next_block() {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
      static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  ++counter_;
  return philox4x32_10(ctr, key);
}

std::uint64_t RngStream::next_u64() {
  const auto b = next_block();
  return (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
}

double RngStream::uniform() {
  const auto b = next_block();
  return to_unit_interval(b[0], b[1]);
}

double RngStream::normal() {
  const auto b = next_block();
  const double u1 = to_unit_interval(b[0], b[1]);
  const double u2 = to_unit_interval(b[2], b[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream RngStream::substream(std::uint64_t tag) const {
  return RngStream(seed_, splitmix64(stream_ ^ splitmix64(tag)));
}

Sequence gaussian_noise(std::size_t n_frames, std::size_t dim, double std, RngStream& rng) {
  if (!(std >= 0.0)) throw std::invalid_argument("gaussian_noise: std must be >= 0");
  Sequence out(n_frames, dim);
  for (double& v : out.flat()) v = std * rng.normal();
  return out;
}

NoiseStreams::NoiseStreams(std::uint64_t seed, bool mirrored)
    : seed_(seed),
      mirrored_(mirrored),
      streams_{RngStream(seed, 0).substream(1), RngStream(seed, 0).substream(2),
               RngStream(seed, 0).substream(3), RngStream(seed, 0).substream(4),
               RngStream(seed, 0).substream(5), RngStream(seed, 0).substream(6),
               RngStream(seed, 0).substream(7)} {}

RngStream& NoiseStreams::stream(NoisePurpose purpose) {
  return streams_.at(static_cast<std::size_t>(purpose) - 1);
}

Sequence NoiseStreams::draw(NoisePurpose purpose, std::size_t n_frames, std::size_t dim,
                            double std) {
  Sequence eps = gaussian_noise(n_frames, dim, std, stream(purpose));
  return mirrored_ ? reverse(eps) : eps;
}

}  // namespace trflab
