#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "trflab/sequence.hpp"

namespace trflab {

/// Counter-based generator (Philox4x32-10). A stream is addressed by
/// (seed, stream id); the n-th draw depends only on (seed, stream id, n), so
/// streams can be recreated anywhere and never interfere with each other.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

  /// Raw 128-bit block for the current counter; advances by one.
  std::array<std::uint32_t, 4> next_block();
  std::uint64_t next_u64();
  /// Uniform on (0, 1].
  double uniform();
  /// Standard normal (Box-Muller on one block).
  double normal();

  /// Independent stream derived from this one's address and a tag. Does not
  /// advance this stream.
  RngStream substream(std::uint64_t tag) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// I.i.d. N(0, std^2) entries of shape (n_frames, dim). Throws on std < 0.
/// std == 0 yields zeros and still advances the stream.
Sequence gaussian_noise(std::size_t n_frames, std::size_t dim, double std, RngStream& rng);

/// Named noise sources of one sampling chain.
enum class NoisePurpose : std::uint64_t {
  kInitial = 1,
  kChurn = 2,
  kReinjection = 3,
  kBackwardInitial = 4,
  kBackwardChurn = 5,
  kInpaint = 6,
  kConditionSwap = 7,
};

/// The bundle of independently addressable streams a sampler consumes. With
/// `mirrored` set every draw is frame-reversed, which is what a sampler run
/// in reversed time must see to retrace another run's noise exactly.
class NoiseStreams {
 public:
  explicit NoiseStreams(std::uint64_t seed, bool mirrored = false);

  Sequence draw(NoisePurpose purpose, std::size_t n_frames, std::size_t dim, double std);
  RngStream& stream(NoisePurpose purpose);

  std::uint64_t seed() const { return seed_; }
  bool mirrored() const { return mirrored_; }

 private:
  std::uint64_t seed_;
  bool mirrored_;
  std::array<RngStream, 7> streams_;
};

}  // namespace trflab
