#pragma once

// Deterministic driving noise for replica-parallel simulation.
//
// Every experiment consumes randomness through a NoiseStream, a counter-based
// generator derived from a (master seed, replica index) pair.  Two streams
// built from the same pair emit identical sequences, so a trajectory can be
// replayed exactly by re-deriving the stream; distinct replica indices give
// independent-looking streams that may be consumed on different threads.
//
// Generator: splitmix64 (Weyl counter + Stafford mix13 finalizer).
// Uniforms take the top 53 bits.  Normals use Box-Muller with the second
// value cached, so one stream yields a fixed sequence regardless of how the
// caller interleaves uniform and normal draws between steps.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

namespace fitpop {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t rotl64(std::uint64_t x, int r) noexcept {
  return (x << r) | (x >> (64 - r));
}

class NoiseStream {
 public:
  NoiseStream() = default;

  NoiseStream(std::uint64_t master_seed, std::uint64_t replica) noexcept
      : master_(master_seed),
        replica_(replica),
        state_(mix64(mix64(master_seed ^ rotl64(replica, 32)))) {}

  std::uint64_t master_seed() const noexcept { return master_; }
  std::uint64_t replica() const noexcept { return replica_; }

  std::uint64_t next_u64() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Uniform draw in [0, 1).
  double next_uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal draw (Box-Muller; second value cached).
  double next_normal() noexcept {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    // 1 - u1 lies in (0, 1], so the log is finite.
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t master_ = 0;
  std::uint64_t replica_ = 0;
  std::uint64_t state_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

inline NoiseStream derive_stream(std::uint64_t master_seed,
                                 std::uint64_t replica) noexcept {
  return NoiseStream(master_seed, replica);
}

// Adapter so standard <random> distributions can draw from a NoiseStream.
struct StreamEngine {
  using result_type = std::uint64_t;
  NoiseStream* stream;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return stream->next_u64(); }
};

// Binomial(n, p) draw.  Used when distributing large birth batches over value
// cells; the library implementation switches between inversion and rejection
// internally and stays exact for n up to the 1e12 range seen with heavy-tail
// increment laws.
inline std::int64_t binomial_draw(NoiseStream& stream, std::int64_t n,
                                  double p) {
  if (n < 0) throw std::invalid_argument("binomial_draw: negative count");
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  StreamEngine eng{&stream};
  std::binomial_distribution<std::int64_t> dist(n, p);
  return dist(eng);
}

}  // namespace fitpop
