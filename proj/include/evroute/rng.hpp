#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace evroute {

/* One independently seeded generator per logical stream. Streams are keyed
 * by (base seed, kind, a, b): arrivals use one stream per EV type, service
 * draws one stream per activity (i,j). This keeps the arrival sample path
 * identical across routing policies, and service draws identical per
 * (request, station) wherever the decision sequences coincide.
 *
 * All variates are derived from raw 64-bit output through explicit inverse
 * transforms instead of std::*_distribution, so a (seed, stream) pair maps
 * to a bit-identical variate sequence regardless of standard-library
 * distribution internals. */
class RandomStream {
 public:
  enum class Kind : std::uint32_t { arrival = 1, service = 2, aux = 3 };

  RandomStream(std::uint64_t base_seed, Kind kind, std::uint32_t a, std::uint32_t b = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(base_seed & 0xffffffffu),
                      static_cast<std::uint32_t>(base_seed >> 32),
                      static_cast<std::uint32_t>(kind), a, b};
    gen_.seed(seq);
  }

  std::uint64_t raw() { return gen_(); }

  // uniform on [0,1), 53-bit resolution
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // uniform on (0,1], safe as a log argument
  double uniform01_pos() { return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log(uniform01_pos()) / rate; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace evroute
