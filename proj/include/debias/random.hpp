#pragma once

#include <cstdint>
#include <vector>

namespace debias {

// Counter-based deterministic random streams.
//
// Every uniform draw is a pure function of (stream key, counter, purpose), so a
// simulation consumes randomness by *address* rather than by sequence position.
// Two consequences the rest of the library relies on:
//   * results are independent of evaluation order (and therefore of thread
//     count / scheduling), which the CLI determinism contract requires;
//   * two runs that share a stream but differ in one decision path (e.g. the
//     Uniform vs. Intermediate exploration actions) still see identical draws
//     for every purpose they have in common — exact common random numbers.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// What a draw is used for. Distinct purposes at the same counter are
// independent.
enum class Draw : std::uint64_t {
  Group = 1,        // which group an arrival belongs to
  Label = 2,        // the arrival's true label
  Feature = 3,      // inverse-transform feature sampling
  ExploreCoin = 4,  // bounded-exploration admit coin
  NoiseCoin = 5,    // intermediate-action mislabel coin
  RetainCoin = 6,   // rate-balanced subsampling of above-threshold points
  Generic = 7,      // free-standing sequences (sample_batch etc.)
};

class RandomStream {
 public:
  RandomStream() : key_(0) {}
  explicit RandomStream(std::uint64_t key) : key_(key) {}

  // Splittable derivation: distinct (seed, run index) pairs give statistically
  // independent streams and identical results regardless of execution order.
  static RandomStream derive(std::uint64_t master_seed, std::uint64_t run_index) {
    return RandomStream(mix64(mix64(master_seed) ^ mix64(run_index + 0x51ed2701ULL)));
  }

  std::uint64_t bits(std::uint64_t counter, Draw purpose) const {
    return mix64(mix64(key_ ^ mix64(counter)) ^ static_cast<std::uint64_t>(purpose));
  }

  // Uniform on the open interval (0,1); never returns an endpoint, so the
  // value is always a valid quantile argument.
  double uniform(std::uint64_t counter, Draw purpose) const {
    const std::uint64_t h = bits(counter, purpose);
    return (static_cast<double>(h >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

// A cursor over one purpose-lane of a stream, for callers that just want "the
// next" uniform. State is the counter, so a copied Sequence replays exactly.
class Sequence {
 public:
  explicit Sequence(RandomStream stream, Draw purpose = Draw::Generic,
                    std::uint64_t start = 0)
      : stream_(stream), purpose_(purpose), counter_(start) {}

  double next() { return stream_.uniform(counter_++, purpose_); }
  std::uint64_t position() const { return counter_; }

 private:
  RandomStream stream_;
  Draw purpose_;
  std::uint64_t counter_;
};

}  // namespace debias
