// Deterministic random number generation.
//
// Every stochastic routine in this library draws from a DeterministicRng that
// is constructed from an explicit 64-bit seed.  Seeds for sub-computations
// (per stream step, per trial, per release) are derived from a root seed with
// a counter scheme, so that
//   * two runs with the same root seed are bit-identical,
//   * streams of different lengths share seed prefixes, and
//   * a computation can be resumed mid-stream and reproduce the suffix.
//
// The normal and Laplace samplers are implemented explicitly (Box-Muller and
// inverse CDF) instead of via <random> distributions because the standard
// leaves distribution algorithms implementation-defined; byte-identical
// reproducibility across toolchains is part of this library's contract.

#pragma once

#include <cstdint>
#include <random>

namespace unlearn {

// SplitMix64 finalizer: bijective 64-bit mixer with full avalanche.
std::uint64_t splitmix64(std::uint64_t x);

// Derives a child seed from a root seed and up to three counters
// (e.g. stream id, step index, draw purpose).  Collision-free in practice:
// the fold is injective per level up to the mixer's bijectivity.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a);
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b);
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c);

class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed);

  // Uniform on [0, 1): 53-bit mantissa resolution.
  double uniform01();

  // Uniform on (0, 1): never returns an exact endpoint (safe for logs).
  double uniform01_open();

  // Standard normal via Box-Muller; the spare deviate is cached, so draws
  // come in deterministic order regardless of call sites.
  double normal01();

  // Laplace with location 0 and the given scale, via inverse CDF.
  double laplace(double scale);

  // Uniform integer in [0, bound) by rejection (no modulo bias).
  std::uint64_t uniform_below(std::uint64_t bound);

  std::uint64_t next_u64();

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace unlearn
