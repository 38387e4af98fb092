#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace trimglm {

// Deterministic sampling layer. std::mt19937_64 is fully specified by the
// standard, and every sampler below is written against its raw uniforms, so
// a given seed yields the same stream on any platform. The std::*_distribution
// classes are implementation-defined and deliberately not used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform on [0, 1), 53-bit resolution
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // uniform on (0, 1], safe as a log() argument
  double uniform_pos() { return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53; }

  double normal();                        // Box-Muller, two uniforms per draw
  long long poisson(double rate);         // inversion for rate <= 10, transformed rejection above
  long long binomial(long long m, double p);  // sum of Bernoulli draws
  int rademacher() { return uniform01() < 0.5 ? -1 : 1; }

 private:
  std::mt19937_64 gen_;
};

// Hash-combines a root seed with structural indices (family, cell, trial, ...)
// so that every unit of work owns an independent, reproducible stream.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> parts);

}  // namespace trimglm
