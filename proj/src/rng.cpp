#include "trimglm/rng.hpp"

#include <cmath>

#include "trimglm/errors.hpp"

namespace trimglm {

double Rng::normal() {
  const double u1 = uniform_pos();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

namespace {

// Sequential search from 0; exact and cheap for small rates.
long long poisson_inversion(Rng& rng, double rate) {
  const double u = rng.uniform01();
  double p = std::exp(-rate);
  double cum = p;
  long long k = 0;
  while (u > cum) {
    ++k;
    p *= rate / static_cast<double>(k);
    cum += p;
  }
  return k;
}

// Hormann's transformed rejection with squeeze (PTRS), valid for rate >= 10.
long long poisson_ptrs(Rng& rng, double rate) {
  const double slam = std::sqrt(rate);
  const double loglam = std::log(rate);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform01() - 0.5;
    const double v = rng.uniform_pos();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + rate + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<long long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -rate + kf * loglam - std::lgamma(kf + 1.0)) {
      return static_cast<long long>(kf);
    }
  }
}

}  // namespace

long long Rng::poisson(double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) fail_invalid("poisson sampler: rate must be finite and nonnegative");
  if (rate == 0.0) return 0;
  return rate <= 10.0 ? poisson_inversion(*this, rate) : poisson_ptrs(*this, rate);
}

long long Rng::binomial(long long m, double p) {
  if (m < 0) fail_invalid("binomial sampler: m must be nonnegative");
  if (!(p >= 0.0 && p <= 1.0)) fail_invalid("binomial sampler: p must lie in [0, 1]");
  long long k = 0;
  for (long long j = 0; j < m; ++j) k += uniform01() < p ? 1 : 0;
  return k;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(root);
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

}  // namespace trimglm
