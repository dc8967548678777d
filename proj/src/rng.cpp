#include "msynth/rng.hpp"

#include <cmath>

#include "msynth/errors.hpp"

namespace msynth {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : seed_(seed), gen_(seed) {}

RngStream RngStream::derive(std::string_view label) const {
  return RngStream(splitmix64(seed_ ^ fnv1a64(label)));
}

RngStream RngStream::derive(std::string_view label, std::uint64_t n) const {
  return RngStream(splitmix64(splitmix64(seed_ ^ fnv1a64(label)) ^ n));
}

std::uint64_t RngStream::next_u64() { return gen_(); }

double RngStream::uniform() {
  // (x >> 11) has 53 random bits; the +0.5 keeps the result strictly inside
  // (0, 1) so inverse-CDF transforms never see 0 or 1.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
}

double RngStream::gaussian() { return inverse_normal_cdf(uniform()); }

std::size_t RngStream::uniform_index(std::size_t n) {
  if (n == 0) throw NonPositiveParameter("uniform_index needs n > 0");
  if (n == 1) return 0;
  std::uint64_t bound = n;
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  for (;;) {
    std::uint64_t x = next_u64();
    if (x < limit) return static_cast<std::size_t>(x % bound);
  }
}

double inverse_normal_cdf(double p) {
  // Acklam's rational approximation, then one Halley step against erfc.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;

  double x;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  double u = e * std::sqrt(2.0 * 3.14159265358979323846) *
             std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

}  // namespace msynth
