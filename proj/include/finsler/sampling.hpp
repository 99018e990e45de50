#pragma once

#include <cstdint>
#include <random>

#include "finsler/spec.hpp"

namespace finsler {

/// Generator identifier recorded in reports; the algorithm below is fixed so
/// a (seed, region) pair reproduces the same stream on any IEEE-754 platform.
inline constexpr const char* kSamplerVersion = "mt19937_64/ball-rejection/v1";

/// Deterministic sampler: mt19937_64 with the fixed 53-bit uniform mapping,
/// unit directions by rejection from the cube (sqrt-only normalization, no
/// libm-dependent transforms).
class SampleRng {
 public:
  explicit SampleRng(std::uint64_t seed) : engine_(seed) {}

  double next01() { return double(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next01(); }

  /// Uniform direction on the unit sphere in R^n.
  Vec unit_vector(int n) {
    for (;;) {
      Vec u(n);
      double norm2 = 0.0;
      for (int i = 0; i < n; ++i) {
        u[i] = uniform(-1.0, 1.0);
        norm2 += u[i] * u[i];
      }
      if (norm2 > 1.0 || norm2 < 1e-8) continue;
      return u / std::sqrt(norm2);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// One raw draw from the region: x uniform in the chart box, y on the
/// sign-masked sphere of radius y_radius. No admissibility gating here.
inline void draw_candidate(const SampleRegion& region, SampleRng& rng, Vec& x,
                           Vec& y) {
  const int n = int(region.x_min.size());
  x.resize(n);
  for (int i = 0; i < n; ++i) x[i] = rng.uniform(region.x_min[i], region.x_max[i]);
  y = rng.unit_vector(n) * region.y_radius;
  for (int i = 0; i < n; ++i) {
    switch (region.y_signs[std::size_t(i)]) {
      case AxisSign::Free: break;
      case AxisSign::Pos: y[i] = std::abs(y[i]); break;
      case AxisSign::Neg: y[i] = -std::abs(y[i]); break;
    }
  }
}

}  // namespace finsler
