#pragma once

#include <span>

#include "finsler/expr.hpp"

namespace finsler {

/// Settings for the central-difference derivative oracle.
struct FDSettings {
  /// Multiplier on the order-matched base step
  /// h = (eps * 2^(K(L-1)))^(1/(2L+K)), K = total derivative order,
  /// L = richardson_levels; the classic eps^(1/3) first-derivative step is
  /// the K=1, L=1 instance.
  double step_scale = 1.0;
  int richardson_levels = 2;
};

/// Central-difference estimate of the mixed partial D_x^xdir D_y^ydirs of
/// F^2 at (x, y), refined by Richardson extrapolation. Entirely independent
/// of the jet path; used as the cross-check oracle for every jet
/// coefficient. Pass xdir = -1 for no x-derivative; ydirs lists
/// y-directions with repetition (e.g. {0, 0, 1} for d^3/dy1^2 dy2).
double fd_oracle(const Expr& f, std::span<const double> x,
                 std::span<const double> y, int xdir,
                 std::span<const int> ydirs, const ParamMap& params,
                 const FDSettings& settings = {});

double fd_oracle(const Expr& f, std::span<const double> x,
                 std::span<const double> y, int xdir,
                 std::initializer_list<int> ydirs, const ParamMap& params,
                 const FDSettings& settings = {});

}  // namespace finsler
