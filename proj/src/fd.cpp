#include "finsler/fd.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace finsler {
namespace {

struct Stencil {
  std::vector<int> offsets;
  std::vector<double> weights;  // divided by h^order at use
  int order = 0;
};

// Second-order central stencils for d^k/dc^k, k <= 4; even error series.
Stencil stencil_1d(int order) {
  switch (order) {
    case 1: return {{-1, 1}, {-0.5, 0.5}, 1};
    case 2: return {{-1, 0, 1}, {1.0, -2.0, 1.0}, 2};
    case 3: return {{-2, -1, 1, 2}, {-0.5, 1.0, -1.0, 0.5}, 3};
    case 4: return {{-2, -1, 0, 1, 2}, {1.0, -4.0, 6.0, -4.0, 1.0}, 4};
    default: throw std::out_of_range("fd stencil order must lie in [1, 4]");
  }
}

struct Axis {
  bool is_x = false;
  int coord = 0;
  Stencil stencil;
  double unit_step = 0.0;  // (1 + |coord|), scaled by the common base step
};

double f_squared(const Expr& f, std::span<const double> x,
                 std::span<const double> y, const ParamMap& params) {
  const double v = eval_double(f, x, y, params);
  return v * v;
}

// One tensor-product stencil application at base step h.
double apply_stencils(const Expr& f, std::span<const double> x,
                      std::span<const double> y,
                      const std::vector<Axis>& axes, double h,
                      const ParamMap& params) {
  std::vector<double> xs(x.begin(), x.end());
  std::vector<double> ys(y.begin(), y.end());
  std::vector<std::size_t> idx(axes.size(), 0);
  double acc = 0.0;
  for (;;) {
    double w = 1.0;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const Axis& ax = axes[a];
      const double step = ax.unit_step * h;
      const double shifted =
          (ax.is_x ? x[std::size_t(ax.coord)] : y[std::size_t(ax.coord)]) +
          ax.stencil.offsets[idx[a]] * step;
      if (ax.is_x)
        xs[std::size_t(ax.coord)] = shifted;
      else
        ys[std::size_t(ax.coord)] = shifted;
      w *= ax.stencil.weights[idx[a]];
    }
    acc += w * f_squared(f, xs, ys, params);
    // Odometer over stencil points.
    std::size_t a = 0;
    for (; a < axes.size(); ++a) {
      if (++idx[a] < axes[a].stencil.offsets.size()) break;
      idx[a] = 0;
    }
    if (a == axes.size()) break;
  }
  double scale = 1.0;
  for (const Axis& ax : axes)
    scale *= std::pow(ax.unit_step * h, ax.stencil.order);
  return acc / scale;
}

}  // namespace

double fd_oracle(const Expr& f, std::span<const double> x,
                 std::span<const double> y, int xdir,
                 std::span<const int> ydirs, const ParamMap& params,
                 const FDSettings& settings) {
  if (settings.richardson_levels < 1 || settings.richardson_levels > 6)
    throw std::out_of_range("richardson_levels must lie in [1, 6]");
  if (settings.step_scale <= 0.0)
    throw std::out_of_range("step_scale must be positive");
  const int n = int(y.size());
  if (xdir >= n) throw std::out_of_range("fd x-direction out of range");

  std::array<int, kMaxDim> y_order{};
  int total = 0;
  for (int d : ydirs) {
    if (d < 0 || d >= n) throw std::out_of_range("fd y-direction out of range");
    ++y_order[std::size_t(d)];
    ++total;
  }
  if (xdir >= 0) ++total;
  if (total == 0) return f_squared(f, x, y, params);
  if (total > kMaxYOrder)
    throw std::out_of_range("fd derivative order exceeds the truncation set");

  std::vector<Axis> axes;
  if (xdir >= 0) {
    Axis ax;
    ax.is_x = true;
    ax.coord = xdir;
    ax.stencil = stencil_1d(1);
    ax.unit_step = 1.0 + std::abs(x[std::size_t(xdir)]);
    axes.push_back(std::move(ax));
  }
  for (int d = 0; d < n; ++d) {
    if (y_order[std::size_t(d)] == 0) continue;
    Axis ax;
    ax.coord = d;
    ax.stencil = stencil_1d(y_order[std::size_t(d)]);
    ax.unit_step = 1.0 + std::abs(y[std::size_t(d)]);
    axes.push_back(std::move(ax));
  }

  // Order-matched base step balancing truncation against rounding after
  // extrapolation; see FDSettings.
  const int levels = settings.richardson_levels;
  const double eps = std::numeric_limits<double>::epsilon();
  const double h0 = settings.step_scale *
                    std::pow(eps * std::pow(2.0, double(total * (levels - 1))),
                             1.0 / double(2 * levels + total));

  // Guard: displaced coordinates must move (step underflow), and y-stencils
  // must not straddle the fiber origin where F^2 is merely continuous.
  double y_reach = 0.0;
  for (const Axis& ax : axes) {
    const double step = ax.unit_step * h0;
    const double base =
        ax.is_x ? x[std::size_t(ax.coord)] : y[std::size_t(ax.coord)];
    if (base + step == base)
      throw EvalError("finite-difference step underflow at coordinate " +
                          std::string(ax.is_x ? "x" : "y") +
                          std::to_string(ax.coord + 1),
                      "");
    if (!ax.is_x) {
      const double reach =
          std::abs(double(ax.stencil.offsets.back())) * step;
      y_reach = std::max(y_reach, reach);
    }
  }
  double y_norm = 0.0;
  for (double v : y) y_norm += v * v;
  y_norm = std::sqrt(y_norm);
  if (y_reach > 0.0 && y_reach >= 0.5 * y_norm)
    throw EvalError("finite-difference stencil reaches y = 0", "");

  // Richardson refinement; central stencils carry an even error series, so
  // the Neville tableau contracts with powers of 4.
  std::vector<double> row(static_cast<std::size_t>(levels));
  for (int l = 0; l < levels; ++l)
    row[std::size_t(l)] =
        apply_stencils(f, x, y, axes, h0 / std::pow(2.0, double(l)), params);
  for (int j = 1; j < levels; ++j) {
    const double factor = std::pow(4.0, double(j));
    for (int l = levels - 1; l >= j; --l)
      row[std::size_t(l)] =
          (factor * row[std::size_t(l)] - row[std::size_t(l - 1)]) /
          (factor - 1.0);
  }
  return row[std::size_t(levels - 1)];
}

double fd_oracle(const Expr& f, std::span<const double> x,
                 std::span<const double> y, int xdir,
                 std::initializer_list<int> ydirs, const ParamMap& params,
                 const FDSettings& settings) {
  return fd_oracle(f, x, y, xdir,
                   std::span<const int>(ydirs.begin(), ydirs.size()), params,
                   settings);
}

}  // namespace finsler
