#pragma once

#include <cstdint>
#include <memory>

#include "finsler/fd.hpp"
#include "finsler/spec.hpp"
#include "finsler/types.hpp"

namespace finsler {

/// Admissibility gate: the metric tensor must satisfy
/// min_eigenvalue > kPdRelEig * (trace / n).
inline constexpr double kPdRelEig = 1e-8;

/// An admissible support element: chart point x, nonzero fiber vector y,
/// with F(x, y) > 0.
struct SupportElement {
  Vec x, y;
  double F = 0.0;
};

/// Mixed partials of F^2 at one support element: the common substrate for
/// all tensor assembly. Sourced either from exact jet arithmetic or from the
/// independent finite-difference oracle, so bundles exist in two
/// realizations that can be cross-checked.
class DerivTable {
 public:
  enum class Source { Jet, FiniteDifference };

  static DerivTable from_jet(const MetricSpec& spec, const Vec& x,
                             const Vec& y);
  static DerivTable from_fd(const MetricSpec& spec, const Vec& x, const Vec& y,
                            const FDSettings& settings = {});

  int dim() const { return dim_; }
  Source source() const { return source_; }
  const Vec& x() const { return x_; }
  const Vec& y() const { return y_; }

  /// D_x^xdir D_y^ydirs F^2 (true derivative; xdir = -1 for none).
  double w(int xdir, std::initializer_list<int> ydirs) const;
  double w(int xdir, std::span<const int> ydirs) const;

  /// F-level derivatives (jet source only): value, d_i F, d_i d_j F.
  bool has_f_jet() const { return has_f_jet_; }
  double f_value() const { return f_value_; }
  const Vec& f_grad() const { return f_grad_; }
  const Mat& f_hess() const { return f_hess_; }

 private:
  int dim_ = 0;
  Source source_ = Source::Jet;
  Vec x_, y_;
  std::shared_ptr<const JetLayout> layout_;
  Vec values_;  // true derivatives of F^2, indexed by layout slot
  bool has_f_jet_ = false;
  double f_value_ = 0.0;
  Vec f_grad_;
  Mat f_hess_;
};

/// Every tensor of the notation table at one support element. Index
/// conventions: derivative index of C_hder is LAST (C_ijk|h at (i,j,k,h));
/// P is indexed (h,i,j,k); T is totally symmetric.
struct TensorBundle {
  SupportElement at;

  Mat g, g_inv, h;
  Vec l_lo;  // l_i
  double min_eig = 0.0;

  Tensor3 C_lo;     // C_ijk
  Tensor3 C_mixed;  // C^i_jk (first index raised)
  Vec C_mean;       // C_i = C_ijk g^jk
  double C_norm2 = 0.0;  // C^2 = g^ij C_i C_j

  Vec G_spray;        // G^i
  Mat N;              // N^i_j
  Tensor3 G_berwald;  // G^i_jh
  Tensor3 Gamma;      // Cartan h-connection coefficients

  Tensor4 C_hder;   // C_ijk|h
  Tensor3 C_hder0;  // C_ijk|0

  Tensor4 P;       // hv-curvature P_hijk
  Tensor3 P_lo;    // P_ijk = C_ijk|0
  Vec P_mean;      // g^jk P_ijk

  Tensor4 T;   // T_hijk
  Mat T2;      // T_ij = T_ijhk g^hk

  bool has_f_jet = false;
  Vec dF;   // jet source only: first y-derivatives of F
  Mat ddF;  // jet source only: second y-derivatives of F
};

/// Assembly stages, each filling its slice of the bundle from the table.
/// metric_block throws MetricError when g is singular or not
/// positive-definite at the gate.
void metric_block(const DerivTable& table, TensorBundle& bundle);
void cartan_block(const DerivTable& table, TensorBundle& bundle);
void spray_connections(const DerivTable& table, TensorBundle& bundle);
void cartan_h_derivative(const DerivTable& table, TensorBundle& bundle);
void hv_curvature(TensorBundle& bundle);
void t_tensor(const DerivTable& table, TensorBundle& bundle);

/// Run all stages in order.
TensorBundle build_bundle(const DerivTable& table);
/// Jet-path bundle at one support element.
TensorBundle build_bundle(const MetricSpec& spec, const Vec& x, const Vec& y);

/// Draw admissible support elements from the document's sampling region
/// (rejects F <= 0,
/// evaluation domain errors, and metrics failing the positive-definiteness
/// gate). Throws SpecError when the region yields nothing admissible.
std::vector<SupportElement> sample_support(const MetricSpec& spec, int count,
                                           std::uint64_t seed);

/// Jet-path bundles at sampled support elements. Honors FINSLER_WORKERS for
/// the worker count (default 1); results are ordered by sample index either
/// way.
std::vector<TensorBundle> sample_bundles(const MetricSpec& spec, int count,
                                         std::uint64_t seed);

}  // namespace finsler
