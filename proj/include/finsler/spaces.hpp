#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "finsler/tensors.hpp"

namespace finsler {

/// The algebraic conditions a metric can satisfy, each characterized by a
/// structural equation on the Cartan torsion, its horizontal derivative, the
/// hv-curvature, or the T-tensor.
enum class SpaceCondition {
  Riemannian,
  CReducible,
  SemiCReducible,
  QuasiCReducible,
  C3Like,
  ChRecurrent,
  P2Like,
  PReducible,
  Landsberg,
  TCondition,
};

/// Stable snake_case name used in reports and tolerance overrides.
std::string condition_name(SpaceCondition c);

/// Outcome of testing one condition over a sample set. residual_rel is the
/// worst per-sample misfit, normalized by 1 + the Frobenius norm of the
/// equation's left-hand tensor. degenerate means both sides of the defining
/// equation vanish (so the condition holds vacuously); dim_warning means the
/// condition's usual dimension restriction does not cover this metric but the
/// check was computed anyway.
struct ConditionVerdict {
  SpaceCondition condition = SpaceCondition::Riemannian;
  double residual_rel = 0.0;
  std::map<std::string, double> fitted;
  bool holds = false;
  bool degenerate = false;
  bool dim_warning = false;
  int samples_used = 0;
  double tol = 0.0;
};

/// Named per-condition tolerances; anything unset falls back to 1e-6.
struct ToleranceSet {
  std::map<std::string, double> values;
  double get(const std::string& name) const;
};

/// Merge: spec-file overrides first, then explicit overrides on top.
ToleranceSet resolve_tolerances(const MetricSpec& spec,
                                const std::map<std::string, double>& overrides);

/// g-orthonormal frame on a 3-dimensional metric: l along the support
/// direction, m along the mean torsion covector, nvec completing the frame.
/// l, m, nvec hold the lowered components; *_up the raised ones. H, I, J are
/// the projections of F * C onto (m,m,m), (m,n,n), (n,n,n).
struct MoorFrame {
  Vec l, m, nvec;
  Vec l_up, m_up, n_up;
  double H = 0.0, I = 0.0, J = 0.0;
};

// ---- per-support-element residuals and fits (building blocks) ----

double riemannian_residual(const TensorBundle& b);
double c_reducible_residual(const TensorBundle& b);
double quasi_c_reducible_residual(const TensorBundle& b);
double p_reducible_residual(const TensorBundle& b);
double landsberg_residual(const TensorBundle& b);
double t_condition_residual(const TensorBundle& b);

struct SemiCFit {
  double r = 0.0, t = 0.0;
  double residual_rel = 0.0;
};
SemiCFit semi_c_reducible_fit_at(const TensorBundle& b);

struct C3Fit {
  Vec a, b;
  double residual_rel = 0.0;
};
C3Fit c3_like_fit_at(const TensorBundle& b, bool force_b_zero = false);

struct CovectorFit {
  Vec K;
  double residual_rel = 0.0;
};
CovectorFit ch_recurrent_fit_at(const TensorBundle& b);
CovectorFit p2_like_fit_at(const TensorBundle& b);

/// Construct the frame at one support element. Throws SpecError unless
/// dim == 3 and DegenerateError when the mean torsion vanishes.
MoorFrame moor_frame_3d(const TensorBundle& b);

/// Rebuild F * C_ijk from the frame and main scalars (the inverse of the
/// projection that defines H, I, J); used for round-trip checks.
Tensor3 moor_reconstruct(const MoorFrame& f);

// ---- sample-set verdicts ----

ConditionVerdict is_riemannian(std::span<const TensorBundle> bundles,
                               double tol);
ConditionVerdict check_c_reducible(std::span<const TensorBundle> bundles,
                                   double tol, double riemannian_tol = 1e-6);
ConditionVerdict fit_semi_c_reducible(std::span<const TensorBundle> bundles,
                                      double tol,
                                      double riemannian_tol = 1e-6);
ConditionVerdict check_quasi_c_reducible(std::span<const TensorBundle> bundles,
                                         double tol,
                                         double riemannian_tol = 1e-6);
ConditionVerdict fit_c3_like(std::span<const TensorBundle> bundles, double tol,
                             double riemannian_tol = 1e-6);
ConditionVerdict check_ch_recurrent(std::span<const TensorBundle> bundles,
                                    double tol, double riemannian_tol = 1e-6);
ConditionVerdict check_p2_like(std::span<const TensorBundle> bundles,
                               double tol, double riemannian_tol = 1e-6);
std::pair<ConditionVerdict, ConditionVerdict> check_p_reducible_landsberg(
    std::span<const TensorBundle> bundles, double tol_p, double tol_landsberg,
    double riemannian_tol = 1e-6);
ConditionVerdict check_t_condition(std::span<const TensorBundle> bundles,
                                   double tol, double riemannian_tol = 1e-6);

/// Run every condition applicable to the metric's dimension, in a fixed
/// order. Conditions restricted to dim >= 3 are omitted on 2-charts unless
/// the metric is torsion-free (where they hold vacuously).
std::vector<ConditionVerdict> classify_all(
    std::span<const TensorBundle> bundles, const ToleranceSet& tols);

}  // namespace finsler
