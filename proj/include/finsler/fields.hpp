#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "finsler/spec.hpp"
#include "finsler/tensors.hpp"
#include "finsler/types.hpp"

namespace finsler {

/// Special vector/covector field properties tested against a metric.
enum class FieldCondition {
  SemiConcurrent,      ///< B^h(x) C_hij = 0 at every support element
  ContraCC,            ///< sigma_h C^h_ij = 0 for a gradient covector sigma
  Concurrent,          ///< grad B = -id horizontally and B^h C_hij = 0
};

std::string field_condition_name(FieldCondition c);

/// Residual of one support element, with named scalar diagnostics.
struct FieldSample {
  int id = 0;
  double residual = 0.0;
  std::map<std::string, double> extra;
};

struct FieldCheckResult {
  FieldCondition condition = FieldCondition::SemiConcurrent;
  double residual_rel = 0.0;    ///< worst per-sample residual
  bool holds = false;
  bool zero_field = false;      ///< field vanished on every sample
  double tol = 1e-6;
  std::vector<FieldSample> per_sample;
  std::map<std::string, double> extra;  ///< aggregate diagnostics
};

/// Basis of the numerical null space of the torsion contraction map
/// B |-> B^h C_hij over a set of support directions at one chart point.
struct NullspaceResult {
  Mat basis;                    ///< columns: orthonormal null directions
  std::vector<double> singular_values;  ///< descending
  double threshold = 0.0;       ///< absolute cutoff applied
  double scale = 0.0;           ///< largest singular value
  int y_samples_used = 0;
};

/// Whether a nonvanishing semi-concurrent field stays linearly independent
/// of the support direction.
struct Lemma1Report {
  bool precondition_sc = false;
  bool nonzero_field = false;
  double sc_residual = 0.0;
  double min_margin = 0.0;      ///< smallest independence margin over samples
  std::vector<double> per_sample_margin;
  bool independent = false;
  double margin_threshold = 0.0;
  bool degenerate_metric = false;  ///< torsion vanishes: condition is empty
};

/// Tests B^h(x) C_hij = 0 over the given support elements.
FieldCheckResult check_sc(const MetricSpec& metric, const VectorFieldSpec& field,
                          std::span<const TensorBundle> bundles, double tol);

/// Tests sigma_h C^h_ij = 0 where sigma_i = field components read as a
/// covector.
FieldCheckResult check_cc(const MetricSpec& metric, const VectorFieldSpec& sigma,
                          std::span<const TensorBundle> bundles, double tol);

/// Tests the concurrent-field equations: the horizontal part
/// d_j B^i + B^h Gamma^i_hj = -delta^i_j and the vertical part B^h C^i_hj = 0.
FieldCheckResult check_concurrent(const MetricSpec& metric,
                                  const VectorFieldSpec& field,
                                  std::span<const TensorBundle> bundles,
                                  double tol);

/// Searches for constant vectors annihilating the torsion at chart point x
/// across the given support directions.  The returned basis spans the
/// numerical null space; an empty basis means no semi-concurrent direction
/// exists at x.
NullspaceResult find_sc_field(const MetricSpec& metric, const Vec& x,
                              std::span<const Vec> y_samples,
                              double threshold = 1e-8);

/// Checks that a semi-concurrent nonzero field is linearly independent of
/// the support direction at every sample.
Lemma1Report lemma1_independence(const MetricSpec& metric,
                                 const VectorFieldSpec& field,
                                 std::span<const TensorBundle> bundles,
                                 double sc_tol, double margin_threshold = 1e-3,
                                 double riemannian_tol = 1e-6);

}  // namespace finsler
