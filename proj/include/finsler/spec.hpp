#pragma once

#include <string>
#include <vector>

#include "finsler/expr.hpp"
#include "finsler/types.hpp"

namespace finsler {

enum class AxisSign { Free, Pos, Neg };

/// Sampling region for support elements: a chart box for x and a sign-masked
/// sphere of radius y_radius for y.
struct SampleRegion {
  Vec x_min, x_max;
  std::vector<AxisSign> y_signs;
  double y_radius = 1.0;
};

/// A metric description loaded from an .fml document: name, dimension, the
/// F(x, y) expression, bound parameters, the sample region, and optional
/// per-condition tolerance overrides.
struct MetricSpec {
  std::string name;
  int dim = 0;
  ExprPtr expr;
  ParamMap params;
  SampleRegion region;
  std::map<std::string, double> tolerances;
};

/// A chart vector (or covector) field: one expression per component, chart
/// coordinates only.
struct VectorFieldSpec {
  std::string name;
  int dim = 0;
  std::vector<ExprPtr> components;
};

MetricSpec parse_metric_spec(std::string_view text, const std::string& origin);
MetricSpec load_metric_file(const std::string& path);

VectorFieldSpec parse_field_spec(std::string_view text,
                                 const std::string& origin);
VectorFieldSpec load_field_file(const std::string& path);

/// Evaluate the field components at one chart point.
Vec eval_field(const VectorFieldSpec& field, const Vec& x);

/// Chart Jacobian d B^i / d x^j (derivative index second), via jet seeding.
Mat eval_field_jacobian(const VectorFieldSpec& field, const Vec& x);

/// FNV-1a 64-bit content hash, hex-encoded; identifies input files in
/// reports.
std::string content_hash(std::string_view bytes);

}  // namespace finsler
