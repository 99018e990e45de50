#include "finsler/fields.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "finsler/errors.hpp"
#include "finsler/spaces.hpp"

namespace finsler {
namespace {

constexpr double kZeroFieldFloor = 1e-14;

void require_same_dim(const MetricSpec& metric, const VectorFieldSpec& field) {
  if (metric.dim != field.dim)
    throw SpecError("field '" + field.name + "' has dimension " +
                    std::to_string(field.dim) + " but metric '" + metric.name +
                    "' has dimension " + std::to_string(metric.dim));
}

void require_bundles(std::span<const TensorBundle> bundles) {
  if (bundles.empty()) throw SpecError("no support elements supplied");
}

/// M_ij = B^h C_hij.
Mat contract_first(const Tensor3& c, const Vec& b) {
  const int n = c.dim();
  Mat out = Mat::Zero(n, n);
  for (int h = 0; h < n; ++h)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(i, j) += b[h] * c(h, i, j);
  return out;
}

}  // namespace

std::string field_condition_name(FieldCondition c) {
  switch (c) {
    case FieldCondition::SemiConcurrent: return "semi_concurrent";
    case FieldCondition::ContraCC: return "contra_cc";
    case FieldCondition::Concurrent: return "concurrent";
  }
  return "unknown";
}

FieldCheckResult check_sc(const MetricSpec& metric,
                          const VectorFieldSpec& field,
                          std::span<const TensorBundle> bundles, double tol) {
  require_same_dim(metric, field);
  require_bundles(bundles);

  FieldCheckResult out;
  out.condition = FieldCondition::SemiConcurrent;
  out.tol = tol;
  bool any_nonzero = false;
  double b_sq_min = 0.0, b_sq_max = 0.0, b0_abs_min = 0.0, gap_min = 0.0;
  bool first = true;
  int id = 0;
  for (const auto& b : bundles) {
    const Vec bvec = eval_field(field, b.at.x);
    const double b_sq = bvec.dot(b.g * bvec);
    const double b_norm = std::sqrt(std::max(b_sq, 0.0));
    const double b0 = bvec.dot(b.g * b.at.y);
    const double f = b.at.F;
    const double gap = b_sq * f * f - b0 * b0;

    FieldSample s;
    s.id = id++;
    if (b_norm > kZeroFieldFloor) {
      any_nonzero = true;
      const Mat m = contract_first(b.C_lo, bvec);
      s.residual = m.norm() / ((1.0 + b.C_lo.frobenius()) * b_norm);
    }
    s.extra["B_sq"] = b_sq;
    s.extra["B_0"] = b0;
    s.extra["B2F2_minus_B02"] = gap;
    out.residual_rel = std::max(out.residual_rel, s.residual);
    b_sq_min = first ? b_sq : std::min(b_sq_min, b_sq);
    b_sq_max = first ? b_sq : std::max(b_sq_max, b_sq);
    b0_abs_min = first ? std::abs(b0) : std::min(b0_abs_min, std::abs(b0));
    gap_min = first ? gap : std::min(gap_min, gap);
    first = false;
    out.per_sample.push_back(std::move(s));
  }
  out.zero_field = !any_nonzero;
  out.holds = out.residual_rel <= tol;
  out.extra["B_sq_min"] = b_sq_min;
  out.extra["B_sq_max"] = b_sq_max;
  out.extra["B0_abs_min"] = b0_abs_min;
  out.extra["B2F2_minus_B02_min"] = gap_min;
  return out;
}

FieldCheckResult check_cc(const MetricSpec& metric,
                          const VectorFieldSpec& sigma,
                          std::span<const TensorBundle> bundles, double tol) {
  require_same_dim(metric, sigma);
  require_bundles(bundles);

  FieldCheckResult out;
  out.condition = FieldCondition::ContraCC;
  out.tol = tol;
  bool any_nonzero = false;
  double sigma0_abs_min = 0.0;
  bool first = true;
  int id = 0;
  for (const auto& b : bundles) {
    const Vec svec = eval_field(sigma, b.at.x);
    const double s_sq = svec.dot(b.g_inv * svec);
    const double s_norm = std::sqrt(std::max(s_sq, 0.0));
    const double sigma0 = svec.dot(b.at.y);

    FieldSample s;
    s.id = id++;
    if (s_norm > kZeroFieldFloor) {
      any_nonzero = true;
      const Mat m = contract_first(b.C_mixed, svec);
      s.residual = m.norm() / ((1.0 + b.C_mixed.frobenius()) * s_norm);
    }
    s.extra["sigma_sq"] = s_sq;
    s.extra["sigma_0"] = sigma0;
    out.residual_rel = std::max(out.residual_rel, s.residual);
    sigma0_abs_min =
        first ? std::abs(sigma0) : std::min(sigma0_abs_min, std::abs(sigma0));
    first = false;
    out.per_sample.push_back(std::move(s));
  }
  out.zero_field = !any_nonzero;
  out.holds = out.residual_rel <= tol;
  out.extra["sigma0_abs_min"] = sigma0_abs_min;
  return out;
}

FieldCheckResult check_concurrent(const MetricSpec& metric,
                                  const VectorFieldSpec& field,
                                  std::span<const TensorBundle> bundles,
                                  double tol) {
  require_same_dim(metric, field);
  require_bundles(bundles);
  const int n = metric.dim;

  FieldCheckResult out;
  out.condition = FieldCondition::Concurrent;
  out.tol = tol;
  bool any_nonzero = false;
  int id = 0;
  for (const auto& b : bundles) {
    const Vec bvec = eval_field(field, b.at.x);
    const Mat jac = eval_field_jacobian(field, b.at.x);
    const double b_norm = std::sqrt(std::max(bvec.dot(b.g * bvec), 0.0));
    if (b_norm > kZeroFieldFloor) any_nonzero = true;

    Mat hor = jac;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int h = 0; h < n; ++h) hor(i, j) += bvec[h] * b.Gamma(i, h, j);
    const double hor_scale = hor.norm();
    const double hor_res =
        (hor + Mat::Identity(n, n)).norm() / (1.0 + hor_scale);

    double vert_res = 0.0;
    if (b_norm > kZeroFieldFloor) {
      const Mat vert = contract_first(b.C_mixed, bvec);
      vert_res = vert.norm() / ((1.0 + b.C_mixed.frobenius()) * b_norm);
    }

    FieldSample s;
    s.id = id++;
    s.residual = std::max(hor_res, vert_res);
    s.extra["horizontal"] = hor_res;
    s.extra["vertical"] = vert_res;
    out.extra["horizontal_residual_max"] =
        std::max(out.extra["horizontal_residual_max"], hor_res);
    out.extra["vertical_residual_max"] =
        std::max(out.extra["vertical_residual_max"], vert_res);
    out.residual_rel = std::max(out.residual_rel, s.residual);
    out.per_sample.push_back(std::move(s));
  }
  out.zero_field = !any_nonzero;
  out.holds = out.residual_rel <= tol;
  return out;
}

NullspaceResult find_sc_field(const MetricSpec& metric, const Vec& x,
                              std::span<const Vec> y_samples,
                              double threshold) {
  if (y_samples.empty()) throw SpecError("no support directions supplied");
  const int n = metric.dim;
  const int pairs = n * (n + 1) / 2;

  std::vector<Mat> blocks;
  for (const auto& y : y_samples) {
    try {
      const DerivTable table = DerivTable::from_jet(metric, x, y);
      TensorBundle b;
      b.at.x = x;
      b.at.y = y;
      metric_block(table, b);
      cartan_block(table, b);
      Mat block(pairs, n);
      const double scale = 1.0 / (1.0 + b.C_lo.frobenius());
      int row = 0;
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j, ++row)
          for (int h = 0; h < n; ++h) block(row, h) = scale * b.C_lo(h, i, j);
      blocks.push_back(std::move(block));
    } catch (const EvalError&) {
    } catch (const MetricError&) {
    }
  }
  if (blocks.empty())
    throw SpecError(
        "no admissible support directions at the requested chart point");

  Mat stacked(pairs * int(blocks.size()), n);
  for (int s = 0; s < int(blocks.size()); ++s)
    stacked.middleRows(s * pairs, pairs) = blocks[std::size_t(s)];
  stacked /= std::sqrt(double(stacked.rows()));

  Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeFullV);
  const Vec sv = svd.singularValues();
  NullspaceResult out;
  out.y_samples_used = int(blocks.size());
  out.singular_values.assign(std::size_t(n), 0.0);
  for (int i = 0; i < int(sv.size()); ++i)
    out.singular_values[std::size_t(i)] = sv[i];
  out.scale = out.singular_values.empty() ? 0.0 : out.singular_values.front();
  out.threshold =
      std::max(threshold * out.scale, 1e-10 * (1.0 + out.scale));

  int null_count = 0;
  for (int i = n - 1; i >= 0; --i) {
    if (out.singular_values[std::size_t(i)] <= out.threshold)
      ++null_count;
    else
      break;
  }
  out.basis = svd.matrixV().rightCols(null_count);
  return out;
}

Lemma1Report lemma1_independence(const MetricSpec& metric,
                                 const VectorFieldSpec& field,
                                 std::span<const TensorBundle> bundles,
                                 double sc_tol, double margin_threshold,
                                 double riemannian_tol) {
  const FieldCheckResult sc = check_sc(metric, field, bundles, sc_tol);

  Lemma1Report rep;
  rep.precondition_sc = sc.holds && !sc.zero_field;
  rep.nonzero_field = !sc.zero_field;
  rep.sc_residual = sc.residual_rel;
  rep.margin_threshold = margin_threshold;

  double worst_riem = 0.0;
  bool first = true;
  for (const auto& b : bundles) {
    worst_riem = std::max(worst_riem, riemannian_residual(b));
    const Vec bvec = eval_field(field, b.at.x);
    double margin = 0.0;
    const double bn = bvec.norm();
    if (bn > kZeroFieldFloor) {
      Mat rows(2, metric.dim);
      rows.row(0) = b.at.y.transpose() / b.at.y.norm();
      rows.row(1) = bvec.transpose() / bn;
      const Eigen::JacobiSVD<Mat> svd(rows);
      margin = svd.singularValues().minCoeff();
    }
    rep.per_sample_margin.push_back(margin);
    rep.min_margin = first ? margin : std::min(rep.min_margin, margin);
    first = false;
  }
  rep.degenerate_metric = worst_riem <= riemannian_tol;
  rep.independent = rep.precondition_sc && rep.min_margin > margin_threshold;
  return rep;
}

}  // namespace finsler
