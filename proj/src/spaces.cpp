#include "finsler/spaces.hpp"

#include <algorithm>
#include <cmath>

#include "finsler/errors.hpp"

namespace finsler {
namespace {

double rel0(double misfit, double lhs_norm) {
  return misfit / (1.0 + lhs_norm);
}

/// h_ij v_k + h_jk v_i + h_ki v_j.
Tensor3 cyc_hv(const Mat& h, const Vec& v) {
  const int n = int(h.rows());
  Tensor3 out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        out(i, j, k) = h(i, j) * v[k] + h(j, k) * v[i] + h(k, i) * v[j];
  return out;
}

/// c_i c_j v_k + c_j c_k v_i + c_k c_i v_j.
Tensor3 cyc_ccv(const Vec& c, const Vec& v) {
  const int n = int(c.size());
  Tensor3 out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        out(i, j, k) =
            c[i] * c[j] * v[k] + c[j] * c[k] * v[i] + c[k] * c[i] * v[j];
  return out;
}

double frob_diff(const Tensor3& a, const Tensor3& b) {
  const int n = a.dim();
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double d = a(i, j, k) - b(i, j, k);
        acc += d * d;
      }
  return std::sqrt(acc);
}

double dot3(const Tensor3& a, const Tensor3& b) {
  const int n = a.dim();
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) acc += a(i, j, k) * b(i, j, k);
  return acc;
}

double contract3(const Tensor3& c, const Vec& u, const Vec& v, const Vec& w) {
  const int n = c.dim();
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) acc += c(i, j, k) * u[i] * v[j] * w[k];
  return acc;
}

void require_bundles(std::span<const TensorBundle> bundles) {
  if (bundles.empty()) throw SpecError("no support elements supplied");
}

void require_dim3plus(std::span<const TensorBundle> bundles,
                      const char* what) {
  if (int(bundles.front().at.x.size()) < 3)
    throw SpecError(std::string(what) + " requires dimension >= 3");
}

bool torsion_degenerate(std::span<const TensorBundle> bundles,
                        double riemannian_tol) {
  double worst = 0.0;
  for (const auto& b : bundles)
    worst = std::max(worst, riemannian_residual(b));
  return worst <= riemannian_tol;
}

ConditionVerdict make_verdict(SpaceCondition c, double residual, double tol,
                              bool degenerate, int used) {
  ConditionVerdict v;
  v.condition = c;
  v.residual_rel = residual;
  v.tol = tol;
  v.degenerate = degenerate;
  v.holds = degenerate || residual <= tol;
  v.samples_used = used;
  return v;
}

}  // namespace

std::string condition_name(SpaceCondition c) {
  switch (c) {
    case SpaceCondition::Riemannian: return "riemannian";
    case SpaceCondition::CReducible: return "c_reducible";
    case SpaceCondition::SemiCReducible: return "semi_c_reducible";
    case SpaceCondition::QuasiCReducible: return "quasi_c_reducible";
    case SpaceCondition::C3Like: return "c3_like";
    case SpaceCondition::ChRecurrent: return "ch_recurrent";
    case SpaceCondition::P2Like: return "p2_like";
    case SpaceCondition::PReducible: return "p_reducible";
    case SpaceCondition::Landsberg: return "landsberg";
    case SpaceCondition::TCondition: return "t_condition";
  }
  return "unknown";
}

double ToleranceSet::get(const std::string& name) const {
  const auto it = values.find(name);
  return it == values.end() ? 1e-6 : it->second;
}

ToleranceSet resolve_tolerances(
    const MetricSpec& spec, const std::map<std::string, double>& overrides) {
  ToleranceSet out;
  out.values = spec.tolerances;
  for (const auto& [k, v] : overrides) out.values[k] = v;
  return out;
}

double riemannian_residual(const TensorBundle& b) {
  const double c = b.C_lo.frobenius();
  return rel0(c, c);
}

double c_reducible_residual(const TensorBundle& b) {
  const int n = int(b.at.x.size());
  Tensor3 model = cyc_hv(b.h, b.C_mean);
  const double s = 1.0 / double(n + 1);
  const int d = model.dim();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) model(i, j, k) *= s;
  return rel0(frob_diff(b.C_lo, model), b.C_lo.frobenius());
}

double quasi_c_reducible_residual(const TensorBundle& b) {
  const Tensor3 model = cyc_hv(b.h, b.C_mean);
  return rel0(frob_diff(b.C_lo, model), b.C_lo.frobenius());
}

double p_reducible_residual(const TensorBundle& b) {
  const int n = int(b.at.x.size());
  Tensor3 model = cyc_hv(b.h, b.P_mean);
  const double s = 1.0 / double(n + 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) model(i, j, k) *= s;
  return rel0(frob_diff(b.P_lo, model), b.P_lo.frobenius());
}

double landsberg_residual(const TensorBundle& b) {
  const double p = b.P_lo.frobenius();
  return rel0(p, p);
}

double t_condition_residual(const TensorBundle& b) {
  const double t = b.T.frobenius();
  return rel0(t, t);
}

SemiCFit semi_c_reducible_fit_at(const TensorBundle& b) {
  const int n = int(b.at.x.size());
  Tensor3 d_part(n);
  if (b.C_norm2 > 1e-300) {
    const double inv = 1.0 / b.C_norm2;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          d_part(i, j, k) = b.C_mean[i] * b.C_mean[j] * b.C_mean[k] * inv;
  }
  Tensor3 s_part = cyc_hv(b.h, b.C_mean);
  const double s = 1.0 / double(n + 1);
  // Impose r + t = 1 by eliminating t: C - D = r (S/(n+1) - D).
  Tensor3 basis(n), rhs(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        basis(i, j, k) = s_part(i, j, k) * s - d_part(i, j, k);
        rhs(i, j, k) = b.C_lo(i, j, k) - d_part(i, j, k);
      }
  const double bb = dot3(basis, basis);
  double r = 1.0;
  if (bb > 1e-300) r = dot3(basis, rhs) / bb;
  double mis = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double d = rhs(i, j, k) - r * basis(i, j, k);
        mis += d * d;
      }
  SemiCFit fit;
  fit.r = r;
  fit.t = 1.0 - r;
  fit.residual_rel = rel0(std::sqrt(mis), b.C_lo.frobenius());
  return fit;
}

C3Fit c3_like_fit_at(const TensorBundle& b, bool force_b_zero) {
  const int n = int(b.at.x.size());
  // Orthonormal basis of the hyperplane v . y = 0, so the indicatory
  // constraints a . y = b . y = 0 hold by construction.
  Mat ycol(n, 1);
  ycol.col(0) = b.at.y;
  const Mat full_q = Eigen::HouseholderQR<Mat>(ycol).householderQ();
  const Mat q = full_q.rightCols(n - 1);

  const int na = n - 1;
  const int cols = force_b_zero ? na : 2 * na;
  Mat design(n * n * n, cols);
  Vec target(n * n * n);
  std::vector<Tensor3> cols_h, cols_c;
  for (int p = 0; p < na; ++p) {
    cols_h.push_back(cyc_hv(b.h, q.col(p)));
    if (!force_b_zero) cols_c.push_back(cyc_ccv(b.C_mean, q.col(p)));
  }
  int row = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k, ++row) {
        target[row] = b.C_lo(i, j, k);
        for (int p = 0; p < na; ++p) {
          design(row, p) = cols_h[std::size_t(p)](i, j, k);
          if (!force_b_zero)
            design(row, na + p) = cols_c[std::size_t(p)](i, j, k);
        }
      }
  const Vec z = design.colPivHouseholderQr().solve(target);
  C3Fit fit;
  fit.a = q * z.head(na);
  fit.b = force_b_zero ? Vec(Vec::Zero(n)) : Vec(q * z.tail(na));
  fit.residual_rel =
      rel0((design * z - target).norm(), b.C_lo.frobenius());
  return fit;
}

CovectorFit ch_recurrent_fit_at(const TensorBundle& b) {
  const int n = int(b.at.x.size());
  const double c_sq = b.C_lo.frobenius() * b.C_lo.frobenius();
  CovectorFit fit;
  fit.K = Vec::Zero(n);
  if (c_sq > 1e-300) {
    for (int h = 0; h < n; ++h) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            acc += b.C_lo(i, j, k) * b.C_hder(i, j, k, h);
      fit.K[h] = acc / c_sq;
    }
  }
  double mis = 0.0;
  for (int h = 0; h < n; ++h)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const double d = b.C_hder(i, j, k, h) - b.C_lo(i, j, k) * fit.K[h];
          mis += d * d;
        }
  fit.residual_rel = rel0(std::sqrt(mis), b.C_hder.frobenius());
  return fit;
}

CovectorFit p2_like_fit_at(const TensorBundle& b) {
  const int n = int(b.at.x.size());
  CovectorFit fit;
  fit.K = Vec::Zero(n);
  const double c_norm = b.C_lo.frobenius();
  const double p_norm = b.P.frobenius();
  if (c_norm * c_norm > 1e-300) {
    Mat design(n * n * n * n, n);
    Vec target(n * n * n * n);
    int row = 0;
    for (int h = 0; h < n; ++h)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k, ++row) {
            target[row] = b.P(h, i, j, k);
            for (int m = 0; m < n; ++m) {
              double v = 0.0;
              if (m == h) v += b.C_lo(i, j, k);
              if (m == i) v -= b.C_lo(k, j, h);
              design(row, m) = v;
            }
          }
    fit.K = design.colPivHouseholderQr().solve(target);
    fit.residual_rel = rel0((design * fit.K - target).norm(), p_norm);
  } else {
    fit.residual_rel = rel0(p_norm, p_norm);
  }
  return fit;
}

MoorFrame moor_frame_3d(const TensorBundle& b) {
  const int n = int(b.at.x.size());
  if (n != 3) throw SpecError("torsion frame requires a 3-dimensional metric");
  if (b.C_norm2 <= 1e-16)
    throw DegenerateError(
        "mean Cartan torsion vanishes; frame direction undefined");

  MoorFrame f;
  const double F = b.at.F;
  f.l_up = b.at.y / F;
  f.l = b.l_lo;
  f.m = b.C_mean / std::sqrt(b.C_norm2);
  f.m_up = b.g_inv * f.m;

  // Complete the frame: g-orthogonalize the best-conditioned axis vector
  // against l and m, then fix the orientation.
  Vec best;
  double best_norm2 = -1.0;
  for (int s = 0; s < 3; ++s) {
    Vec v = Vec::Zero(3);
    v[s] = 1.0;
    v -= (v.dot(b.g * f.l_up)) * f.l_up;
    v -= (v.dot(b.g * f.m_up)) * f.m_up;
    const double norm2 = v.dot(b.g * v);
    if (norm2 > best_norm2) {
      best_norm2 = norm2;
      best = v;
    }
  }
  if (best_norm2 <= 0.0)
    throw DegenerateError("support frame is numerically collapsed");
  f.n_up = best / std::sqrt(best_norm2);
  Mat det3(3, 3);
  det3.col(0) = f.l_up;
  det3.col(1) = f.m_up;
  det3.col(2) = f.n_up;
  if (det3.determinant() < 0.0) f.n_up = -f.n_up;
  f.nvec = b.g * f.n_up;

  f.H = F * contract3(b.C_lo, f.m_up, f.m_up, f.m_up);
  f.I = F * contract3(b.C_lo, f.m_up, f.n_up, f.n_up);
  f.J = F * contract3(b.C_lo, f.n_up, f.n_up, f.n_up);
  return f;
}

Tensor3 moor_reconstruct(const MoorFrame& f) {
  const int n = 3;
  Tensor3 out(n);
  const Vec& m = f.m;
  const Vec& w = f.nvec;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double mmm = m[i] * m[j] * m[k];
        const double mmn =
            m[i] * m[j] * w[k] + m[i] * w[j] * m[k] + w[i] * m[j] * m[k];
        const double mnn =
            m[i] * w[j] * w[k] + w[i] * m[j] * w[k] + w[i] * w[j] * m[k];
        const double nnn = w[i] * w[j] * w[k];
        out(i, j, k) = f.H * mmm - f.J * mmn + f.I * mnn + f.J * nnn;
      }
  return out;
}

ConditionVerdict is_riemannian(std::span<const TensorBundle> bundles,
                               double tol) {
  require_bundles(bundles);
  double worst = 0.0;
  for (const auto& b : bundles)
    worst = std::max(worst, riemannian_residual(b));
  ConditionVerdict v = make_verdict(SpaceCondition::Riemannian, worst, tol,
                                    false, int(bundles.size()));
  return v;
}

ConditionVerdict check_c_reducible(std::span<const TensorBundle> bundles,
                                   double tol, double riemannian_tol) {
  require_bundles(bundles);
  require_dim3plus(bundles, "C-reducible test");
  const bool deg = torsion_degenerate(bundles, riemannian_tol);
  double worst = 0.0;
  for (const auto& b : bundles)
    worst = std::max(worst, c_reducible_residual(b));
  return make_verdict(SpaceCondition::CReducible, worst, tol, deg,
                      int(bundles.size()));
}

ConditionVerdict fit_semi_c_reducible(std::span<const TensorBundle> bundles,
                                      double tol, double riemannian_tol) {
  require_bundles(bundles);
  require_dim3plus(bundles, "semi-C-reducible fit");
  const bool deg = torsion_degenerate(bundles, riemannian_tol);
  ConditionVerdict v;
  if (deg) {
    v = make_verdict(SpaceCondition::SemiCReducible, 0.0, tol, true,
                     int(bundles.size()));
    return v;
  }
  double worst = 0.0;
  double r_sum = 0.0, r_min = 0.0, r_max = 0.0;
  bool first = true;
  for (const auto& b : bundles) {
    const SemiCFit fit = semi_c_reducible_fit_at(b);
    worst = std::max(worst, fit.residual_rel);
    r_sum += fit.r;
    r_min = first ? fit.r : std::min(r_min, fit.r);
    r_max = first ? fit.r : std::max(r_max, fit.r);
    first = false;
  }
  v = make_verdict(SpaceCondition::SemiCReducible, worst, tol, false,
                   int(bundles.size()));
  const double r_mean = r_sum / double(bundles.size());
  v.fitted["r"] = r_mean;
  v.fitted["t"] = 1.0 - r_mean;
  v.fitted["r_min"] = r_min;
  v.fitted["r_max"] = r_max;
  return v;
}

ConditionVerdict check_quasi_c_reducible(std::span<const TensorBundle> bundles,
                                         double tol, double riemannian_tol) {
  require_bundles(bundles);
  require_dim3plus(bundles, "quasi-C-reducible test");
  const bool deg = torsion_degenerate(bundles, riemannian_tol);
  double worst = 0.0;
  for (const auto& b : bundles)
    worst = std::max(worst, quasi_c_reducible_residual(b));
  ConditionVerdict v = make_verdict(SpaceCondition::QuasiCReducible, worst,
                                    tol, deg, int(bundles.size()));
  v.dim_warning = int(bundles.front().at.x.size()) == 3;
  return v;
}

ConditionVerdict fit_c3_like(std::span<const TensorBundle> bundles, double tol,
                             double riemannian_tol) {
  require_bundles(bundles);
  require_dim3plus(bundles, "C3-like fit");
  const int n = int(bundles.front().at.x.size());
  const bool deg = torsion_degenerate(bundles, riemannian_tol);

  double worst = 0.0;
  double a_norm_sum = 0.0, b_norm_sum = 0.0;
  if (!deg) {
    for (const auto& b : bundles) {
      const C3Fit fit = c3_like_fit_at(b);
      worst = std::max(worst, fit.residual_rel);
      a_norm_sum += fit.a.norm();
      b_norm_sum += fit.b.norm();
    }
  }
  ConditionVerdict v = make_verdict(SpaceCondition::C3Like, worst, tol, deg,
                                    int(bundles.size()));
  if (!deg) {
    v.fitted["a_norm"] = a_norm_sum / double(bundles.size());
    v.fitted["b_norm"] = b_norm_sum / double(bundles.size());
  }
  if (n == 3) {
    // The form is guaranteed in dimension 3 (the frame decomposition always
    // supplies such a and b), so the verdict is vacuous there.
    v.dim_warning = true;
    v.degenerate = true;
    v.holds = true;
    if (!deg) {
      double h_sum = 0.0, i_sum = 0.0, j_sum = 0.0;
      double am = 0.0, bm = 0.0;
      int used = 0;
      for (const auto& b : bundles) {
        if (b.C_norm2 <= 1e-16) continue;
        const MoorFrame f = moor_frame_3d(b);
        const double L = b.at.F;
        const Vec a_vec = (f.I * f.m + (f.J / 3.0) * f.nvec) / L;
        const Vec b_vec = ((f.H / 3.0 - f.I) * f.m + (4.0 * f.J / 3.0) *
                           f.nvec) / (L * b.C_norm2);
        h_sum += f.H;
        i_sum += f.I;
        j_sum += f.J;
        am += a_vec.norm();
        bm += b_vec.norm();
        ++used;
      }
      if (used > 0) {
        v.fitted["H"] = h_sum / used;
        v.fitted["I"] = i_sum / used;
        v.fitted["J"] = j_sum / used;
        v.fitted["a_norm_frame"] = am / used;
        v.fitted["b_norm_frame"] = bm / used;
      }
    }
  }
  return v;
}

ConditionVerdict check_ch_recurrent(std::span<const TensorBundle> bundles,
                                    double tol, double riemannian_tol) {
  require_bundles(bundles);
  const bool deg = torsion_degenerate(bundles, riemannian_tol);
  double worst = 0.0;
  double k_norm = 0.0;
  if (!deg) {
    for (const auto& b : bundles) {
      const CovectorFit fit = ch_recurrent_fit_at(b);
      worst = std::max(worst, fit.residual_rel);
      k_norm = std::max(k_norm, fit.K.norm());
    }
  }
  ConditionVerdict v = make_verdict(SpaceCondition::ChRecurrent, worst, tol,
                                    deg, int(bundles.size()));
  if (!deg) v.fitted["K_norm"] = k_norm;
  return v;
}

ConditionVerdict check_p2_like(std::span<const TensorBundle> bundles,
                               double tol, double riemannian_tol) {
  require_bundles(bundles);
  const bool deg = torsion_degenerate(bundles, riemannian_tol);
  double worst = 0.0;
  double k_norm = 0.0;
  if (!deg) {
    for (const auto& b : bundles) {
      const CovectorFit fit = p2_like_fit_at(b);
      worst = std::max(worst, fit.residual_rel);
      k_norm = std::max(k_norm, fit.K.norm());
    }
  }
  ConditionVerdict v = make_verdict(SpaceCondition::P2Like, worst, tol, deg,
                                    int(bundles.size()));
  if (!deg) v.fitted["K_norm"] = k_norm;
  return v;
}

std::pair<ConditionVerdict, ConditionVerdict> check_p_reducible_landsberg(
    std::span<const TensorBundle> bundles, double tol_p, double tol_landsberg,
    double riemannian_tol) {
  require_bundles(bundles);
  const bool deg = torsion_degenerate(bundles, riemannian_tol);
  double worst_p = 0.0, worst_l = 0.0;
  for (const auto& b : bundles) {
    worst_p = std::max(worst_p, p_reducible_residual(b));
    worst_l = std::max(worst_l, landsberg_residual(b));
  }
  // P-reducible is additionally vacuous when the horizontal derivative of C
  // along the support direction vanishes: both sides of its equation are 0.
  const bool p_deg = deg || worst_l <= riemannian_tol;
  ConditionVerdict p = make_verdict(SpaceCondition::PReducible, worst_p, tol_p,
                                    p_deg, int(bundles.size()));
  ConditionVerdict l = make_verdict(SpaceCondition::Landsberg, worst_l,
                                    tol_landsberg, deg, int(bundles.size()));
  return {p, l};
}

ConditionVerdict check_t_condition(std::span<const TensorBundle> bundles,
                                   double tol, double riemannian_tol) {
  require_bundles(bundles);
  const bool deg = torsion_degenerate(bundles, riemannian_tol);
  double worst = 0.0;
  for (const auto& b : bundles)
    worst = std::max(worst, t_condition_residual(b));
  return make_verdict(SpaceCondition::TCondition, worst, tol, deg,
                      int(bundles.size()));
}

std::vector<ConditionVerdict> classify_all(
    std::span<const TensorBundle> bundles, const ToleranceSet& tols) {
  require_bundles(bundles);
  const int n = int(bundles.front().at.x.size());
  const double rt = tols.get("riemannian");
  std::vector<ConditionVerdict> out;
  out.push_back(is_riemannian(bundles, rt));
  const bool deg = out.front().residual_rel <= rt;

  if (n >= 3) {
    out.push_back(check_c_reducible(bundles, tols.get("c_reducible"), rt));
    out.push_back(
        fit_semi_c_reducible(bundles, tols.get("semi_c_reducible"), rt));
    out.push_back(
        check_quasi_c_reducible(bundles, tols.get("quasi_c_reducible"), rt));
    out.push_back(fit_c3_like(bundles, tols.get("c3_like"), rt));
  } else if (deg) {
    // The reducibility conditions are only defined from dimension 3 up, but
    // they hold vacuously whenever the torsion vanishes; report that rather
    // than omitting them on torsion-free 2-charts.
    const SpaceCondition kinds[] = {
        SpaceCondition::CReducible, SpaceCondition::SemiCReducible,
        SpaceCondition::QuasiCReducible, SpaceCondition::C3Like};
    for (const auto kind : kinds) {
      ConditionVerdict v = make_verdict(kind, 0.0, tols.get(condition_name(kind)),
                                        true, int(bundles.size()));
      v.dim_warning = true;
      out.push_back(v);
    }
  }

  out.push_back(check_ch_recurrent(bundles, tols.get("ch_recurrent"), rt));
  out.push_back(check_p2_like(bundles, tols.get("p2_like"), rt));
  auto [p, l] = check_p_reducible_landsberg(
      bundles, tols.get("p_reducible"), tols.get("landsberg"), rt);
  out.push_back(p);
  out.push_back(l);
  out.push_back(check_t_condition(bundles, tols.get("t_condition"), rt));
  return out;
}

}  // namespace finsler
