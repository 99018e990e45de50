#include "finsler/verify.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "finsler/errors.hpp"

namespace finsler {
namespace {

constexpr double kZeroFieldFloor = 1e-14;
constexpr double kParallelFloor = 1e-12;

double rel0(double v) { return v / (1.0 + v); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

double max_riemannian(std::span<const TensorBundle> bundles) {
  double worst = 0.0;
  for (const auto& b : bundles)
    worst = std::max(worst, riemannian_residual(b));
  return worst;
}

double max_landsberg(std::span<const TensorBundle> bundles) {
  double worst = 0.0;
  for (const auto& b : bundles) worst = std::max(worst, landsberg_residual(b));
  return worst;
}

double max_t_condition(std::span<const TensorBundle> bundles) {
  double worst = 0.0;
  for (const auto& b : bundles)
    worst = std::max(worst, t_condition_residual(b));
  return worst;
}

double max_mean_t(std::span<const TensorBundle> bundles) {
  double worst = 0.0;
  for (const auto& b : bundles) worst = std::max(worst, rel0(b.T2.norm()));
  return worst;
}

/// Field values per support element plus the aggregates the side conditions
/// need.
struct FieldData {
  std::vector<Vec> value;
  double norm_g_min = std::numeric_limits<double>::infinity();
  bool zero = true;
};

FieldData field_on_bundles(const VectorFieldSpec& field,
                           std::span<const TensorBundle> bundles) {
  FieldData d;
  for (const auto& b : bundles) {
    Vec v = eval_field(field, b.at.x);
    const double norm_g = std::sqrt(std::max(v.dot(b.g * v), 0.0));
    d.norm_g_min = std::min(d.norm_g_min, norm_g);
    if (norm_g > kZeroFieldFloor) d.zero = false;
    d.value.push_back(std::move(v));
  }
  return d;
}

/// Shared report assembly: hypotheses gate to "vacuous", side conditions
/// below margin gate to "vacuous", and only a failing conclusion on top of
/// clean hypotheses and sides yields "violated".
class Assembler {
 public:
  Assembler(const VerifyContext& ctx, TheoremId id, std::string title)
      : ctx_(ctx) {
    rep_.id = id;
    rep_.title = std::move(title);
    rep_.samples_used = int(ctx.bundles.size());
  }

  void hypothesis(const std::string& name, double value) {
    rep_.hypothesis_residuals.push_back({name, value});
    const double tol = ctx_.tols.get(name);
    if (!(value <= tol)) {
      hyp_ok_ = false;
      rep_.notes.push_back("hypothesis not satisfied: " + name +
                           " (residual " + fmt(value) + " > tol " + fmt(tol) +
                           ")");
    }
  }

  void side(const std::string& name, double value) {
    rep_.side_conditions.push_back({name, value});
    if (std::abs(value) < ctx_.side_margin) {
      sides_ok_ = false;
      rep_.notes.push_back("side condition indeterminate: " + name + " = " +
                           fmt(value) + " is below margin " +
                           fmt(ctx_.side_margin));
    }
  }

  void step(const std::string& name, double value) {
    rep_.step_residuals.push_back({name, value});
  }

  void note(const std::string& text) { rep_.notes.push_back(text); }

  /// Marks the run not evaluable (undefined notion, missing input), which
  /// can only soften the verdict, never harden it.
  void not_evaluable(const std::string& why) {
    hyp_ok_ = false;
    rep_.notes.push_back(why);
  }

  TheoremReport conclude(const std::string& name, double value, double tol) {
    rep_.conclusion_name = name;
    rep_.conclusion_residual = value;
    if (!hyp_ok_)
      rep_.verdict = TheoremVerdict::Vacuous;
    else if (!sides_ok_)
      rep_.verdict = TheoremVerdict::Vacuous;
    else if (value <= tol)
      rep_.verdict = TheoremVerdict::Consistent;
    else
      rep_.verdict = TheoremVerdict::Violated;
    return std::move(rep_);
  }

 private:
  const VerifyContext& ctx_;
  TheoremReport rep_;
  bool hyp_ok_ = true;
  bool sides_ok_ = true;
};

void require_context(const VerifyContext& ctx) {
  if (ctx.metric == nullptr) throw SpecError("verification requires a metric");
  if (ctx.bundles.empty()) throw SpecError("no support elements supplied");
}

bool metric_degenerate(const VerifyContext& ctx) {
  return max_riemannian(ctx.bundles) <= ctx.tols.get("riemannian");
}

/// Adds the semi-concurrent hypothesis and the nonzero-field side condition;
/// returns the evaluated field, or nothing when no field was supplied.
std::optional<FieldData> sc_hypothesis(Assembler& a, const VerifyContext& ctx) {
  if (ctx.field == nullptr) {
    a.not_evaluable(
        "hypothesis not evaluable: semi_concurrent (no vector field "
        "supplied, or none exists at the sampled points)");
    return std::nullopt;
  }
  const FieldCheckResult sc = check_sc(*ctx.metric, *ctx.field, ctx.bundles,
                                       ctx.tols.get("semi_concurrent"));
  a.hypothesis("semi_concurrent", sc.residual_rel);
  FieldData d = field_on_bundles(*ctx.field, ctx.bundles);
  a.side("field_norm_min", d.norm_g_min);
  return d;
}

void note_degenerate(Assembler& a) {
  a.note(
      "torsion vanishes identically on the samples; the implication holds "
      "trivially");
}

// --- T1 ------------------------------------------------------------------

TheoremReport t1(const VerifyContext& ctx) {
  Assembler a(ctx, TheoremId::T1,
              "quasi-reducible torsion with a semi-concurrent field forces "
              "vanishing torsion");
  const bool deg = metric_degenerate(ctx);
  const int n = ctx.metric->dim;

  double quasi = 0.0;
  for (const auto& b : ctx.bundles)
    quasi = std::max(quasi, quasi_c_reducible_residual(b));
  a.hypothesis("quasi_c_reducible", quasi);
  if (!deg && n < 3)
    a.not_evaluable(
        "hypothesis not evaluable: quasi_c_reducible is defined only for "
        "dimension >= 3");

  if (const auto field = sc_hypothesis(a, ctx)) {
    double worst = 0.0;
    for (std::size_t s = 0; s < ctx.bundles.size(); ++s) {
      const TensorBundle& b = ctx.bundles[s];
      const Vec& bv = field->value[s];
      const double hbb = bv.dot(b.h * bv);
      worst = std::max(worst, (hbb * b.C_mean).norm());
    }
    a.step("hBB_times_torsion_mean", rel0(worst));
  }

  if (deg) note_degenerate(a);
  return a.conclude("riemannian", max_riemannian(ctx.bundles),
                    ctx.tols.get("riemannian"));
}

// --- T2 ------------------------------------------------------------------

TheoremReport t2(const VerifyContext& ctx) {
  Assembler a(ctx, TheoremId::T2,
              "three-main-scalar torsion form with a semi-concurrent field "
              "forces vanishing torsion when the third main scalar vanishes");
  const bool deg = metric_degenerate(ctx);
  const int n = ctx.metric->dim;

  double c3 = 0.0;
  if (!deg)
    for (const auto& b : ctx.bundles)
      c3 = std::max(c3, c3_like_fit_at(b).residual_rel);
  a.hypothesis("c3_like", c3);
  if (!deg && n < 3)
    a.not_evaluable(
        "hypothesis not evaluable: the c3_like form is defined only for "
        "dimension >= 3");

  std::vector<std::optional<MoorFrame>> frames(ctx.bundles.size());
  if (!deg && n == 3) {
    double j_worst = 0.0;
    int framed = 0;
    for (std::size_t s = 0; s < ctx.bundles.size(); ++s) {
      try {
        frames[s] = moor_frame_3d(ctx.bundles[s]);
        j_worst = std::max(j_worst, std::abs(frames[s]->J));
        ++framed;
      } catch (const DegenerateError&) {
      }
    }
    if (framed > 0)
      a.hypothesis("main_scalar_J", rel0(j_worst));
    else
      a.not_evaluable(
          "hypothesis not evaluable: main_scalar_J (the torsion frame is "
          "undefined where the mean torsion vanishes)");
  } else if (!deg) {
    a.not_evaluable(
        "hypothesis not evaluable: main_scalar_J requires the 3-dimensional "
        "torsion frame");
  }

  if (const auto field = sc_hypothesis(a, ctx)) {
    if (!deg && n == 3) {
      double e31 = 0.0, e1 = 0.0;
      for (std::size_t s = 0; s < ctx.bundles.size(); ++s) {
        if (!frames[s]) continue;
        const TensorBundle& b = ctx.bundles[s];
        const MoorFrame& f = *frames[s];
        const Vec& bv = field->value[s];
        const double F = b.at.F;
        const Vec a_frame = (f.I * f.m + (f.J / 3.0) * f.nvec) / F;
        const double hbb = bv.dot(b.h * bv);
        const Vec hb = b.h * bv;
        const Vec v1 = hbb * a_frame + 2.0 * a_frame.dot(bv) * hb;
        e31 = std::max(e31, v1.norm());
        const double b_sq = bv.dot(b.g * bv);
        const double c_scalar = std::sqrt(b.C_norm2);
        const Vec v2 = (b_sq * f.I / (F * c_scalar)) * b.C_mean +
                       (b_sq * f.J / F) * f.nvec;
        e1 = std::max(e1, v2.norm());
      }
      a.step("sc_double_contraction_of_form", rel0(e31));
      a.step("frame_reduction_combination", rel0(e1));
      a.note(
          "the two step residuals are reported independently; the reduction "
          "from the first to the second drops mean-direction terms and is "
          "not asserted");
    }
  }

  if (deg) note_degenerate(a);
  return a.conclude("riemannian", max_riemannian(ctx.bundles),
                    ctx.tols.get("riemannian"));
}

// --- T3 / T4 (shared contraction steps) ------------------------------------

void recurrence_steps(Assembler& a, const VerifyContext& ctx,
                      const FieldData& field) {
  const int n = ctx.metric->dim;
  double step1 = 0.0, step2 = 0.0;
  for (std::size_t s = 0; s < ctx.bundles.size(); ++s) {
    const TensorBundle& b = ctx.bundles[s];
    const Vec& bv = field.value[s];
    double acc1 = 0.0, acc2 = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double hv = 0.0, hd = 0.0;
          for (int h = 0; h < n; ++h) {
            hv += bv[h] * b.P(h, i, j, k);
            hd += bv[h] * b.C_hder(i, j, k, h);
          }
          acc1 += (hv - hd) * (hv - hd);
          const double d2 = hd + b.C_lo(i, j, k);
          acc2 += d2 * d2;
        }
    step1 = std::max(step1, std::sqrt(acc1));
    step2 = std::max(step2, std::sqrt(acc2));
  }
  a.step("hv_contraction_vs_hderiv_contraction", rel0(step1));
  a.step("hderiv_contraction_plus_torsion", rel0(step2));
  a.note(
      "step 'hderiv_contraction_plus_torsion' presupposes a concurrent-type "
      "field; its residual is reported, not asserted");
}

TheoremReport t3(const VerifyContext& ctx) {
  Assembler a(ctx, TheoremId::T3,
              "recurrent horizontal torsion derivative with a semi-concurrent "
              "field forces vanishing torsion");
  const bool deg = metric_degenerate(ctx);

  double rec = 0.0;
  std::vector<Vec> K(ctx.bundles.size());
  for (std::size_t s = 0; s < ctx.bundles.size(); ++s) {
    const CovectorFit fit = ch_recurrent_fit_at(ctx.bundles[s]);
    rec = std::max(rec, fit.residual_rel);
    K[s] = fit.K;
  }
  a.hypothesis("ch_recurrent", rec);

  if (const auto field = sc_hypothesis(a, ctx)) {
    double one_plus = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < ctx.bundles.size(); ++s)
      one_plus =
          std::min(one_plus, std::abs(1.0 + field->value[s].dot(K[s])));
    a.side("one_plus_BK", one_plus);
    recurrence_steps(a, ctx, *field);
  }

  if (deg) note_degenerate(a);
  return a.conclude("riemannian", max_riemannian(ctx.bundles),
                    ctx.tols.get("riemannian"));
}

TheoremReport t4(const VerifyContext& ctx) {
  Assembler a(ctx, TheoremId::T4,
              "two-term hv-curvature form with a semi-concurrent field forces "
              "vanishing torsion");
  const bool deg = metric_degenerate(ctx);

  double p2 = 0.0;
  std::vector<Vec> K(ctx.bundles.size());
  for (std::size_t s = 0; s < ctx.bundles.size(); ++s) {
    const CovectorFit fit = p2_like_fit_at(ctx.bundles[s]);
    p2 = std::max(p2, fit.residual_rel);
    K[s] = fit.K;
  }
  a.hypothesis("p2_like", p2);

  if (const auto field = sc_hypothesis(a, ctx)) {
    double one_plus = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < ctx.bundles.size(); ++s)
      one_plus =
          std::min(one_plus, std::abs(1.0 + field->value[s].dot(K[s])));
    a.side("one_plus_BK", one_plus);
    recurrence_steps(a, ctx, *field);
  }

  if (deg) note_degenerate(a);
  return a.conclude("riemannian", max_riemannian(ctx.bundles),
                    ctx.tols.get("riemannian"));
}

// --- T5 ------------------------------------------------------------------

TheoremReport t5(const VerifyContext& ctx) {
  Assembler a(ctx, TheoremId::T5,
              "reducible hv-torsion with a semi-concurrent field forces a "
              "Landsberg space");
  const bool deg = metric_degenerate(ctx);
  const int n = ctx.metric->dim;

  double pred = 0.0;
  for (const auto& b : ctx.bundles)
    pred = std::max(pred, p_reducible_residual(b));
  a.hypothesis("p_reducible", pred);

  if (const auto field = sc_hypothesis(a, ctx)) {
    double gap_rel = std::numeric_limits<double>::infinity();
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t s = 0; s < ctx.bundles.size(); ++s) {
      const TensorBundle& b = ctx.bundles[s];
      const Vec& bv = field->value[s];
      const double b_sq = bv.dot(b.g * bv);
      const double b0 = bv.dot(b.g * b.at.y);
      const double f2 = b.at.F * b.at.F;
      const double gap = b_sq * f2 - b0 * b0;
      gap_rel = std::min(gap_rel, b_sq * f2 > 0.0 ? gap / (b_sq * f2) : 0.0);

      Vec v1 = Vec::Zero(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) v1[k] += bv[i] * bv[j] * b.P_lo(i, j, k);
      s1 = std::max(s1, v1.norm());
      const double hbb = bv.dot(b.h * bv);
      s2 = std::max(s2, (hbb * b.C_mean).norm());
      s3 = std::max(s3, (gap * b.C_mean).norm());
    }
    a.side("B2F2_minus_B02_rel", gap_rel);
    a.step("sc_double_contraction_of_hv_torsion", rel0(s1));
    a.step("hBB_times_torsion_mean", rel0(s2));
    a.step("norm_gap_times_torsion_mean", rel0(s3));
  }

  if (deg) note_degenerate(a);
  return a.conclude("landsberg", max_landsberg(ctx.bundles),
                    ctx.tols.get("landsberg"));
}

// --- T6 / C1 ----------------------------------------------------------------

TheoremReport equivalence_theorem(const VerifyContext& ctx, TheoremId id,
                                  const std::string& title,
                                  const std::string& tensor_name,
                                  double tensor_residual) {
  TheoremReport rep;
  rep.id = id;
  rep.title = title;
  rep.samples_used = int(ctx.bundles.size());

  const double riem = max_riemannian(ctx.bundles);
  const double riem_tol = ctx.tols.get("riemannian");
  const double tensor_tol = ctx.tols.get(tensor_name);

  rep.hypothesis_residuals.push_back({"riemannian", riem});
  rep.hypothesis_residuals.push_back({tensor_name, tensor_residual});

  // Forward: vanishing torsion forces a vanishing tensor; no conformal
  // covector is needed.
  TheoremVerdict forward;
  if (riem <= riem_tol) {
    forward = tensor_residual <= tensor_tol ? TheoremVerdict::Consistent
                                            : TheoremVerdict::Violated;
    rep.notes.push_back("forward direction (vanishing torsion forces " +
                        tensor_name + " = 0): " + verdict_name(forward));
  } else {
    forward = TheoremVerdict::Vacuous;
    rep.notes.push_back(
        "forward direction vacuous: hypothesis riemannian not satisfied "
        "(residual " +
        fmt(riem) + " > tol " + fmt(riem_tol) + ")");
  }

  // Converse: vanishing tensor plus the conformal condition with sigma_0
  // bounded away from zero forces vanishing torsion.
  TheoremVerdict converse = TheoremVerdict::Vacuous;
  if (ctx.sigma == nullptr) {
    if (tensor_residual > tensor_tol)
      rep.notes.push_back("converse direction vacuous: hypothesis " +
                          tensor_name + " not satisfied (residual " +
                          fmt(tensor_residual) + " > tol " +
                          fmt(tensor_tol) + ")");
    rep.notes.push_back(
        "converse direction vacuous: hypothesis contra_cc not evaluable "
        "(no conformal covector supplied)");
  } else {
    const FieldCheckResult cc = check_cc(*ctx.metric, *ctx.sigma, ctx.bundles,
                                         ctx.tols.get("contra_cc"));
    rep.hypothesis_residuals.push_back({"contra_cc", cc.residual_rel});

    double sigma0_rel = std::numeric_limits<double>::infinity();
    double step = 0.0;
    for (const auto& b : ctx.bundles) {
      const Vec sv = eval_field(*ctx.sigma, b.at.x);
      const double s_norm = std::sqrt(std::max(sv.dot(b.g_inv * sv), 0.0));
      const double sigma0 = sv.dot(b.at.y);
      const double denom = s_norm * b.at.F;
      sigma0_rel = std::min(sigma0_rel,
                            denom > 0.0 ? std::abs(sigma0) / denom : 0.0);
      step = std::max(step,
                      std::abs(sigma0 / b.at.F) * b.C_lo.frobenius());
    }
    rep.side_conditions.push_back({"sigma_0_rel", sigma0_rel});
    rep.step_residuals.push_back(
        {"sigma0_over_F_times_torsion", rel0(step)});

    const bool hyp_ok = tensor_residual <= tensor_tol &&
                        cc.residual_rel <= ctx.tols.get("contra_cc");
    if (!hyp_ok) {
      if (tensor_residual > tensor_tol)
        rep.notes.push_back("converse direction vacuous: hypothesis " +
                            tensor_name + " not satisfied (residual " +
                            fmt(tensor_residual) + " > tol " +
                            fmt(tensor_tol) + ")");
      if (cc.residual_rel > ctx.tols.get("contra_cc"))
        rep.notes.push_back(
            "converse direction vacuous: hypothesis contra_cc not satisfied "
            "(residual " +
            fmt(cc.residual_rel) + " > tol " +
            fmt(ctx.tols.get("contra_cc")) + ")");
    } else if (sigma0_rel < ctx.side_margin) {
      rep.notes.push_back(
          "converse direction vacuous: side condition sigma_0_rel = " +
          fmt(sigma0_rel) + " is below margin " + fmt(ctx.side_margin));
    } else {
      converse = riem <= riem_tol ? TheoremVerdict::Consistent
                                  : TheoremVerdict::Violated;
      rep.notes.push_back("converse direction (" + tensor_name +
                          " = 0 and the conformal condition force vanishing "
                          "torsion): " +
                          verdict_name(converse));
    }
  }

  if (riem <= riem_tol) {
    rep.conclusion_name = tensor_name;
    rep.conclusion_residual = tensor_residual;
  } else {
    rep.conclusion_name = "riemannian";
    rep.conclusion_residual = riem;
  }

  if (forward == TheoremVerdict::Violated ||
      converse == TheoremVerdict::Violated)
    rep.verdict = TheoremVerdict::Violated;
  else if (forward == TheoremVerdict::Consistent ||
           converse == TheoremVerdict::Consistent)
    rep.verdict = TheoremVerdict::Consistent;
  else
    rep.verdict = TheoremVerdict::Vacuous;
  return rep;
}

TheoremReport t6(const VerifyContext& ctx) {
  return equivalence_theorem(
      ctx, TheoremId::T6,
      "under the conformal torsion condition, a vanishing T-tensor is "
      "equivalent to vanishing torsion",
      "t_condition", max_t_condition(ctx.bundles));
}

TheoremReport c1(const VerifyContext& ctx) {
  return equivalence_theorem(
      ctx, TheoremId::C1,
      "under the conformal torsion condition, a vanishing T-tensor trace is "
      "equivalent to vanishing torsion",
      "mean_t_condition", max_mean_t(ctx.bundles));
}

// --- L1 ------------------------------------------------------------------

TheoremReport l1(const VerifyContext& ctx) {
  Assembler a(ctx, TheoremId::L1,
              "a nonvanishing semi-concurrent field is linearly independent "
              "of the support direction");
  if (ctx.field == nullptr) {
    a.not_evaluable(
        "hypothesis not evaluable: semi_concurrent (no vector field "
        "supplied, or none exists at the sampled points)");
    return a.conclude("dependence_margin_gap", 1.0, 0.0);
  }

  const Lemma1Report lem = lemma1_independence(
      *ctx.metric, *ctx.field, ctx.bundles, ctx.tols.get("semi_concurrent"),
      ctx.side_margin, ctx.tols.get("riemannian"));

  a.hypothesis("semi_concurrent", lem.sc_residual);
  const FieldData field = field_on_bundles(*ctx.field, ctx.bundles);
  a.side("field_norm_min", field.norm_g_min);
  a.note("minimum independence margin (smallest singular value of the "
         "normalized pair) = " +
         fmt(lem.min_margin));

  if (lem.degenerate_metric) {
    a.not_evaluable(
        "hypothesis semi_concurrent holds vacuously: torsion vanishes "
        "identically, so every field satisfies the semi-concurrent "
        "condition and independence is not forced");
    return a.conclude("dependence_margin_gap", 1.0 - lem.min_margin, 1.0);
  }
  if (lem.min_margin > lem.margin_threshold)
    return a.conclude("dependence_margin_gap", 1.0 - lem.min_margin,
                      1.0 - ctx.side_margin);
  if (lem.min_margin >= kParallelFloor)
    a.not_evaluable("independence margin " + fmt(lem.min_margin) +
                    " is below threshold " + fmt(lem.margin_threshold) +
                    "; indeterminate");
  else
    a.note("field is numerically parallel to the support direction");
  return a.conclude("dependence_margin_gap", 1.0 - lem.min_margin,
                    1.0 - ctx.side_margin);
}

}  // namespace

std::string theorem_id_name(TheoremId id) {
  switch (id) {
    case TheoremId::T1: return "T1";
    case TheoremId::T2: return "T2";
    case TheoremId::T3: return "T3";
    case TheoremId::T4: return "T4";
    case TheoremId::T5: return "T5";
    case TheoremId::T6: return "T6";
    case TheoremId::C1: return "C1";
    case TheoremId::L1: return "L1";
  }
  return "unknown";
}

std::optional<TheoremId> parse_theorem_id(std::string_view token) {
  std::string upper(token);
  for (char& c : upper) c = static_cast<char>(std::toupper(c));
  static constexpr TheoremId ids[] = {TheoremId::T1, TheoremId::T2,
                                      TheoremId::T3, TheoremId::T4,
                                      TheoremId::T5, TheoremId::T6,
                                      TheoremId::C1, TheoremId::L1};
  for (const TheoremId id : ids)
    if (upper == theorem_id_name(id)) return id;
  return std::nullopt;
}

std::string verdict_name(TheoremVerdict v) {
  switch (v) {
    case TheoremVerdict::Consistent: return "implication-consistent";
    case TheoremVerdict::Vacuous: return "vacuous";
    case TheoremVerdict::Violated: return "violated";
  }
  return "unknown";
}

TheoremReport run_theorem(TheoremId id, const VerifyContext& ctx) {
  require_context(ctx);
  switch (id) {
    case TheoremId::T1: return t1(ctx);
    case TheoremId::T2: return t2(ctx);
    case TheoremId::T3: return t3(ctx);
    case TheoremId::T4: return t4(ctx);
    case TheoremId::T5: return t5(ctx);
    case TheoremId::T6: return t6(ctx);
    case TheoremId::C1: return c1(ctx);
    case TheoremId::L1: return l1(ctx);
  }
  throw SpecError("unknown theorem id");
}

std::vector<TheoremReport> run_all_theorems(const VerifyContext& ctx) {
  std::vector<TheoremReport> out;
  for (const TheoremId id : {TheoremId::T1, TheoremId::T2, TheoremId::T3,
                             TheoremId::T4, TheoremId::T5, TheoremId::T6,
                             TheoremId::C1, TheoremId::L1})
    out.push_back(run_theorem(id, ctx));
  return out;
}

std::vector<IdentityCheck> identity_suite(
    const MetricSpec& spec, std::span<const TensorBundle> bundles,
    int fd_samples) {
  if (bundles.empty()) throw SpecError("no support elements supplied");
  const int n = spec.dim;
  std::vector<IdentityCheck> checks;
  const auto add = [&checks](std::string name, double residual, double tol,
                             bool asserted) {
    IdentityCheck c;
    c.name = std::move(name);
    c.residual = residual;
    c.tol = tol;
    c.asserted = asserted;
    c.pass = residual <= tol;
    checks.push_back(std::move(c));
  };

  double g_yy = 0.0, l_y = 0.0, h_y = 0.0, c_y = 0.0, t_y = 0.0, n_y = 0.0;
  double h_hess = 0.0, g_inv_id = 0.0, t2_dual = 0.0;
  double p_mean = 0.0, p_skew = 0.0;
  double frame_orth = 0.0, frame_split = 0.0, frame_recon = 0.0;
  bool any_frame = false;
  bool any_f_jet = false;

  for (const auto& b : bundles) {
    const double F = b.at.F;
    const Vec& y = b.at.y;

    g_yy = std::max(g_yy, std::abs(y.dot(b.g * y) - F * F) / (1.0 + F * F));
    l_y = std::max(l_y, std::abs(b.l_lo.dot(y) - F) / (1.0 + F));
    h_y = std::max(h_y, rel0((b.h * y).norm()));

    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += b.C_lo(i, j, k) * y[k];
        acc += s * s;
      }
    c_y = std::max(c_y, rel0(std::sqrt(acc)));

    acc = 0.0;
    for (int h = 0; h < n; ++h)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int k = 0; k < n; ++k) s += b.T(h, i, j, k) * y[k];
          acc += s * s;
        }
    t_y = std::max(t_y, rel0(std::sqrt(acc)));

    n_y = std::max(n_y, (b.N * y - 2.0 * b.G_spray).norm() /
                            (1.0 + b.G_spray.norm()));

    if (b.has_f_jet) {
      any_f_jet = true;
      h_hess = std::max(h_hess,
                        (b.h - F * b.ddF).norm() / (1.0 + b.h.norm()));
    }
    g_inv_id = std::max(
        g_inv_id, (b.g * b.g_inv - Mat::Identity(n, n)).norm());

    p_mean = std::max(p_mean, (b.P_mean - b.C_mean).norm() /
                                  (1.0 + b.C_mean.norm()));
    acc = 0.0;
    for (int h = 0; h < n; ++h)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            const double d = b.P(h, i, j, k) - b.P(i, h, j, k);
            acc += d * d;
          }
    p_skew = std::max(p_skew,
                      std::sqrt(acc) / (1.0 + b.P.frobenius()));

    // Dual route for the T-tensor trace: trace the assembled 4-tensor vs.
    // the direct formula through the vertical derivative of the mean
    // torsion.
    const DerivTable table = DerivTable::from_jet(spec, b.at.x, y);
    Mat dcm(n, n);
    std::vector<Mat> cuu(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      Mat cj(n, n);
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) cj(p, q) = b.C_lo(p, q, j);
      cuu[std::size_t(j)] = b.g_inv * cj * b.g_inv;
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s1 = 0.0;
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q)
            s1 += b.g_inv(p, q) * table.w(-1, {i, p, q, j});
        s1 *= 0.25;
        double s2 = 0.0;
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q)
            s2 += b.C_lo(i, p, q) * cuu[std::size_t(j)](p, q);
        dcm(i, j) = s1 - 2.0 * s2;
      }
    Mat t2_direct(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double vert = dcm(i, j);
        for (int r = 0; r < n; ++r)
          vert -= b.C_mean[r] * b.C_mixed(r, i, j);
        t2_direct(i, j) =
            F * vert + b.l_lo[i] * b.C_mean[j] + b.l_lo[j] * b.C_mean[i];
      }
    t2_dual = std::max(t2_dual,
                       (b.T2 - t2_direct).norm() / (1.0 + b.T2.norm()));

    if (n == 3 && b.C_norm2 > 1e-12) {
      const MoorFrame f = moor_frame_3d(b);
      any_frame = true;
      Mat frame(3, 3);
      frame.col(0) = f.l_up;
      frame.col(1) = f.m_up;
      frame.col(2) = f.n_up;
      frame_orth = std::max(
          frame_orth,
          (frame.transpose() * b.g * frame - Mat::Identity(3, 3)).norm());
      const Mat split = f.m * f.m.transpose() + f.nvec * f.nvec.transpose();
      frame_split =
          std::max(frame_split, (b.h - split).norm() / (1.0 + b.h.norm()));
      const Tensor3 recon = moor_reconstruct(f);
      double mis = 0.0, ref = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) {
            const double lhs = F * b.C_lo(i, j, k);
            const double d = lhs - recon(i, j, k);
            mis += d * d;
            ref += lhs * lhs;
          }
      frame_recon = std::max(
          frame_recon, std::sqrt(mis) / (1.0 + std::sqrt(ref)));
    }
  }

  add("g_yy_vs_F2", g_yy, 1e-9, true);
  add("l_y_vs_F", l_y, 1e-9, true);
  add("h_y", h_y, 1e-9, true);
  add("C_y", c_y, 1e-9, true);
  add("T_y", t_y, 1e-9, true);
  add("N_y_2G", n_y, 1e-9, true);
  if (any_f_jet) add("h_vs_F_hessF", h_hess, 1e-9, true);
  add("g_inv_identity", g_inv_id, 1e-9, true);
  add("mean_T_trace_vs_direct", t2_dual, 1e-9, true);
  if (any_frame) {
    add("frame_orthonormality", frame_orth, 1e-10, true);
    add("angular_metric_frame_split", frame_split, 1e-9, true);
    add("frame_torsion_reconstruction", frame_recon, 1e-8, true);
  }

  double fd_agree = 0.0;
  const int cap = std::min<int>(fd_samples, int(bundles.size()));
  if (cap > 0) {
    const std::size_t stride = bundles.size() / std::size_t(cap);
    for (int s = 0; s < cap; ++s) {
      const TensorBundle& b = bundles[std::size_t(s) * stride];
      const DerivTable fd_table =
          DerivTable::from_fd(spec, b.at.x, b.at.y);
      const TensorBundle fd_bundle = build_bundle(fd_table);
      double mis = 0.0;
      for (std::size_t i = 0; i < b.P.data().size(); ++i) {
        const double d = b.P.data()[i] - fd_bundle.P.data()[i];
        mis += d * d;
      }
      fd_agree = std::max(
          fd_agree, std::sqrt(mis) / (1.0 + b.P.frobenius()));
    }
    add("hv_curvature_fd_agreement", fd_agree, 1e-4, true);
  }

  add("mean_hv_torsion_vs_mean_torsion", p_mean, 1e-9, false);
  add("hv_curvature_first_pair_skew", p_skew, 1e-9, false);
  return checks;
}

}  // namespace finsler
