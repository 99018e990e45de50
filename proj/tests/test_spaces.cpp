#include <doctest.h>

#include <cmath>
#include <string>

#include "finsler/errors.hpp"
#include "finsler/spaces.hpp"

using namespace finsler;

namespace {

const std::string kZoo = FINSLER_ZOO_DIR;

MetricSpec zoo(const std::string& name) {
  return load_metric_file(kZoo + "/" + name + ".fml");
}

std::vector<TensorBundle> bundles_for(const std::string& name, int count = 25,
                                      std::uint64_t seed = 3) {
  return sample_bundles(zoo(name), count, seed);
}

const ConditionVerdict& find(const std::vector<ConditionVerdict>& vs,
                             SpaceCondition c) {
  for (const auto& v : vs)
    if (v.condition == c) return v;
  REQUIRE(false);
  return vs.front();
}

}  // namespace

TEST_CASE("condition names are stable snake_case identifiers") {
  CHECK(condition_name(SpaceCondition::Riemannian) == "riemannian");
  CHECK(condition_name(SpaceCondition::CReducible) == "c_reducible");
  CHECK(condition_name(SpaceCondition::SemiCReducible) == "semi_c_reducible");
  CHECK(condition_name(SpaceCondition::QuasiCReducible) ==
        "quasi_c_reducible");
  CHECK(condition_name(SpaceCondition::C3Like) == "c3_like");
  CHECK(condition_name(SpaceCondition::ChRecurrent) == "ch_recurrent");
  CHECK(condition_name(SpaceCondition::P2Like) == "p2_like");
  CHECK(condition_name(SpaceCondition::PReducible) == "p_reducible");
  CHECK(condition_name(SpaceCondition::Landsberg) == "landsberg");
  CHECK(condition_name(SpaceCondition::TCondition) == "t_condition");
}

TEST_CASE("tolerances fall back to 1e-6 and overrides take precedence") {
  ToleranceSet tols;
  CHECK(tols.get("landsberg") == doctest::Approx(1e-6));
  MetricSpec spec = zoo("euclid2");
  spec.tolerances["landsberg"] = 1e-8;
  const ToleranceSet merged = resolve_tolerances(spec, {{"landsberg", 1e-4}});
  CHECK(merged.get("landsberg") == doctest::Approx(1e-4));
  const ToleranceSet from_spec = resolve_tolerances(spec, {});
  CHECK(from_spec.get("landsberg") == doctest::Approx(1e-8));
  CHECK(from_spec.get("riemannian") == doctest::Approx(1e-6));
}

TEST_CASE("Riemannian detection separates the zoo") {
  CHECK(is_riemannian(bundles_for("euclid2"), 1e-6).holds);
  CHECK(is_riemannian(bundles_for("exp_riemann2"), 1e-6).holds);
  CHECK_FALSE(is_riemannian(bundles_for("randers3_minkowski"), 1e-6).holds);
  CHECK_FALSE(is_riemannian(bundles_for("quartic4"), 1e-6).holds);
}

TEST_CASE("Randers norms are C-reducible, quartic norms are not") {
  const auto randers = bundles_for("randers3_minkowski");
  const ConditionVerdict cr = check_c_reducible(randers, 1e-6);
  CHECK(cr.holds);
  CHECK(cr.residual_rel <= 1e-6);
  CHECK_FALSE(cr.degenerate);

  const ConditionVerdict quartic =
      check_c_reducible(bundles_for("quartic4"), 1e-6);
  CHECK_FALSE(quartic.holds);
  CHECK(quartic.residual_rel > 1e-2);
}

TEST_CASE("semi-C-reducible fit recovers r = 1 on a C-reducible norm") {
  const ConditionVerdict v =
      fit_semi_c_reducible(bundles_for("randers3_minkowski"), 1e-6);
  CHECK(v.holds);
  CHECK(v.fitted.at("r") == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(v.fitted.at("t")) <= 1e-6);
  CHECK(v.fitted.at("r_min") >= 1.0 - 1e-6);
  CHECK(v.fitted.at("r_max") <= 1.0 + 1e-6);
}

TEST_CASE("quasi-C-reducibility needs the full matrix form") {
  // The Randers torsion is built from h and C jointly, so the single-form
  // quasi ansatz cannot absorb it.
  const ConditionVerdict v =
      check_quasi_c_reducible(bundles_for("randers3_minkowski"), 1e-6);
  CHECK_FALSE(v.holds);
  CHECK(v.dim_warning);  // stated for n > 3; computed anyway on a 3-chart
}

TEST_CASE("recurrence and hv conditions on the locally Minkowski Randers") {
  const auto bundles = bundles_for("randers3_minkowski");
  const ConditionVerdict ch = check_ch_recurrent(bundles, 1e-6);
  CHECK(ch.holds);
  CHECK(ch.fitted.at("K_norm") <= 1e-6);

  const auto [p_red, landsberg] =
      check_p_reducible_landsberg(bundles, 1e-6, 1e-6);
  CHECK(landsberg.holds);
  CHECK(p_red.holds);
  CHECK(p_red.degenerate);  // P = 0 makes the reduction vacuous

  const ConditionVerdict p2 = check_p2_like(bundles, 1e-6);
  CHECK(p2.holds);
}

TEST_CASE("x-dependent drift breaks Landsberg but not C-reducibility") {
  const auto bundles = bundles_for("randers3_perturbed");
  CHECK(check_c_reducible(bundles, 1e-6).holds);
  const auto [p_red, landsberg] =
      check_p_reducible_landsberg(bundles, 1e-6, 1e-6);
  CHECK_FALSE(landsberg.holds);
  CHECK(landsberg.residual_rel > 1e-4);
  CHECK(p_red.holds);       // C-reducible forms stay P-reducible
  CHECK_FALSE(p_red.degenerate);
  CHECK_FALSE(check_ch_recurrent(bundles, 1e-6).holds);
  CHECK_FALSE(check_t_condition(bundles, 1e-6).holds);
}

TEST_CASE("torsion-free metrics make every condition hold vacuously") {
  const auto verdicts = classify_all(bundles_for("exp_riemann2"), {});
  REQUIRE(verdicts.size() == 10);
  CHECK(verdicts.front().condition == SpaceCondition::Riemannian);
  for (const auto& v : verdicts) {
    CAPTURE(condition_name(v.condition));
    CHECK(v.holds);
    if (v.condition != SpaceCondition::Riemannian) CHECK(v.degenerate);
  }
}

TEST_CASE("classification order is fixed and complete on 3-charts and up") {
  const auto verdicts = classify_all(bundles_for("quartic4", 15), {});
  REQUIRE(verdicts.size() == 10);
  CHECK(verdicts[0].condition == SpaceCondition::Riemannian);
  CHECK(verdicts[1].condition == SpaceCondition::CReducible);
  CHECK(verdicts[2].condition == SpaceCondition::SemiCReducible);
  CHECK(verdicts[3].condition == SpaceCondition::QuasiCReducible);
  CHECK(verdicts[4].condition == SpaceCondition::C3Like);
  CHECK(verdicts[5].condition == SpaceCondition::ChRecurrent);
  CHECK(verdicts[6].condition == SpaceCondition::P2Like);
  CHECK(verdicts[7].condition == SpaceCondition::PReducible);
  CHECK(verdicts[8].condition == SpaceCondition::Landsberg);
  CHECK(verdicts[9].condition == SpaceCondition::TCondition);
  for (const auto& v : verdicts) CHECK(v.samples_used == 15);
}

TEST_CASE("reducibility families need at least three dimensions") {
  // A non-Riemannian 2-chart norm: drift added to the Euclidean norm.
  const std::string doc =
      "name = randers2\ndim = 2\nF = \"sqrt(y1^2 + y2^2) + 0.2*y1\"\n";
  const MetricSpec spec = parse_metric_spec(doc, "inline:randers2");
  const auto bundles = sample_bundles(spec, 10, 5);
  CHECK_THROWS_AS((void)check_c_reducible(bundles, 1e-6), SpecError);
  CHECK_THROWS_AS((void)fit_semi_c_reducible(bundles, 1e-6), SpecError);
  CHECK_THROWS_AS((void)check_quasi_c_reducible(bundles, 1e-6), SpecError);
  CHECK_THROWS_AS((void)fit_c3_like(bundles, 1e-6), SpecError);

  // classify_all skips them instead of throwing.
  const auto verdicts = classify_all(bundles, {});
  CHECK(verdicts.size() == 6);
  for (const auto& v : verdicts) {
    CHECK(v.condition != SpaceCondition::CReducible);
    CHECK(v.condition != SpaceCondition::SemiCReducible);
    CHECK(v.condition != SpaceCondition::QuasiCReducible);
    CHECK(v.condition != SpaceCondition::C3Like);
  }
}

TEST_CASE("Moor frame is g-orthonormal and reconstructs the torsion") {
  const auto bundles = bundles_for("randers3_perturbed", 10);
  for (const auto& b : bundles) {
    const MoorFrame f = moor_frame_3d(b);
    Mat frame(3, 3);
    frame.col(0) = f.l_up;
    frame.col(1) = f.m_up;
    frame.col(2) = f.n_up;
    CHECK((frame.transpose() * b.g * frame - Mat::Identity(3, 3)).norm() <=
          1e-10);

    // Lowered components match g * raised components.
    CHECK((f.l - b.g * f.l_up).norm() <= 1e-12);
    CHECK((f.m - b.g * f.m_up).norm() <= 1e-12);
    CHECK((f.nvec - b.g * f.n_up).norm() <= 1e-12);

    // Angular metric splits over the frame.
    const Mat h_ref = f.m * f.m.transpose() + f.nvec * f.nvec.transpose();
    CHECK((b.h - h_ref).norm() <= 1e-9 * (1.0 + b.h.norm()));

    // F * C rebuilt from the main scalars.
    const Tensor3 rebuilt = moor_reconstruct(f);
    double diff = 0.0;
    double scale = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          diff = std::max(diff, std::abs(rebuilt(i, j, k) -
                                         b.at.F * b.C_lo(i, j, k)));
          scale = std::max(scale, std::abs(b.at.F * b.C_lo(i, j, k)));
        }
    CHECK(diff <= 1e-8 * (1.0 + scale));
  }
}

TEST_CASE("Moor frame guards its preconditions") {
  const auto flat = bundles_for("euclid2", 4);
  CHECK_THROWS_AS((void)moor_frame_3d(flat.front()), SpecError);  // dim 2
  const std::string doc =
      "name = r3\ndim = 3\nF = \"sqrt(y1^2 + y2^2 + y3^2)\"\n";
  const MetricSpec spec = parse_metric_spec(doc, "inline:r3");
  const auto riem = sample_bundles(spec, 4, 2);
  CHECK_THROWS_AS((void)moor_frame_3d(riem.front()), DegenerateError);
}

TEST_CASE("three-dimensional norms always satisfy the two-covector form") {
  // On a 3-chart the Moor frame provides exact (a, b) covectors, so the fit
  // reports success with the frame-derived scalars.
  const ConditionVerdict v =
      fit_c3_like(bundles_for("randers3_minkowski", 10), 1e-6);
  CHECK(v.holds);
  CHECK(v.dim_warning);
  CHECK(v.fitted.count("H") == 1);
  CHECK(v.fitted.count("I") == 1);
  CHECK(v.fitted.count("J") == 1);

  // The quartic 4D norm has no such representation.
  const ConditionVerdict q = fit_c3_like(bundles_for("quartic4", 15), 1e-6);
  CHECK_FALSE(q.holds);
  CHECK(q.residual_rel > 1e-2);
}
