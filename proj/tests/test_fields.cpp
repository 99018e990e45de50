#include <doctest.h>

#include <cmath>
#include <string>

#include "finsler/fields.hpp"
#include "finsler/sampling.hpp"

using namespace finsler;

namespace {

const std::string kZoo = FINSLER_ZOO_DIR;

MetricSpec zoo(const std::string& name) {
  return load_metric_file(kZoo + "/" + name + ".fml");
}

VectorFieldSpec zoo_field(const std::string& name) {
  return load_field_file(kZoo + "/fields/" + name + ".vfl");
}

VectorFieldSpec inline_field(const std::string& name, int dim,
                             const std::vector<std::string>& comps) {
  std::string doc = "name = " + name + "\ndim = " + std::to_string(dim) + "\n";
  for (std::size_t i = 0; i < comps.size(); ++i)
    doc += "B" + std::to_string(i + 1) + " = \"" + comps[i] + "\"\n";
  return parse_field_spec(doc, "inline:" + name);
}

std::vector<Vec> directions(const MetricSpec& spec, int count,
                            std::uint64_t seed) {
  SampleRng rng(seed);
  std::vector<Vec> out;
  Vec x, y;
  for (int i = 0; i < count; ++i) {
    draw_candidate(spec.region, rng, x, y);
    out.push_back(y);
  }
  return out;
}

}  // namespace

TEST_CASE("every field annihilates a vanishing torsion") {
  const MetricSpec spec = zoo("euclid2");
  const auto bundles = sample_bundles(spec, 10, 3);
  const FieldCheckResult r =
      check_sc(spec, zoo_field("const_e1_d2"), bundles, 1e-6);
  CHECK(r.holds);
  CHECK(r.residual_rel <= 1e-12);
  CHECK_FALSE(r.zero_field);
  CHECK(r.per_sample.size() == bundles.size());
}

TEST_CASE("constant fields are not semi-concurrent on a Randers norm") {
  const MetricSpec spec = zoo("randers3_minkowski");
  const auto bundles = sample_bundles(spec, 15, 3);
  const FieldCheckResult r =
      check_sc(spec, zoo_field("const_e1_d3"), bundles, 1e-6);
  CHECK_FALSE(r.holds);
  CHECK(r.residual_rel > 1e-3);
}

TEST_CASE("the inward radial field is concurrent exactly on flat charts") {
  const MetricSpec flat = zoo("euclid2");
  const auto flat_bundles = sample_bundles(flat, 10, 5);
  const FieldCheckResult ok =
      check_concurrent(flat, zoo_field("radial_d2"), flat_bundles, 1e-6);
  CHECK(ok.holds);
  CHECK(ok.residual_rel <= 1e-10);

  // On the curved surface metric the horizontal equation picks up
  // connection terms and fails.
  const MetricSpec curved = zoo("exp_riemann2");
  const auto curved_bundles = sample_bundles(curved, 10, 5);
  const FieldCheckResult bad =
      check_concurrent(curved, zoo_field("radial_d2"), curved_bundles, 1e-6);
  CHECK_FALSE(bad.holds);
  CHECK(bad.extra.at("horizontal_residual_max") > 1e-3);
}

TEST_CASE("concurrent check separates horizontal and vertical parts") {
  const MetricSpec spec = zoo("randers3_minkowski");
  const auto bundles = sample_bundles(spec, 10, 7);
  // radial is -x: horizontal part holds (all connections vanish on a
  // locally Minkowski chart) but the vertical torsion contraction fails.
  const FieldCheckResult r =
      check_concurrent(spec, zoo_field("radial_d3"), bundles, 1e-6);
  CHECK_FALSE(r.holds);
  REQUIRE(r.extra.count("horizontal_residual_max") == 1);
  REQUIRE(r.extra.count("vertical_residual_max") == 1);
  CHECK(r.extra.at("horizontal_residual_max") <= 1e-10);
  CHECK(r.extra.at("vertical_residual_max") > 1e-3);
}

TEST_CASE("contravariant-constant covectors annihilate mixed torsion only "
          "when torsion vanishes") {
  const MetricSpec flat = zoo("exp_riemann2");
  const auto flat_bundles = sample_bundles(flat, 10, 9);
  CHECK(check_cc(flat, zoo_field("sigma_e1_d2"), flat_bundles, 1e-6).holds);

  const MetricSpec randers = zoo("randers3_minkowski");
  const auto rb = sample_bundles(randers, 10, 9);
  const FieldCheckResult r =
      check_cc(randers, zoo_field("sigma_e1_d3"), rb, 1e-6);
  CHECK_FALSE(r.holds);
  CHECK(r.extra.count("sigma0_abs_min") == 1);
}

TEST_CASE("identically zero fields are flagged") {
  const MetricSpec spec = zoo("randers3_minkowski");
  const auto bundles = sample_bundles(spec, 5, 3);
  const VectorFieldSpec zero = inline_field("zero", 3, {"0", "0", "0"});
  const FieldCheckResult r = check_sc(spec, zero, bundles, 1e-6);
  CHECK(r.zero_field);
}

TEST_CASE("nullspace search finds the full basis exactly when torsion "
          "vanishes") {
  const MetricSpec riem = zoo("exp_riemann2");
  Vec x(2);
  x << 0.2, -0.1;
  const NullspaceResult full =
      find_sc_field(riem, x, directions(riem, 40, 13));
  CHECK(full.basis.cols() == 2);
  for (double s : full.singular_values) CHECK(s <= 1e-10 * (1.0 + full.scale));

  const MetricSpec randers = zoo("randers3_minkowski");
  Vec x3(3);
  x3 << 0.1, 0.0, -0.2;
  const NullspaceResult empty =
      find_sc_field(randers, x3, directions(randers, 40, 13));
  CHECK(empty.basis.cols() == 0);
  CHECK(empty.singular_values.back() >= 1e-3 * empty.scale);

  const MetricSpec quartic = zoo("quartic4");
  Vec x4(4);
  x4 << 0.0, 0.1, 0.2, -0.1;
  const NullspaceResult empty4 =
      find_sc_field(quartic, x4, directions(quartic, 40, 13));
  CHECK(empty4.basis.cols() == 0);
  CHECK(empty4.singular_values.back() >= 1e-3 * empty4.scale);
}

TEST_CASE("nullspace search reports sorted singular values and its inputs") {
  const MetricSpec spec = zoo("randers3_perturbed");
  Vec x(3);
  x << 0.5, 0.5, 0.5;
  const NullspaceResult r = find_sc_field(spec, x, directions(spec, 25, 17));
  REQUIRE(r.singular_values.size() == 3);
  CHECK(r.singular_values[0] >= r.singular_values[1]);
  CHECK(r.singular_values[1] >= r.singular_values[2]);
  CHECK(r.y_samples_used == 25);
  CHECK(r.threshold > 0.0);
}

TEST_CASE("independence check: zero margins only for parallel fields") {
  const MetricSpec spec = zoo("randers3_minkowski");
  const auto bundles = sample_bundles(spec, 12, 21);
  const Lemma1Report rep = lemma1_independence(
      spec, zoo_field("const_e1_d3"), bundles, 1e-6, 1e-3, 1e-6);
  // Precondition fails on a Randers norm, but margins are still measured.
  CHECK_FALSE(rep.precondition_sc);
  CHECK(rep.nonzero_field);
  CHECK(rep.per_sample_margin.size() == bundles.size());
  for (double m : rep.per_sample_margin) {
    CHECK(m >= 0.0);
    CHECK(m <= 1.0 + 1e-12);
  }
  CHECK_FALSE(rep.degenerate_metric);

  // On a torsion-free metric the precondition is vacuous and flagged so.
  const MetricSpec flat = zoo("euclid2");
  const auto fb = sample_bundles(flat, 8, 21);
  const Lemma1Report flat_rep = lemma1_independence(
      flat, zoo_field("const_e1_d2"), fb, 1e-6, 1e-3, 1e-6);
  CHECK(flat_rep.precondition_sc);
  CHECK(flat_rep.degenerate_metric);
  CHECK(flat_rep.independent);
}
