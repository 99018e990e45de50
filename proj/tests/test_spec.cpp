#include <doctest.h>

#include <string>

#include "finsler/spec.hpp"

using namespace finsler;

namespace {
const std::string kZoo = FINSLER_ZOO_DIR;
}

TEST_CASE("metric documents parse name, dim, params, region, tolerances") {
  const std::string doc = R"doc(# comment line
name = demo
dim = 2
F = "sqrt(y1^2 + c*y2^2)"

[params]
c = 2.5

[tolerances]
landsberg = 1e-8

[sample_region]
x_min = [-1, 0]
x_max = [1, 0.5]
y_signs = [pos, free]
y_radius = 2.0
)doc";
  const MetricSpec spec = parse_metric_spec(doc, "inline");
  CHECK(spec.name == "demo");
  CHECK(spec.dim == 2);
  CHECK(spec.params.at("c") == doctest::Approx(2.5));
  CHECK(spec.tolerances.at("landsberg") == doctest::Approx(1e-8));
  REQUIRE(spec.region.x_min.size() == 2);
  CHECK(spec.region.x_min[0] == doctest::Approx(-1));
  CHECK(spec.region.x_max[1] == doctest::Approx(0.5));
  REQUIRE(spec.region.y_signs.size() == 2);
  CHECK(spec.region.y_signs[0] == AxisSign::Pos);
  CHECK(spec.region.y_signs[1] == AxisSign::Free);
  CHECK(spec.region.y_radius == doctest::Approx(2.0));
  CHECK(references_y(*spec.expr));
}

TEST_CASE("scalar region bounds broadcast to every axis") {
  const std::string doc = R"doc(name = d
dim = 3
F = "sqrt(y1^2 + y2^2 + y3^2)"

[sample_region]
x_min = -2
x_max = 2
y_signs = [free, free, free]
y_radius = 1.0
)doc";
  const MetricSpec spec = parse_metric_spec(doc, "inline");
  REQUIRE(spec.region.x_min.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(spec.region.x_min[i] == doctest::Approx(-2));
    CHECK(spec.region.x_max[i] == doctest::Approx(2));
  }
}

TEST_CASE("zoo files load and declare consistent dimensions") {
  for (const char* name :
       {"euclid2", "exp_riemann2", "randers3_minkowski", "randers3_perturbed",
        "quartic4"}) {
    const MetricSpec spec = load_metric_file(kZoo + "/" + name + ".fml");
    CAPTURE(name);
    CHECK(spec.name == name);
    CHECK(spec.dim >= 2);
    CHECK(int(spec.region.x_min.size()) == spec.dim);
    CHECK(int(spec.region.y_signs.size()) == spec.dim);
    CHECK(spec.expr != nullptr);
  }
}

TEST_CASE("malformed metric documents raise SpecError naming the line") {
  const auto expect_error = [](const std::string& doc,
                               const std::string& needle) {
    try {
      (void)parse_metric_spec(doc, "doc");
      FAIL("expected SpecError for: " << needle);
    } catch (const SpecError& e) {
      const std::string msg = e.what();
      CAPTURE(msg);
      CHECK(msg.find("doc") != std::string::npos);
      CHECK(msg.find(needle) != std::string::npos);
    }
  };
  expect_error("dim = 2\nF = \"y1\"\n", "name");
  expect_error("name = a\nF = \"y1\"\n", "dim");
  expect_error("name = a\ndim = 2\n", "F");
  expect_error("name = a\ndim = 0\nF = \"y1\"\n", "dim");
  expect_error("name = a\ndim = 2\nF = \"y1\"\nbogus = 1\n", "bogus");
  expect_error(
      "name = a\ndim = 2\nF = \"y1\"\n[sample_region]\ny_signs = [up, free]\n",
      "y_signs");
}

TEST_CASE("expression errors in F are mapped to the document position") {
  const std::string doc = "name = a\ndim = 2\nF = \"y1 + + y2\"\n";
  // Expression failures inside a document surface as SpecError so the caller
  // sees the document line, with the expression's own line/column preserved
  // in the wrapped message.
  try {
    (void)parse_metric_spec(doc, "doc");
    FAIL("expected SpecError");
  } catch (const SpecError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("doc:3") != std::string::npos);
    CHECK(msg.find("in F") != std::string::npos);
    CHECK(msg.find("column") != std::string::npos);
  }
}

TEST_CASE("unbound parameters in F are rejected at load time") {
  const std::string doc = "name = a\ndim = 1\nF = \"q*y1\"\n";
  CHECK_THROWS_AS((void)parse_metric_spec(doc, "doc"), SpecError);
}

TEST_CASE("field documents parse and evaluate") {
  const std::string doc = R"doc(name = radial
dim = 2
B1 = "-x1"
B2 = "-2*x2"
)doc";
  const VectorFieldSpec f = parse_field_spec(doc, "inline");
  CHECK(f.name == "radial");
  REQUIRE(f.dim == 2);
  Vec x(2);
  x << 0.5, -1.0;
  const Vec b = eval_field(f, x);
  CHECK(b[0] == doctest::Approx(-0.5));
  CHECK(b[1] == doctest::Approx(2.0));
  const Mat jac = eval_field_jacobian(f, x);
  CHECK(jac(0, 0) == doctest::Approx(-1.0));
  CHECK(jac(0, 1) == doctest::Approx(0.0));
  CHECK(jac(1, 1) == doctest::Approx(-2.0));
}

TEST_CASE("field components must not reference fiber coordinates") {
  const std::string doc = "name = f\ndim = 1\nB1 = \"y1\"\n";
  CHECK_THROWS_AS((void)parse_field_spec(doc, "doc"), SpecError);
}

TEST_CASE("field documents with missing components are rejected") {
  CHECK_THROWS_AS(
      (void)parse_field_spec("name = f\ndim = 2\nB1 = \"x1\"\n", "doc"),
      SpecError);
}

TEST_CASE("content hashes are stable and format-tagged") {
  CHECK(content_hash("") == "fnv1a64:cbf29ce484222325");
  CHECK(content_hash("a") == "fnv1a64:af63dc4c8601ec8c");
  CHECK(content_hash("ab") != content_hash("ba"));
}
