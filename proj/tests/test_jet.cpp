#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "finsler/jet.hpp"

using namespace finsler;

namespace {

struct Coords {
  std::vector<Jet> x, y;
  std::shared_ptr<const JetLayout> layout;
};

Coords seed(const std::vector<double>& xv, const std::vector<double>& yv) {
  Coords c;
  c.layout = JetLayout::get(int(xv.size()));
  for (std::size_t i = 0; i < xv.size(); ++i)
    c.x.push_back(Jet::seed_x(c.layout, int(i), xv[i]));
  for (std::size_t i = 0; i < yv.size(); ++i)
    c.y.push_back(Jet::seed_y(c.layout, int(i), yv[i]));
  return c;
}

}  // namespace

TEST_CASE("seeded coordinates read back value and unit first derivatives") {
  auto c = seed({0.4, -0.7}, {1.2, 0.5});
  CHECK(c.y[0].value() == doctest::Approx(1.2));
  CHECK(c.y[0].derivative(-1, {0}) == doctest::Approx(1.0));
  CHECK(c.y[0].derivative(-1, {1}) == doctest::Approx(0.0));
  CHECK(c.x[1].derivative(1, {}) == doctest::Approx(1.0));
  CHECK(c.x[1].derivative(0, {}) == doctest::Approx(0.0));
  CHECK(c.y[1].derivative(-1, {1, 1}) == doctest::Approx(0.0));
}

TEST_CASE("polynomial products give exact mixed partials") {
  // f = y1^2 * y2: all nonzero partials are hand-computable.
  auto c = seed({0.0, 0.0}, {3.0, -2.0});
  const Jet f = c.y[0] * c.y[0] * c.y[1];
  CHECK(f.value() == doctest::Approx(9.0 * -2.0));
  CHECK(f.derivative(-1, {0}) == doctest::Approx(2.0 * 3.0 * -2.0));
  CHECK(f.derivative(-1, {1}) == doctest::Approx(9.0));
  CHECK(f.derivative(-1, {0, 0}) == doctest::Approx(2.0 * -2.0));
  CHECK(f.derivative(-1, {0, 1}) == doctest::Approx(2.0 * 3.0));
  CHECK(f.derivative(-1, {0, 0, 1}) == doctest::Approx(2.0));
  CHECK(f.derivative(-1, {1, 1}) == doctest::Approx(0.0));
  CHECK(f.derivative(-1, {0, 0, 0, 1}) == doctest::Approx(0.0));
}

TEST_CASE("mixed x-y derivatives flow through products") {
  // f = x1 * y1^2: d/dx1 d/dy1 d/dy1 f = 2.
  auto c = seed({0.7, 0.1}, {1.5, 2.0});
  const Jet f = c.x[0] * c.y[0] * c.y[0];
  CHECK(f.value() == doctest::Approx(0.7 * 2.25));
  CHECK(f.derivative(0, {}) == doctest::Approx(2.25));
  CHECK(f.derivative(0, {0}) == doctest::Approx(2.0 * 1.5));
  CHECK(f.derivative(0, {0, 0}) == doctest::Approx(2.0));
  CHECK(f.derivative(1, {0, 0}) == doctest::Approx(0.0));
  CHECK(f.derivative(-1, {0, 0}) == doctest::Approx(2.0 * 0.7));
}

TEST_CASE("quotient matches the analytic derivatives of y1/y2") {
  auto c = seed({0.0}, {});
  (void)c;
  auto d = seed({0.0, 0.0}, {2.0, 4.0});
  const Jet f = d.y[0] / d.y[1];
  const double y2 = 4.0;
  CHECK(f.value() == doctest::Approx(0.5));
  CHECK(f.derivative(-1, {0}) == doctest::Approx(1.0 / y2));
  CHECK(f.derivative(-1, {1}) == doctest::Approx(-2.0 / (y2 * y2)));
  CHECK(f.derivative(-1, {1, 1}) == doctest::Approx(2.0 * 2.0 / (y2 * y2 * y2)));
  CHECK(f.derivative(-1, {0, 1}) == doctest::Approx(-1.0 / (y2 * y2)));
  CHECK(f.derivative(-1, {1, 1, 1}) ==
        doctest::Approx(-6.0 * 2.0 / (y2 * y2 * y2 * y2)));
}

TEST_CASE("sqrt composition reproduces the Euclidean norm derivatives") {
  auto c = seed({0.0, 0.0}, {0.6, 0.8});
  const Jet F = sqrt(c.y[0] * c.y[0] + c.y[1] * c.y[1]);
  // |y| = 1 at this point; d|y|/dy_i = y_i/|y|.
  CHECK(F.value() == doctest::Approx(1.0));
  CHECK(F.derivative(-1, {0}) == doctest::Approx(0.6));
  CHECK(F.derivative(-1, {1}) == doctest::Approx(0.8));
  // Hessian of |y| is (delta_ij - n_i n_j)/|y|.
  CHECK(F.derivative(-1, {0, 0}) == doctest::Approx(1.0 - 0.36));
  CHECK(F.derivative(-1, {0, 1}) == doctest::Approx(-0.48));
  CHECK(F.derivative(-1, {1, 1}) == doctest::Approx(1.0 - 0.64));
}

TEST_CASE("exp and log invert each other through the jet") {
  auto c = seed({0.3, 0.0}, {1.1, 0.4});
  const Jet u = c.y[0] + 2.0 * c.x[0];
  const Jet f = log(exp(u));
  for (int k : {-1, 0}) {
    if (k == -1) {
      CHECK(f.value() == doctest::Approx(u.value()));
      CHECK(f.derivative(-1, {0}) == doctest::Approx(1.0));
      CHECK(f.derivative(-1, {0, 0}) == doctest::Approx(0.0));
      CHECK(f.derivative(-1, {0, 0, 0}) == doctest::Approx(0.0));
    } else {
      CHECK(f.derivative(k, {}) == doctest::Approx(2.0));
      CHECK(f.derivative(k, {0}) == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("sin and cos satisfy the Pythagorean identity derivative-wise") {
  auto c = seed({0.2, -0.1}, {0.9, 0.3});
  const Jet u = c.y[0] * c.y[1] + c.x[1];
  const Jet one = sin(u) * sin(u) + cos(u) * cos(u);
  CHECK(one.value() == doctest::Approx(1.0));
  CHECK(one.derivative(-1, {0}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(one.derivative(-1, {0, 1}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(one.derivative(1, {0, 1}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(one.derivative(-1, {0, 0, 1}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("integer pow uses exact repeated multiplication") {
  auto c = seed({0.0}, {1.5});
  const Jet f = pow(c.y[0], -2.0);
  const double y = 1.5;
  CHECK(f.value() == doctest::Approx(std::pow(y, -2)));
  CHECK(f.derivative(-1, {0}) == doctest::Approx(-2.0 * std::pow(y, -3)));
  CHECK(f.derivative(-1, {0, 0}) == doctest::Approx(6.0 * std::pow(y, -4)));
  CHECK(f.derivative(-1, {0, 0, 0}) ==
        doctest::Approx(-24.0 * std::pow(y, -5)));
}

TEST_CASE("fractional pow matches the quartic-root norm derivatives") {
  auto c = seed({0.0, 0.0}, {1.0, 1.0});
  const Jet q = c.y[0] * c.y[0] * c.y[0] * c.y[0] +
                c.y[1] * c.y[1] * c.y[1] * c.y[1];
  const Jet F = pow(q, 0.25);
  // F = (y1^4+y2^4)^(1/4) at (1,1): F = 2^(1/4), dF/dy1 = y1^3 F / q.
  const double F0 = std::pow(2.0, 0.25);
  CHECK(F.value() == doctest::Approx(F0));
  CHECK(F.derivative(-1, {0}) == doctest::Approx(F0 / 2.0));
  // Euler: y1 F_1 + y2 F_2 = F for a 1-homogeneous function.
  CHECK(F.derivative(-1, {0}) + F.derivative(-1, {1}) ==
        doctest::Approx(F0));
}

TEST_CASE("Euler identity holds coefficient-wise for homogeneous functions") {
  // W = F^2 is 2-homogeneous in y: sum_i y_i dW/dy_i = 2 W, and the same
  // contraction on higher derivatives drops the degree by one each time.
  auto c = seed({0.1, -0.2}, {0.7, 0.4});
  const Jet W = c.y[0] * c.y[0] + 3.0 * c.y[0] * c.y[1] +
                2.5 * c.y[1] * c.y[1];
  const double y0 = 0.7, y1 = 0.4;
  const double lhs1 =
      y0 * W.derivative(-1, {0}) + y1 * W.derivative(-1, {1});
  CHECK(lhs1 == doctest::Approx(2.0 * W.value()));
  const double lhs2 =
      y0 * W.derivative(-1, {0, 0}) + y1 * W.derivative(-1, {0, 1});
  CHECK(lhs2 == doctest::Approx(1.0 * W.derivative(-1, {0})));
}

TEST_CASE("derivatives outside the truncation set raise") {
  auto c = seed({0.0, 0.0}, {1.0, 2.0});
  const Jet f = c.y[0] * c.y[1];
  CHECK_THROWS_AS((void)f.derivative(-1, {0, 0, 0, 0, 1}),
                  std::out_of_range);
  // Two x-derivatives are outside the set as well.
  CHECK(JetLayout::get(2)->index_of(-1, std::vector<int>{0, 0, 0, 0, 0}) ==
        -1);
}

TEST_CASE("domain errors surface as exceptions") {
  auto c = seed({0.0}, {-2.0});
  CHECK_THROWS_AS((void)sqrt(c.y[0]), std::domain_error);
  CHECK_THROWS_AS((void)log(c.y[0]), std::domain_error);
  CHECK_THROWS_AS((void)(1.0 / (c.y[0] + 2.0)), std::domain_error);
  CHECK_THROWS_AS((void)pow(c.y[0], 0.5), std::domain_error);
}

TEST_CASE("mismatched layouts are rejected") {
  auto a = seed({0.0, 0.0}, {1.0, 1.0});
  auto b = seed({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0});
  CHECK_THROWS((void)(a.y[0] + b.y[0]));
}
