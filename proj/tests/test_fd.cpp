#include <doctest.h>

#include <cmath>
#include <vector>

#include "finsler/fd.hpp"

using namespace finsler;

namespace {

const std::vector<double> kX{0.3, -0.2};
const std::vector<double> kY{0.8, 0.6};

double oracle(const std::string& f_src, int xdir, std::vector<int> ydirs,
              const ParamMap& params = {}, const FDSettings& s = {}) {
  const ExprPtr e = parse_expr(f_src, 2);
  return fd_oracle(*e, kX, kY, xdir, std::vector<int>(ydirs), params, s);
}

}  // namespace

TEST_CASE("derivatives of F^2 for a product norm are exact polynomials") {
  // F = y1*y2 so F^2 = y1^2 y2^2; every mixed partial is closed-form.
  const double y1 = kY[0], y2 = kY[1];
  CHECK(oracle("y1*y2", -1, {}) ==
        doctest::Approx(y1 * y1 * y2 * y2).epsilon(1e-10));
  CHECK(oracle("y1*y2", -1, {0}) ==
        doctest::Approx(2 * y1 * y2 * y2).epsilon(1e-8));
  CHECK(oracle("y1*y2", -1, {0, 0}) ==
        doctest::Approx(2 * y2 * y2).epsilon(1e-7));
  CHECK(oracle("y1*y2", -1, {0, 0, 1}) ==
        doctest::Approx(4 * y2).epsilon(1e-6));
  CHECK(oracle("y1*y2", -1, {0, 0, 1, 1}) ==
        doctest::Approx(4.0).epsilon(1e-5));
}

TEST_CASE("x-derivatives ride along a single central difference") {
  // F^2 = y1^2 + e^{2 x1} y2^2: d/dx1 d/dy2 d/dy2 F^2 = 4 e^{2 x1}.
  const std::string f = "sqrt(y1^2 + exp(2*x1)*y2^2)";
  CHECK(oracle(f, 0, {1, 1}) ==
        doctest::Approx(4.0 * std::exp(2 * kX[0])).epsilon(1e-6));
  CHECK(oracle(f, 1, {1, 1}) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(oracle(f, 0, {0}) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("parameters are honored") {
  const std::string f = "sqrt(y1^2 + y2^2) + b*y1";
  const double b = 0.1;
  const double a = std::hypot(kY[0], kY[1]);
  // d(F^2)/dy1 = 2 F (y1/a + b).
  const double F = a + b * kY[0];
  CHECK(oracle(f, -1, {0}, {{"b", b}}) ==
        doctest::Approx(2 * F * (kY[0] / a + b)).epsilon(1e-7));
}

TEST_CASE("Richardson extrapolation improves over the bare stencil") {
  // Fourth y-derivative of F^2 = e^{y1}: exact value e^{y1}.
  const ExprPtr e = parse_expr("exp(y1/2)", 1);
  const std::vector<double> x{0.0}, y{0.4};
  const double exact = std::exp(y[0]);
  FDSettings bare;
  bare.richardson_levels = 1;
  FDSettings refined;
  refined.richardson_levels = 2;
  const std::vector<int> d4{0, 0, 0, 0};
  const double err_bare =
      std::abs(fd_oracle(*e, x, y, -1, d4, {}, bare) - exact);
  const double err_refined =
      std::abs(fd_oracle(*e, x, y, -1, d4, {}, refined) - exact);
  CHECK(err_refined <= err_bare * 2.0);  // no catastrophic regression
  CHECK(err_refined <= 1e-4);
}

TEST_CASE("high-order derivatives of a Finsler-like norm stay accurate") {
  // F = sqrt(y.y): F^2 = y1^2 + y2^2, so third and fourth derivatives vanish.
  const std::string f = "sqrt(y1^2 + y2^2)";
  CHECK(oracle(f, -1, {0, 0}) == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(oracle(f, -1, {0, 1}) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(std::abs(oracle(f, -1, {0, 0, 1})) <= 1e-5);
  CHECK(std::abs(oracle(f, -1, {0, 0, 1, 1})) <= 1e-4);
}
