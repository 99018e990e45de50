#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "finsler/errors.hpp"
#include "finsler/tensors.hpp"

using namespace finsler;

namespace {

const std::string kZoo = FINSLER_ZOO_DIR;

MetricSpec zoo(const std::string& name) {
  return load_metric_file(kZoo + "/" + name + ".fml");
}

MetricSpec inline_spec(const std::string& name, int dim,
                       const std::string& f,
                       const std::string& params = "") {
  std::string doc = "name = " + name + "\ndim = " + std::to_string(dim) +
                    "\nF = \"" + f + "\"\n";
  if (!params.empty()) doc += "\n[params]\n" + params + "\n";
  return parse_metric_spec(doc, "inline:" + name);
}

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

/// Levi-Civita symbols of ds^2 = dx1^2 + e^{2 x1} dx2^2, hand-derived:
/// the only nonzero entries are G^1_22 = -e^{2 x1} and G^2_12 = G^2_21 = 1.
Tensor3 exp_metric_christoffel(double x1) {
  Tensor3 gamma(2);
  gamma(0, 1, 1) = -std::exp(2.0 * x1);
  gamma(1, 0, 1) = 1.0;
  gamma(1, 1, 0) = 1.0;
  return gamma;
}

/// Closed-form fundamental tensor of F = |y| + b.y:
/// g_ij = (F/a)(d_ij - u_i u_j) + (u_i + b_i)(u_j + b_j), a = |y|, u = y/a.
Mat randers_metric(const Vec& y, const Vec& b) {
  const int n = int(y.size());
  const double a = y.norm();
  const Vec u = y / a;
  const double F = a + b.dot(y);
  Mat g = (F / a) * (Mat::Identity(n, n) - u * u.transpose());
  g += (u + b) * (u + b).transpose();
  return g;
}

double rel(double err, double scale) { return err / (1.0 + scale); }

}  // namespace

TEST_CASE("flat Euclidean norm: identity metric, every derived tensor zero") {
  const MetricSpec spec = zoo("euclid2");
  const TensorBundle b = build_bundle(spec, vec2(0.2, -0.3), vec2(0.6, 0.8));
  CHECK(b.at.F == doctest::Approx(1.0));
  CHECK((b.g - Mat::Identity(2, 2)).norm() <= 1e-12);
  CHECK((b.l_lo - vec2(0.6, 0.8)).norm() <= 1e-12);
  CHECK(b.C_lo.frobenius() <= 1e-12);
  CHECK(b.G_spray.norm() <= 1e-12);
  CHECK(b.N.norm() <= 1e-12);
  CHECK(b.G_berwald.frobenius() <= 1e-12);
  CHECK(b.Gamma.frobenius() <= 1e-12);
  CHECK(b.C_hder.frobenius() <= 1e-12);
  CHECK(b.P.frobenius() <= 1e-12);
  CHECK(b.T.frobenius() <= 1e-12);
  CHECK(b.min_eig == doctest::Approx(1.0));
}

TEST_CASE("exp-metric connection matches the analytic Levi-Civita symbols") {
  const MetricSpec spec = zoo("exp_riemann2");
  const Vec x = vec2(0.31, -0.12);
  const Vec y = vec2(0.7, -0.4);
  const TensorBundle b = build_bundle(spec, x, y);
  const Tensor3 gamma = exp_metric_christoffel(x[0]);

  double gamma_err = 0.0, berwald_err = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        gamma_err = std::max(gamma_err,
                             std::abs(b.Gamma(i, j, k) - gamma(i, j, k)));
        berwald_err = std::max(
            berwald_err, std::abs(b.G_berwald(i, j, k) - gamma(i, j, k)));
      }
  CHECK(rel(gamma_err, gamma.frobenius()) <= 1e-6);
  CHECK(rel(berwald_err, gamma.frobenius()) <= 1e-6);

  // Spray and nonlinear connection from the same symbols.
  Vec G_ref(2);
  G_ref.setZero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) G_ref[i] += 0.5 * gamma(i, j, k) * y[j] * y[k];
  CHECK((b.G_spray - G_ref).norm() <= 1e-8 * (1.0 + G_ref.norm()));

  Mat N_ref(2, 2);
  N_ref.setZero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) N_ref(i, j) += gamma(i, j, k) * y[k];
  CHECK((b.N - N_ref).norm() <= 1e-8 * (1.0 + N_ref.norm()));

  // Riemannian metrics carry no torsion and no hv-curvature.
  CHECK(b.C_lo.frobenius() <= 1e-12);
  CHECK(b.P.frobenius() <= 1e-10);
  CHECK(b.T.frobenius() <= 1e-10);
}

TEST_CASE("Randers fundamental tensor matches its closed form") {
  const MetricSpec spec = zoo("randers3_minkowski");
  const Vec y = vec3(0.48, -0.6, 0.64);
  const Vec x = vec3(0.1, 0.2, -0.4);
  const TensorBundle b = build_bundle(spec, x, y);
  Vec bvec = vec3(0.1, 0.0, 0.0);

  const Mat g_ref = randers_metric(y, bvec);
  CHECK((b.g - g_ref).norm() <= 1e-10 * (1.0 + g_ref.norm()));

  // l_i = dF/dy_i = y_i/|y| + b_i.
  const Vec l_ref = y / y.norm() + bvec;
  CHECK((b.l_lo - l_ref).norm() <= 1e-10);

  // F itself.
  CHECK(b.at.F == doctest::Approx(y.norm() + bvec.dot(y)));

  // Locally Minkowski: no x-dependence anywhere.
  CHECK(b.G_spray.norm() <= 1e-12);
  CHECK(b.Gamma.frobenius() <= 1e-12);
  CHECK(b.C_hder.frobenius() <= 1e-12);
  CHECK(b.P.frobenius() <= 1e-12);
}

TEST_CASE("tensor symmetries") {
  const MetricSpec spec = zoo("randers3_perturbed");
  const TensorBundle b =
      build_bundle(spec, vec3(0.5, 0.4, 0.9), vec3(0.8, -0.36, 0.48));
  const int n = 3;

  double g_sym = 0.0, c_sym = 0.0, gamma_sym = 0.0, t_sym = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      g_sym = std::max(g_sym, std::abs(b.g(i, j) - b.g(j, i)));
      for (int k = 0; k < n; ++k) {
        c_sym = std::max(c_sym, std::abs(b.C_lo(i, j, k) - b.C_lo(j, i, k)));
        c_sym = std::max(c_sym, std::abs(b.C_lo(i, j, k) - b.C_lo(i, k, j)));
        gamma_sym = std::max(gamma_sym,
                             std::abs(b.Gamma(i, j, k) - b.Gamma(i, k, j)));
        for (int l = 0; l < n; ++l) {
          t_sym = std::max(t_sym, std::abs(b.T(i, j, k, l) - b.T(j, i, k, l)));
          t_sym = std::max(t_sym, std::abs(b.T(i, j, k, l) - b.T(i, j, l, k)));
          t_sym = std::max(t_sym, std::abs(b.T(i, j, k, l) - b.T(i, k, j, l)));
        }
      }
    }
  CHECK(g_sym <= 1e-12);
  CHECK(c_sym <= 1e-12);
  CHECK(gamma_sym <= 1e-9);
  CHECK(t_sym <= 1e-9);
}

TEST_CASE("indicatory contractions vanish and normalizations hold") {
  for (const char* name : {"randers3_minkowski", "randers3_perturbed"}) {
    const MetricSpec spec = zoo(name);
    const Vec x = vec3(0.45, 0.3, 0.7);
    const Vec y = vec3(0.2, 0.9, -0.3);
    const TensorBundle b = build_bundle(spec, x, y);
    CAPTURE(name);

    // g_ij y^i y^j = F^2 and l_i y^i = F.
    CHECK(y.dot(b.g * y) == doctest::Approx(b.at.F * b.at.F));
    CHECK(b.l_lo.dot(y) == doctest::Approx(b.at.F));

    // h y = 0, C y = 0, T y = 0, N y = 2 G.
    CHECK((b.h * y).norm() <= 1e-10 * (1.0 + b.h.norm()));
    double cy = 0.0, ty = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s3 = 0.0;
        for (int k = 0; k < 3; ++k) {
          s3 += b.C_lo(i, j, k) * y[k];
          double s4 = 0.0;
          for (int l = 0; l < 3; ++l) s4 += b.T(i, j, k, l) * y[l];
          ty = std::max(ty, std::abs(s4));
        }
        cy = std::max(cy, std::abs(s3));
      }
    CHECK(cy <= 1e-10 * (1.0 + b.C_lo.frobenius()));
    CHECK(ty <= 1e-9 * (1.0 + b.T.frobenius()));
    CHECK((b.N * y - 2.0 * b.G_spray).norm() <=
          1e-9 * (1.0 + b.G_spray.norm()));
  }
}

TEST_CASE("fiber scaling: every tensor has its stated homogeneity degree") {
  const MetricSpec spec = zoo("randers3_perturbed");
  const Vec x = vec3(0.6, 0.25, 0.5);
  const Vec y = vec3(0.36, 0.48, -0.8);
  const double lam = 2.3;
  const TensorBundle b1 = build_bundle(spec, x, y);
  const TensorBundle b2 = build_bundle(spec, x, Vec(lam * y));

  CHECK(b2.at.F == doctest::Approx(lam * b1.at.F));
  CHECK((b2.g - b1.g).norm() <= 1e-9 * (1.0 + b1.g.norm()));
  CHECK((b2.l_lo - b1.l_lo).norm() <= 1e-9);
  CHECK((b2.G_spray - lam * lam * b1.G_spray).norm() <=
        1e-8 * (1.0 + b1.G_spray.norm()));
  CHECK((b2.N - lam * b1.N).norm() <= 1e-8 * (1.0 + b1.N.norm()));

  double c_scale = 0.0, gamma_diff = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        c_scale = std::max(c_scale, std::abs(lam * b2.C_lo(i, j, k) -
                                             b1.C_lo(i, j, k)));
        gamma_diff = std::max(gamma_diff,
                              std::abs(b2.Gamma(i, j, k) - b1.Gamma(i, j, k)));
      }
  CHECK(c_scale <= 1e-9 * (1.0 + b1.C_lo.frobenius()));
  CHECK(gamma_diff <= 1e-7 * (1.0 + b1.Gamma.frobenius()));
}

TEST_CASE("inverse metric and both mean-torsion routes agree") {
  const MetricSpec spec = zoo("quartic4");
  Vec x(4), y(4);
  x << 0.1, -0.3, 0.4, 0.2;
  y << 0.9, 0.7, 0.8, 1.1;
  const TensorBundle b = build_bundle(spec, x, y);
  CHECK((b.g * b.g_inv - Mat::Identity(4, 4)).norm() <= 1e-10);

  Vec c_mean_ref(4);
  c_mean_ref.setZero();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        c_mean_ref[i] += b.C_lo(i, j, k) * b.g_inv(j, k);
  CHECK((b.C_mean - c_mean_ref).norm() <= 1e-10 * (1.0 + c_mean_ref.norm()));
  CHECK(b.C_norm2 ==
        doctest::Approx(c_mean_ref.dot(b.g_inv * c_mean_ref)).epsilon(1e-9));
}

TEST_CASE("finite-difference table agrees with the jet table slot by slot") {
  const MetricSpec spec = zoo("randers3_perturbed");
  const Vec x = vec3(0.55, 0.5, 0.6);
  const Vec y = vec3(0.53, -0.36, 0.66);
  const DerivTable jet = DerivTable::from_jet(spec, x, y);
  const DerivTable fd = DerivTable::from_fd(spec, x, y);

  const int n = 3;
  double worst = 0.0;
  // All non-decreasing y multi-indices up to order 4 (order <= 3 with one
  // x-derivative), exactly the truncation set the tensors consume.
  std::vector<std::vector<int>> ydirs_list{{}};
  for (int order = 1; order <= 4; ++order) {
    std::vector<std::vector<int>> next;
    for (const auto& base : ydirs_list)
      if (int(base.size()) == order - 1)
        for (int d = base.empty() ? 0 : base.back(); d < n; ++d) {
          auto ext = base;
          ext.push_back(d);
          next.push_back(ext);
        }
    ydirs_list.insert(ydirs_list.end(), next.begin(), next.end());
  }
  for (int xdir = -1; xdir < n; ++xdir)
    for (const auto& yd : ydirs_list) {
      if (xdir >= 0 && int(yd.size()) > 3) continue;
      const double a = jet.w(xdir, std::span<const int>(yd));
      const double bfd = fd.w(xdir, std::span<const int>(yd));
      worst = std::max(worst, std::abs(a - bfd) / std::max(1.0, std::abs(a)));
    }
  CHECK(worst <= 1e-5);
}

TEST_CASE("bundles built from the finite-difference table match the jet path") {
  const MetricSpec spec = zoo("exp_riemann2");
  const Vec x = vec2(0.2, -0.4);
  const Vec y = vec2(0.6, -0.7);
  const TensorBundle a = build_bundle(DerivTable::from_jet(spec, x, y));
  const TensorBundle b = build_bundle(DerivTable::from_fd(spec, x, y));
  CHECK((a.g - b.g).norm() <= 1e-8 * (1.0 + a.g.norm()));
  double gamma_diff = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        gamma_diff =
            std::max(gamma_diff, std::abs(a.Gamma(i, j, k) - b.Gamma(i, j, k)));
  CHECK(gamma_diff <= 1e-5 * (1.0 + a.Gamma.frobenius()));
  double p_diff = 0.0;
  for (int h = 0; h < 2; ++h)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          p_diff = std::max(p_diff,
                            std::abs(a.P(h, i, j, k) - b.P(h, i, j, k)));
  CHECK(p_diff <= 1e-4 * (1.0 + a.P.frobenius()));
}

TEST_CASE("support sampling is deterministic and admissible") {
  const MetricSpec spec = zoo("quartic4");
  const auto s1 = sample_support(spec, 25, 7);
  const auto s2 = sample_support(spec, 25, 7);
  const auto s3 = sample_support(spec, 25, 8);
  REQUIRE(s1.size() == 25);
  REQUIRE(s2.size() == 25);
  bool all_equal = true;
  for (std::size_t i = 0; i < s1.size(); ++i) {
    all_equal = all_equal && (s1[i].x - s2[i].x).norm() == 0.0 &&
                (s1[i].y - s2[i].y).norm() == 0.0;
    CHECK(s1[i].F > 0.0);
    for (int d = 0; d < 4; ++d) CHECK(s1[i].y[d] > 0.0);  // pos sign mask
  }
  CHECK(all_equal);
  CHECK((s1[0].x - s3[0].x).norm() > 0.0);
}

TEST_CASE("bundle sampling preserves order and matches single evaluation") {
  const MetricSpec spec = zoo("randers3_minkowski");
  const auto supports = sample_support(spec, 6, 11);
  const auto bundles = sample_bundles(spec, 6, 11);
  REQUIRE(bundles.size() == 6);
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    CHECK((bundles[i].at.x - supports[i].x).norm() == 0.0);
    const TensorBundle direct =
        build_bundle(spec, supports[i].x, supports[i].y);
    CHECK((bundles[i].g - direct.g).norm() <= 1e-14);
    CHECK(bundles[i].C_norm2 == doctest::Approx(direct.C_norm2));
  }
}

TEST_CASE("degenerate fundamental tensors are rejected with MetricError") {
  const MetricSpec spec = inline_spec("line", 2, "y1 + 2*y2");
  CHECK_THROWS_AS((void)build_bundle(spec, vec2(0.0, 0.0), vec2(1.0, 0.3)),
                  MetricError);
}

TEST_CASE("non-convex norms fail the positive-definiteness gate") {
  // F = |y|_4 on a 2-chart has an indefinite angular Hessian along the
  // diagonal directions scaled by the quartic structure; the gate must
  // reject the concave region rather than return a bundle.
  const MetricSpec spec = inline_spec("l4", 2, "(y1^4 + y2^4)^(1/4)");
  // Near the axis the L4 fundamental tensor degenerates.
  CHECK_THROWS_AS(
      (void)build_bundle(spec, vec2(0.0, 0.0), vec2(1.0, 1e-5)),
      MetricError);
}
