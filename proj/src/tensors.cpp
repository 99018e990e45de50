#include "finsler/tensors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "finsler/sampling.hpp"

namespace finsler {
namespace {

std::span<const double> as_span(const Vec& v) {
  return {v.data(), std::size_t(v.size())};
}

int worker_count() {
  const char* env = std::getenv("FINSLER_WORKERS");
  if (!env) return 1;
  const long v = std::strtol(env, nullptr, 10);
  if (v < 1) return 1;
  return int(std::min<long>(v, 64));
}

}  // namespace

DerivTable DerivTable::from_jet(const MetricSpec& spec, const Vec& x,
                                const Vec& y) {
  DerivTable t;
  t.dim_ = spec.dim;
  t.source_ = Source::Jet;
  t.x_ = x;
  t.y_ = y;
  t.layout_ = JetLayout::get(spec.dim);
  const Jet f = eval_jet(*spec.expr, as_span(x), as_span(y), spec.params);
  if (!(f.value() > 0.0))
    throw EvalError("F must be positive at the support element (got " +
                        std::to_string(f.value()) + ")",
                    print_expr(*spec.expr));
  const Jet f2 = f * f;
  const JetLayout& lay = *t.layout_;
  t.values_.resize(lay.size());
  for (int k = 0; k < lay.size(); ++k)
    t.values_[k] = f2.coeffs()[k] * lay.factorial(k);

  t.has_f_jet_ = true;
  t.f_value_ = f.value();
  t.f_grad_.resize(spec.dim);
  t.f_hess_.resize(spec.dim, spec.dim);
  for (int i = 0; i < spec.dim; ++i) {
    t.f_grad_[i] = f.derivative(-1, {i});
    for (int j = 0; j < spec.dim; ++j)
      t.f_hess_(i, j) = f.derivative(-1, {i, j});
  }
  return t;
}

DerivTable DerivTable::from_fd(const MetricSpec& spec, const Vec& x,
                               const Vec& y, const FDSettings& settings) {
  DerivTable t;
  t.dim_ = spec.dim;
  t.source_ = Source::FiniteDifference;
  t.x_ = x;
  t.y_ = y;
  t.layout_ = JetLayout::get(spec.dim);
  const JetLayout& lay = *t.layout_;
  t.values_.resize(lay.size());
  for (int k = 0; k < lay.size(); ++k) {
    const JetTerm& term = lay.term(k);
    std::vector<int> ydirs;
    for (int d = 0; d < t.dim_; ++d)
      for (int r = 0; r < term.alpha[std::size_t(d)]; ++r) ydirs.push_back(d);
    t.values_[k] = fd_oracle(*spec.expr, as_span(x), as_span(y), term.xdir,
                             ydirs, spec.params, settings);
  }
  const double f2 = t.values_[lay.value_index()];
  if (!(f2 > 0.0))
    throw EvalError("F must be positive at the support element", "");
  return t;
}

double DerivTable::w(int xdir, std::span<const int> ydirs) const {
  const int idx = layout_->index_of(xdir, ydirs);
  if (idx < 0)
    throw std::out_of_range("requested derivative outside the truncation set");
  return values_[idx];
}

double DerivTable::w(int xdir, std::initializer_list<int> ydirs) const {
  return w(xdir, std::span<const int>(ydirs.begin(), ydirs.size()));
}

void metric_block(const DerivTable& table, TensorBundle& bundle) {
  const int n = table.dim();
  bundle.at.F = std::sqrt(table.w(-1, {}));

  bundle.g.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) bundle.g(i, j) = 0.5 * table.w(-1, {i, j});

  Eigen::SelfAdjointEigenSolver<Mat> eig(bundle.g);
  bundle.min_eig = eig.eigenvalues().minCoeff();
  const double trace_scale = bundle.g.trace() / double(n);
  if (!(bundle.min_eig > kPdRelEig * std::abs(trace_scale)))
    throw MetricError("metric tensor is not positive-definite", bundle.min_eig);

  bundle.g_inv = bundle.g.inverse();

  bundle.l_lo.resize(n);
  for (int i = 0; i < n; ++i)
    bundle.l_lo[i] = table.w(-1, {i}) / (2.0 * bundle.at.F);

  bundle.h = bundle.g - bundle.l_lo * bundle.l_lo.transpose();

  bundle.has_f_jet = table.has_f_jet();
  if (table.has_f_jet()) {
    bundle.dF = table.f_grad();
    bundle.ddF = table.f_hess();
  }
}

void cartan_block(const DerivTable& table, TensorBundle& bundle) {
  const int n = table.dim();
  bundle.C_lo = Tensor3(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int k = j; k < n; ++k) {
        const double v = 0.25 * table.w(-1, {i, j, k});
        bundle.C_lo(i, j, k) = v;
        bundle.C_lo(i, k, j) = v;
        bundle.C_lo(j, i, k) = v;
        bundle.C_lo(j, k, i) = v;
        bundle.C_lo(k, i, j) = v;
        bundle.C_lo(k, j, i) = v;
      }

  bundle.C_mixed = Tensor3(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int r = 0; r < n; ++r)
          acc += bundle.g_inv(i, r) * bundle.C_lo(r, j, k);
        bundle.C_mixed(i, j, k) = acc;
      }

  bundle.C_mean.resize(n);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        acc += bundle.C_lo(i, j, k) * bundle.g_inv(j, k);
    bundle.C_mean[i] = acc;
  }

  bundle.C_norm2 = bundle.C_mean.dot(bundle.g_inv * bundle.C_mean);
}

void spray_connections(const DerivTable& table, TensorBundle& bundle) {
  const int n = table.dim();
  const Vec& y = bundle.at.y;
  const Mat& Ginv = bundle.g_inv;

  // A_l = y^k d_k dy_l F^2 - d_l F^2 and its first two y-derivatives.
  Vec A(n);
  Mat dA(n, n);
  Tensor3 ddA(n);
  for (int l = 0; l < n; ++l) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k) acc += y[k] * table.w(k, {l});
    A[l] = acc - table.w(l, {});
    for (int j = 0; j < n; ++j) {
      double accj = 0.0;
      for (int k = 0; k < n; ++k) accj += y[k] * table.w(k, {l, j});
      dA(l, j) = table.w(j, {l}) - table.w(l, {j}) + accj;
      for (int hh = j; hh < n; ++hh) {
        double acch = 0.0;
        for (int k = 0; k < n; ++k) acch += y[k] * table.w(k, {l, j, hh});
        const double v = table.w(j, {l, hh}) - table.w(l, {j, hh}) +
                         table.w(hh, {l, j}) + acch;
        ddA(l, j, hh) = v;
        ddA(l, hh, j) = v;
      }
    }
  }

  // dy_j g and dy_h dy_j g from the Cartan tensor block of the table.
  std::vector<Mat> dg(static_cast<std::size_t>(n));
  std::vector<Mat> dGinv(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    dg[std::size_t(j)].resize(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        dg[std::size_t(j)](a, b) = 0.5 * table.w(-1, {a, b, j});
    dGinv[std::size_t(j)] = -Ginv * dg[std::size_t(j)] * Ginv;
  }

  bundle.G_spray = 0.25 * (Ginv * A);

  bundle.N.resize(n, n);
  for (int j = 0; j < n; ++j)
    bundle.N.col(j) = 0.25 * (dGinv[std::size_t(j)] * A + Ginv * dA.col(j));

  bundle.G_berwald = Tensor3(n);
  Mat ddg(n, n);
  Vec ddA_jh(n);
  for (int j = 0; j < n; ++j)
    for (int hh = j; hh < n; ++hh) {
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          ddg(a, b) = 0.5 * table.w(-1, {a, b, j, hh});
      const Mat ddGinv = -Ginv * ddg * Ginv +
                         Ginv * dg[std::size_t(hh)] * Ginv *
                             dg[std::size_t(j)] * Ginv +
                         Ginv * dg[std::size_t(j)] * Ginv *
                             dg[std::size_t(hh)] * Ginv;
      for (int l = 0; l < n; ++l) ddA_jh[l] = ddA(l, j, hh);
      const Vec col = 0.25 * (ddGinv * A + dGinv[std::size_t(j)] * dA.col(hh) +
                              dGinv[std::size_t(hh)] * dA.col(j) +
                              Ginv * ddA_jh);
      for (int i = 0; i < n; ++i) {
        bundle.G_berwald(i, j, hh) = col[i];
        bundle.G_berwald(i, hh, j) = col[i];
      }
    }

  // delta_h g_ij, then the h-connection coefficients.
  std::vector<Mat> Dg(static_cast<std::size_t>(n));
  for (int hh = 0; hh < n; ++hh) {
    Dg[std::size_t(hh)].resize(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = 0.5 * table.w(hh, {i, j});
        for (int m = 0; m < n; ++m)
          acc -= bundle.N(m, hh) * 0.5 * table.w(-1, {i, j, m});
        Dg[std::size_t(hh)](i, j) = acc;
      }
  }

  bundle.Gamma = Tensor3(n);
  for (int j = 0; j < n; ++j)
    for (int k = j; k < n; ++k)
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int r = 0; r < n; ++r)
          acc += bundle.g_inv(i, r) *
                 (Dg[std::size_t(j)](k, r) + Dg[std::size_t(k)](j, r) -
                  Dg[std::size_t(r)](j, k));
        bundle.Gamma(i, j, k) = 0.5 * acc;
        bundle.Gamma(i, k, j) = 0.5 * acc;
      }
}

void cartan_h_derivative(const DerivTable& table, TensorBundle& bundle) {
  const int n = table.dim();
  bundle.C_hder = Tensor4(n);
  for (int hh = 0; hh < n; ++hh)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        for (int k = j; k < n; ++k) {
          double acc = 0.25 * table.w(hh, {i, j, k});
          for (int r = 0; r < n; ++r)
            acc -= bundle.N(r, hh) * 0.25 * table.w(-1, {i, j, k, r});
          for (int m = 0; m < n; ++m)
            acc -= bundle.C_lo(m, j, k) * bundle.Gamma(m, i, hh) +
                   bundle.C_lo(i, m, k) * bundle.Gamma(m, j, hh) +
                   bundle.C_lo(i, j, m) * bundle.Gamma(m, k, hh);
          bundle.C_hder(i, j, k, hh) = acc;
          bundle.C_hder(i, k, j, hh) = acc;
          bundle.C_hder(j, i, k, hh) = acc;
          bundle.C_hder(j, k, i, hh) = acc;
          bundle.C_hder(k, i, j, hh) = acc;
          bundle.C_hder(k, j, i, hh) = acc;
        }

  bundle.C_hder0 = Tensor3(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int hh = 0; hh < n; ++hh)
          acc += bundle.C_hder(i, j, k, hh) * bundle.at.y[hh];
        bundle.C_hder0(i, j, k) = acc;
      }
}

void hv_curvature(TensorBundle& bundle) {
  const int n = bundle.g.rows();

  bundle.P_lo = bundle.C_hder0;

  bundle.P_mean.resize(n);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        acc += bundle.g_inv(j, k) * bundle.P_lo(i, j, k);
    bundle.P_mean[i] = acc;
  }

  // C^r_ik|0 with the first index raised by the parallel metric.
  Tensor3 Cup0(n);
  for (int r = 0; r < n; ++r)
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int m = 0; m < n; ++m)
          acc += bundle.g_inv(r, m) * bundle.C_hder0(m, i, k);
        Cup0(r, i, k) = acc;
      }

  bundle.P = Tensor4(n);
  for (int hh = 0; hh < n; ++hh)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double acc =
              bundle.C_hder(i, j, k, hh) - bundle.C_hder(hh, j, k, i);
          for (int r = 0; r < n; ++r)
            acc += bundle.C_lo(hh, j, r) * Cup0(r, i, k) -
                   bundle.C_lo(i, j, r) * Cup0(r, hh, k);
          bundle.P(hh, i, j, k) = acc;
        }
}

void t_tensor(const DerivTable& table, TensorBundle& bundle) {
  const int n = table.dim();
  const double F = bundle.at.F;

  // Vertical covariant derivative of the Cartan tensor, then the T-tensor.
  bundle.T = Tensor4(n);
  for (int hh = 0; hh < n; ++hh)
    for (int i = hh; i < n; ++i)
      for (int j = i; j < n; ++j)
        for (int k = j; k < n; ++k) {
          double cv = 0.25 * table.w(-1, {hh, i, j, k});
          for (int m = 0; m < n; ++m)
            cv -= bundle.C_lo(m, i, j) * bundle.C_mixed(m, hh, k) +
                  bundle.C_lo(hh, m, j) * bundle.C_mixed(m, i, k) +
                  bundle.C_lo(hh, i, m) * bundle.C_mixed(m, j, k);
          const double v = F * cv + bundle.C_lo(hh, i, j) * bundle.l_lo[k] +
                           bundle.C_lo(hh, i, k) * bundle.l_lo[j] +
                           bundle.C_lo(hh, j, k) * bundle.l_lo[i] +
                           bundle.C_lo(i, j, k) * bundle.l_lo[hh];
          // Totally symmetric: spread over all permutations of (hh,i,j,k).
          const int idx[4] = {hh, i, j, k};
          int perm[4] = {0, 1, 2, 3};
          do {
            bundle.T(idx[perm[0]], idx[perm[1]], idx[perm[2]], idx[perm[3]]) =
                v;
          } while (std::next_permutation(perm, perm + 4));
        }

  bundle.T2.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int hh = 0; hh < n; ++hh)
        for (int k = 0; k < n; ++k)
          acc += bundle.T(i, j, hh, k) * bundle.g_inv(hh, k);
      bundle.T2(i, j) = acc;
    }
}

TensorBundle build_bundle(const DerivTable& table) {
  TensorBundle bundle;
  bundle.at.x = table.x();
  bundle.at.y = table.y();
  metric_block(table, bundle);
  cartan_block(table, bundle);
  spray_connections(table, bundle);
  cartan_h_derivative(table, bundle);
  hv_curvature(bundle);
  t_tensor(table, bundle);
  return bundle;
}

TensorBundle build_bundle(const MetricSpec& spec, const Vec& x, const Vec& y) {
  return build_bundle(DerivTable::from_jet(spec, x, y));
}

std::vector<SupportElement> sample_support(const MetricSpec& spec, int count,
                                           std::uint64_t seed) {
  std::vector<SupportElement> out;
  out.reserve(std::size_t(count));
  SampleRng rng(seed);
  const long max_attempts = 200L * std::max(count, 1);
  long attempts = 0;
  Vec x, y;
  while (int(out.size()) < count) {
    if (++attempts > max_attempts)
      throw SpecError("empty admissible region: no support element passed "
                      "the positivity and metric gates after " +
                      std::to_string(max_attempts) + " draws");
    draw_candidate(spec.region, rng, x, y);
    try {
      const std::span<const double> xs(x.data(), std::size_t(spec.dim));
      const std::span<const double> ys(y.data(), std::size_t(spec.dim));
      const double F = eval_double(*spec.expr, xs, ys, spec.params);
      if (!(F > 0.0) || !std::isfinite(F)) continue;
      // Gate on the metric tensor eigenvalues.
      TensorBundle probe;
      probe.at.x = x;
      probe.at.y = y;
      const DerivTable table = DerivTable::from_jet(spec, x, y);
      metric_block(table, probe);
      out.push_back({x, y, probe.at.F});
    } catch (const EvalError&) {
      continue;
    } catch (const MetricError&) {
      continue;
    }
  }
  return out;
}

std::vector<TensorBundle> sample_bundles(const MetricSpec& spec, int count,
                                         std::uint64_t seed) {
  const std::vector<SupportElement> elements =
      sample_support(spec, count, seed);
  std::vector<TensorBundle> bundles(elements.size());
  const int workers =
      std::min<int>(worker_count(), std::max<int>(1, int(elements.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < elements.size(); ++i)
      bundles[i] = build_bundle(spec, elements[i].x, elements[i].y);
    return bundles;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (std::size_t i = std::size_t(w); i < elements.size();
             i += std::size_t(workers))
          bundles[i] = build_bundle(spec, elements[i].x, elements[i].y);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return bundles;
}

}  // namespace finsler
