#include "finsler/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace finsler {
namespace {

// Enumerate all y-multi-indices of total order <= max_order, lexicographic
// within each order block so slot 0 is the value.
void enumerate_alphas(int dim, int max_order,
                      std::vector<std::array<std::uint8_t, kMaxDim>>& out) {
  std::array<std::uint8_t, kMaxDim> alpha{};
  for (int order = 0; order <= max_order; ++order) {
    // Generate all alpha with |alpha| == order via recursion over positions.
    std::vector<int> stack;
    auto rec = [&](auto&& self, int pos, int remaining) -> void {
      if (pos == dim - 1) {
        alpha[std::size_t(pos)] = std::uint8_t(remaining);
        out.push_back(alpha);
        return;
      }
      for (int k = remaining; k >= 0; --k) {
        alpha[std::size_t(pos)] = std::uint8_t(k);
        self(self, pos + 1, remaining - k);
      }
    };
    rec(rec, 0, order);
    alpha.fill(0);
  }
}

double alpha_factorial(const std::array<std::uint8_t, kMaxDim>& alpha) {
  static const double fact[5] = {1.0, 1.0, 2.0, 6.0, 24.0};
  double f = 1.0;
  for (std::uint8_t a : alpha) f *= fact[a];
  return f;
}

}  // namespace

std::uint64_t JetLayout::key_of(
    int xdir, const std::array<std::uint8_t, kMaxDim>& alpha) {
  std::uint64_t key = std::uint64_t(xdir + 1) << 40;
  for (int i = 0; i < kMaxDim; ++i)
    key |= std::uint64_t(alpha[std::size_t(i)] & 0x7u) << (3 * i);
  return key;
}

JetLayout::JetLayout(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim)
    throw std::invalid_argument("jet dimension out of range [1, " +
                                std::to_string(kMaxDim) + "]");

  std::vector<std::array<std::uint8_t, kMaxDim>> alphas4, alphas3;
  enumerate_alphas(dim, kMaxYOrder, alphas4);
  enumerate_alphas(dim, kMaxYOrder - kMaxXOrder, alphas3);

  for (const auto& a : alphas4) {
    JetTerm t;
    t.xdir = -1;
    t.alpha = a;
    for (int i = 0; i < dim; ++i) t.yorder += a[std::size_t(i)];
    terms_.push_back(t);
  }
  for (int xd = 0; xd < dim; ++xd) {
    for (const auto& a : alphas3) {
      JetTerm t;
      t.xdir = xd;
      t.alpha = a;
      for (int i = 0; i < dim; ++i) t.yorder += a[std::size_t(i)];
      terms_.push_back(t);
    }
  }

  lookup_.reserve(terms_.size());
  fact_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    lookup_.emplace_back(key_of(terms_[i].xdir, terms_[i].alpha),
                         std::int32_t(i));
    fact_.push_back(alpha_factorial(terms_[i].alpha));
  }
  std::sort(lookup_.begin(), lookup_.end());

  y1_.assign(std::size_t(dim), -1);
  x1_.assign(std::size_t(dim), -1);
  std::array<std::uint8_t, kMaxDim> alpha{};
  for (int i = 0; i < dim; ++i) {
    alpha.fill(0);
    alpha[std::size_t(i)] = 1;
    const int yd[1] = {i};
    y1_[std::size_t(i)] = index_of(-1, yd);
    x1_[std::size_t(i)] = index_of(i, {});
  }

  // Convolution pair table: ordered (a, b) with slot(a) + slot(b) in the set.
  const int count = int(terms_.size());
  std::vector<std::vector<ProductTerm>> buckets(static_cast<std::size_t>(count));
  for (int ia = 0; ia < count; ++ia) {
    const JetTerm& ta = terms_[std::size_t(ia)];
    for (int ib = 0; ib < count; ++ib) {
      const JetTerm& tb = terms_[std::size_t(ib)];
      if (ta.xdir >= 0 && tb.xdir >= 0) continue;
      const int xdir = ta.xdir >= 0 ? ta.xdir : tb.xdir;
      const int yorder = ta.yorder + tb.yorder;
      if (yorder > kMaxYOrder || (xdir >= 0 && yorder > kMaxYOrder - 1))
        continue;
      std::array<std::uint8_t, kMaxDim> alpha_sum{};
      for (int i = 0; i < dim; ++i)
        alpha_sum[std::size_t(i)] = std::uint8_t(ta.alpha[std::size_t(i)] +
                                                 tb.alpha[std::size_t(i)]);
      const std::uint64_t key = key_of(xdir, alpha_sum);
      auto it = std::lower_bound(
          lookup_.begin(), lookup_.end(), key,
          [](const auto& p, std::uint64_t k) { return p.first < k; });
      buckets[std::size_t(it->second)].push_back(
          {std::int32_t(ia), std::int32_t(ib)});
    }
  }
  prod_offsets_.assign(std::size_t(count) + 1, 0);
  std::size_t total = 0;
  for (int k = 0; k < count; ++k) {
    prod_offsets_[std::size_t(k)] = std::int32_t(total);
    total += buckets[std::size_t(k)].size();
  }
  prod_offsets_[std::size_t(count)] = std::int32_t(total);
  prod_terms_.reserve(total);
  for (auto& b : buckets)
    prod_terms_.insert(prod_terms_.end(), b.begin(), b.end());
}

std::shared_ptr<const JetLayout> JetLayout::get(int dim) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const JetLayout>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& entry = cache[dim];
  if (!entry) entry.reset(new JetLayout(dim));
  return entry;
}

int JetLayout::index_of(int xdir, std::span<const int> ydirs) const {
  if (xdir >= dim_) return -1;
  std::array<std::uint8_t, kMaxDim> alpha{};
  int yorder = 0;
  for (int d : ydirs) {
    if (d < 0 || d >= dim_) return -1;
    ++alpha[std::size_t(d)];
    ++yorder;
  }
  if (yorder > kMaxYOrder || (xdir >= 0 && yorder > kMaxYOrder - 1)) return -1;
  const std::uint64_t key = key_of(xdir, alpha);
  auto it = std::lower_bound(
      lookup_.begin(), lookup_.end(), key,
      [](const auto& p, std::uint64_t k) { return p.first < k; });
  if (it == lookup_.end() || it->first != key) return -1;
  return it->second;
}

Jet Jet::constant(std::shared_ptr<const JetLayout> layout, double v) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(layout->size());
  c[0] = v;
  return Jet(std::move(layout), std::move(c));
}

Jet Jet::seed_x(std::shared_ptr<const JetLayout> layout, int i, double v) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(layout->size());
  c[0] = v;
  c[layout->x1_index(i)] = 1.0;
  return Jet(std::move(layout), std::move(c));
}

Jet Jet::seed_y(std::shared_ptr<const JetLayout> layout, int i, double v) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(layout->size());
  c[0] = v;
  c[layout->y1_index(i)] = 1.0;
  return Jet(std::move(layout), std::move(c));
}

double Jet::derivative(int xdir, std::span<const int> ydirs) const {
  const int idx = layout_->index_of(xdir, ydirs);
  if (idx < 0)
    throw std::out_of_range("requested derivative outside the truncation set");
  return c_[idx] * layout_->factorial(idx);
}

void Jet::check_same(const Jet& a, const Jet& b) {
  if (a.layout_.get() != b.layout_.get())
    throw std::invalid_argument("jet dimension mismatch");
}

Jet& Jet::operator+=(const Jet& o) {
  check_same(*this, o);
  c_ += o.c_;
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  check_same(*this, o);
  c_ -= o.c_;
  return *this;
}

Jet& Jet::operator+=(double v) {
  c_[0] += v;
  return *this;
}

Jet& Jet::operator-=(double v) {
  c_[0] -= v;
  return *this;
}

Jet& Jet::operator*=(double v) {
  c_ *= v;
  return *this;
}

Jet Jet::operator-() const { return Jet(layout_, -c_); }

Jet operator*(const Jet& a, const Jet& b) {
  Jet::check_same(a, b);
  const JetLayout& lay = *a.layout_;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(lay.size());
  const double* ca = a.c_.data();
  const double* cb = b.c_.data();
  for (int k = 0; k < lay.size(); ++k) {
    double acc = 0.0;
    for (const auto& p : lay.product_terms(k)) acc += ca[p.a] * cb[p.b];
    out[k] = acc;
  }
  return Jet(a.layout_, std::move(out));
}

Jet Jet::compose(const Jet& u, const std::array<double, kMaxYOrder + 1>& f) {
  // Horner in the nilpotent part w = u - u0; w^5 vanishes on the set.
  Jet w = u;
  w.c_[0] = 0.0;
  Jet r = Jet::constant(u.layout_, f[kMaxYOrder]);
  for (int k = kMaxYOrder - 1; k >= 0; --k) {
    r = r * w;
    r.c_[0] += f[std::size_t(k)];
  }
  return r;
}

Jet operator/(const Jet& a, const Jet& b) {
  Jet::check_same(a, b);
  return a * (1.0 / b);
}

Jet operator/(double a, const Jet& b) {
  const double b0 = b.value();
  if (b0 == 0.0) throw std::domain_error("division by zero");
  const double inv = 1.0 / b0;
  std::array<double, kMaxYOrder + 1> f{};
  double c = inv;
  for (int k = 0; k <= kMaxYOrder; ++k) {
    f[std::size_t(k)] = c;
    c *= -inv;
  }
  Jet r = Jet::compose(b, f);
  return r *= a;
}

Jet sqrt(const Jet& u) {
  const double u0 = u.value();
  if (u0 <= 0.0) throw std::domain_error("sqrt of a non-positive value");
  const double s = std::sqrt(u0);
  const double inv = 1.0 / u0;
  std::array<double, kMaxYOrder + 1> f{};
  // Taylor coefficients of sqrt at u0: c_k = c_{k-1} * (1/2 - (k-1)) / k / u0.
  f[0] = s;
  double c = s;
  for (int k = 1; k <= kMaxYOrder; ++k) {
    c *= (0.5 - double(k - 1)) / double(k) * inv;
    f[std::size_t(k)] = c;
  }
  return Jet::compose(u, f);
}

Jet exp(const Jet& u) {
  const double e = std::exp(u.value());
  std::array<double, kMaxYOrder + 1> f{};
  double c = e;
  static const double invk[5] = {1.0, 1.0, 0.5, 1.0 / 3.0, 0.25};
  for (int k = 0; k <= kMaxYOrder; ++k) {
    if (k > 0) c *= invk[k];
    f[std::size_t(k)] = c;
  }
  return Jet::compose(u, f);
}

Jet log(const Jet& u) {
  const double u0 = u.value();
  if (u0 <= 0.0) throw std::domain_error("log of a non-positive value");
  const double inv = 1.0 / u0;
  std::array<double, kMaxYOrder + 1> f{};
  f[0] = std::log(u0);
  double p = inv;
  for (int k = 1; k <= kMaxYOrder; ++k) {
    f[std::size_t(k)] = (k % 2 == 1 ? p : -p) / double(k);
    p *= inv;
  }
  return Jet::compose(u, f);
}

Jet sin(const Jet& u) {
  const double s = std::sin(u.value());
  const double c = std::cos(u.value());
  // d^k sin cycles through (sin, cos, -sin, -cos); divide by k!.
  const std::array<double, kMaxYOrder + 1> f = {s, c, -s / 2.0, -c / 6.0,
                                                s / 24.0};
  return Jet::compose(u, f);
}

Jet cos(const Jet& u) {
  const double s = std::sin(u.value());
  const double c = std::cos(u.value());
  const std::array<double, kMaxYOrder + 1> f = {c, -s, -c / 2.0, s / 6.0,
                                                c / 24.0};
  return Jet::compose(u, f);
}

Jet pow(const Jet& u, double q) {
  if (q == std::round(q) && std::abs(q) <= 64.0) {
    const long m = long(q);
    if (m == 0) return Jet::constant(u.layout(), 1.0);
    if (u.value() == 0.0 && m < 0)
      throw std::domain_error("pow: zero base with negative exponent");
    Jet base = u;
    Jet acc = Jet::constant(u.layout(), 1.0);
    unsigned long e = static_cast<unsigned long>(m < 0 ? -m : m);
    while (e > 0) {
      if (e & 1u) acc = acc * base;
      e >>= 1u;
      if (e > 0) base = base * base;
    }
    return m < 0 ? 1.0 / acc : acc;
  }
  const double u0 = u.value();
  if (u0 <= 0.0)
    throw std::domain_error("pow: non-integer exponent needs a positive base");
  const double inv = 1.0 / u0;
  std::array<double, kMaxYOrder + 1> f{};
  double c = std::pow(u0, q);
  f[0] = c;
  for (int k = 1; k <= kMaxYOrder; ++k) {
    c *= (q - double(k - 1)) / double(k) * inv;
    f[std::size_t(k)] = c;
  }
  return Jet::compose(u, f);
}

}  // namespace finsler
