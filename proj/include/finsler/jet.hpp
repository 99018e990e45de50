#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

namespace finsler {

inline constexpr int kMaxYOrder = 4;  // deepest consumer: 4th y-derivatives of F^2
inline constexpr int kMaxXOrder = 1;  // at most one x-derivative per coefficient
inline constexpr int kMaxDim = 8;

/// One coefficient slot of the truncation set: an optional single
/// x-derivative direction plus a y-multi-index, total order <= kMaxYOrder.
struct JetTerm {
  int xdir = -1;  // -1: no x-derivative, otherwise the x-coordinate index
  std::array<std::uint8_t, kMaxDim> alpha{};
  int yorder = 0;  // |alpha|
};

/// Per-dimension description of the truncation set shared by all jets of
/// that dimension: slot enumeration, index lookup, and the convolution
/// pair table that drives truncated products. Cached per dimension.
class JetLayout {
 public:
  static std::shared_ptr<const JetLayout> get(int dim);

  int dim() const { return dim_; }
  int size() const { return int(terms_.size()); }
  const JetTerm& term(int idx) const { return terms_[std::size_t(idx)]; }

  /// Slot of the requested mixed partial, or -1 when the derivative lies
  /// outside the truncation set. ydirs lists y-directions with repetition.
  int index_of(int xdir, std::span<const int> ydirs) const;

  int value_index() const { return 0; }
  int y1_index(int i) const { return y1_[std::size_t(i)]; }
  int x1_index(int i) const { return x1_[std::size_t(i)]; }

  /// alpha! for slot idx (the x part contributes no factorial, |beta| <= 1).
  double factorial(int idx) const { return fact_[std::size_t(idx)]; }

  struct ProductTerm {
    std::int32_t a, b;
  };
  /// Ordered coefficient pairs contributing to an output slot under
  /// truncated multiplication.
  std::span<const ProductTerm> product_terms(int out) const {
    return {prod_terms_.data() + prod_offsets_[std::size_t(out)],
            std::size_t(prod_offsets_[std::size_t(out) + 1] -
                        prod_offsets_[std::size_t(out)])};
  }

 private:
  explicit JetLayout(int dim);

  static std::uint64_t key_of(int xdir,
                              const std::array<std::uint8_t, kMaxDim>& alpha);

  int dim_ = 0;
  std::vector<JetTerm> terms_;
  std::vector<std::pair<std::uint64_t, std::int32_t>> lookup_;  // sorted by key
  std::vector<std::int32_t> y1_, x1_;
  std::vector<double> fact_;
  std::vector<std::int32_t> prod_offsets_;
  std::vector<ProductTerm> prod_terms_;
};

/// Truncated multivariate Taylor expansion of a scalar in (x, y): the value
/// plus every mixed partial with at most one x-derivative and total order
/// <= 4. Coefficients are stored normalized (divided by the multi-index
/// factorial); arithmetic is exact on the truncation set.
class Jet {
 public:
  Jet() = default;

  static Jet constant(std::shared_ptr<const JetLayout> layout, double v);
  /// Seed for coordinate x_i: value v, unit first-order x_i entry.
  static Jet seed_x(std::shared_ptr<const JetLayout> layout, int i, double v);
  /// Seed for coordinate y_i: value v, unit first-order y_i entry.
  static Jet seed_y(std::shared_ptr<const JetLayout> layout, int i, double v);

  bool valid() const { return layout_ != nullptr; }
  double value() const { return c_[0]; }

  /// True mixed partial (factorials applied); throws std::out_of_range for
  /// derivatives outside the truncation set.
  double derivative(int xdir, std::span<const int> ydirs) const;
  double derivative(int xdir, std::initializer_list<int> ydirs) const {
    return derivative(xdir, std::span<const int>(ydirs.begin(), ydirs.size()));
  }

  const Eigen::VectorXd& coeffs() const { return c_; }
  const std::shared_ptr<const JetLayout>& layout() const { return layout_; }

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator+=(double v);
  Jet& operator-=(double v);
  Jet& operator*=(double v);
  Jet operator-() const;

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double b) { return a += b; }
  friend Jet operator+(double a, Jet b) { return b += a; }
  friend Jet operator-(Jet a, double b) { return a -= b; }
  friend Jet operator-(double a, const Jet& b) { return (-b) += a; }
  friend Jet operator*(Jet a, double b) { return a *= b; }
  friend Jet operator*(double a, Jet b) { return b *= a; }
  friend Jet operator/(Jet a, double b) { return a *= (1.0 / b); }

  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b);
  friend Jet operator/(double a, const Jet& b);

  /// Analytic extensions; all throw std::domain_error outside their domain.
  friend Jet sqrt(const Jet& u);
  friend Jet exp(const Jet& u);
  friend Jet log(const Jet& u);
  friend Jet sin(const Jet& u);
  friend Jet cos(const Jet& u);
  /// Constant real exponent; integer exponents (|q| <= 64) go through exact
  /// repeated multiplication, anything else requires a positive base.
  friend Jet pow(const Jet& u, double q);

 private:
  Jet(std::shared_ptr<const JetLayout> layout, Eigen::VectorXd c)
      : layout_(std::move(layout)), c_(std::move(c)) {}

  static void check_same(const Jet& a, const Jet& b);
  /// Composition f(u) from the scalar Taylor coefficients of f at u.value().
  static Jet compose(const Jet& u, const std::array<double, kMaxYOrder + 1>& f);

  std::shared_ptr<const JetLayout> layout_;
  Eigen::VectorXd c_;
};

}  // namespace finsler
