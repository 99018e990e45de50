#pragma once

#include <Eigen/Dense>
#include <cassert>
#include <cmath>
#include <vector>

namespace finsler {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Dense rank-3 tensor over a single small dimension n, indexed (i, j, k).
template <typename Scalar>
class Tensor3T {
 public:
  Tensor3T() = default;
  explicit Tensor3T(int n) : n_(n), data_(std::size_t(n) * n * n, Scalar(0)) {}

  int dim() const { return n_; }

  Scalar& operator()(int i, int j, int k) {
    return data_[std::size_t((i * n_ + j) * n_ + k)];
  }
  Scalar operator()(int i, int j, int k) const {
    return data_[std::size_t((i * n_ + j) * n_ + k)];
  }

  const std::vector<Scalar>& data() const { return data_; }
  std::vector<Scalar>& data() { return data_; }

  void setZero() { std::fill(data_.begin(), data_.end(), Scalar(0)); }

  Scalar frobenius() const {
    Scalar s(0);
    for (const Scalar& v : data_) s += v * v;
    using std::sqrt;
    return sqrt(s);
  }

  Scalar max_abs() const {
    Scalar m(0);
    using std::abs;
    for (const Scalar& v : data_) m = std::max<Scalar>(m, abs(v));
    return m;
  }

 private:
  int n_ = 0;
  std::vector<Scalar> data_;
};

/// Dense rank-4 tensor over a single small dimension n, indexed (i, j, k, l).
template <typename Scalar>
class Tensor4T {
 public:
  Tensor4T() = default;
  explicit Tensor4T(int n)
      : n_(n), data_(std::size_t(n) * n * n * n, Scalar(0)) {}

  int dim() const { return n_; }

  Scalar& operator()(int i, int j, int k, int l) {
    return data_[std::size_t(((i * n_ + j) * n_ + k) * n_ + l)];
  }
  Scalar operator()(int i, int j, int k, int l) const {
    return data_[std::size_t(((i * n_ + j) * n_ + k) * n_ + l)];
  }

  const std::vector<Scalar>& data() const { return data_; }
  std::vector<Scalar>& data() { return data_; }

  void setZero() { std::fill(data_.begin(), data_.end(), Scalar(0)); }

  Scalar frobenius() const {
    Scalar s(0);
    for (const Scalar& v : data_) s += v * v;
    using std::sqrt;
    return sqrt(s);
  }

  Scalar max_abs() const {
    Scalar m(0);
    using std::abs;
    for (const Scalar& v : data_) m = std::max<Scalar>(m, abs(v));
    return m;
  }

 private:
  int n_ = 0;
  std::vector<Scalar> data_;
};

using Tensor3 = Tensor3T<double>;
using Tensor4 = Tensor4T<double>;

/// Residual normalization scale: 1 + Frobenius norm of the reference object.
inline double scale_of(double norm) { return 1.0 + norm; }
inline double scale_of(const Mat& m) { return 1.0 + m.norm(); }
inline double scale_of(const Vec& v) { return 1.0 + v.norm(); }
inline double scale_of(const Tensor3& t) { return 1.0 + t.frobenius(); }
inline double scale_of(const Tensor4& t) { return 1.0 + t.frobenius(); }

}  // namespace finsler
