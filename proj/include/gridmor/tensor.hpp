#pragma once

// Sparse three-mode tensor with coordinate storage and the contraction /
// permutation machinery for quadratic operators. The mode-1 matricization H
// acts as H(u (x) v) without ever being materialized.

#include <algorithm>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "gridmor/errors.hpp"

namespace gridmor {

// Lazily applied bijection on 1..m (0-based internally); never a dense matrix.
class IndexPermutation {
public:
  explicit IndexPermutation(std::vector<int> map) : map_(std::move(map)) {
    std::vector<int8_t> hit(map_.size(), 0);
    for (int v : map_) {
      if (v < 0 || v >= static_cast<int>(map_.size()) || hit[v])
        throw validation_error("IndexPermutation: map is not a bijection");
      hit[v] = 1;
    }
  }

  int size() const { return static_cast<int>(map_.size()); }
  int operator()(int idx) const { return map_[idx]; }

  IndexPermutation inverse() const {
    std::vector<int> inv(map_.size());
    for (int i = 0; i < size(); ++i) inv[map_[i]] = i;
    return IndexPermutation(std::move(inv));
  }

  template <typename Derived>
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> apply(
      const Eigen::MatrixBase<Derived>& w) const {
    if (w.size() != size()) throw validation_error("IndexPermutation: length mismatch");
    Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out(w.size());
    for (int i = 0; i < size(); ++i) out(map_[i]) = w(i);
    return out;
  }

private:
  std::vector<int> map_;
};

// Commutation map S with S(nu (x) rho) = rho (x) nu for length-n factors:
// index (a,b) -> (b,a).
inline IndexPermutation commutation_permutation(int n) {
  std::vector<int> map(static_cast<size_t>(n) * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) map[static_cast<size_t>(a) * n + b] = b * n + a;
  return IndexPermutation(std::move(map));
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> commutation_apply(
    int n, const Eigen::MatrixBase<Derived>& w) {
  if (w.size() != static_cast<Eigen::Index>(n) * n)
    throw validation_error("commutation_apply: length is not n^2");
  return commutation_permutation(n).apply(w);
}

class SparseTensor3 {
public:
  struct Entry {
    int i, j, k;
    double v;
  };

  SparseTensor3() = default;
  explicit SparseTensor3(int dim) : dim_(dim) {}

  // Duplicate coordinates are summed; exact zeros pruned.
  SparseTensor3(int dim, std::vector<Entry> entries) : dim_(dim) {
    for (const auto& e : entries)
      if (e.i < 0 || e.i >= dim || e.j < 0 || e.j >= dim || e.k < 0 || e.k >= dim)
        throw validation_error("SparseTensor3: coordinate out of range");
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      return std::tie(a.i, a.j, a.k) < std::tie(b.i, b.j, b.k);
    });
    for (const auto& e : entries) {
      if (!entries_.empty() && entries_.back().i == e.i && entries_.back().j == e.j &&
          entries_.back().k == e.k) {
        entries_.back().v += e.v;
      } else {
        entries_.push_back(e);
      }
    }
    entries_.erase(std::remove_if(entries_.begin(), entries_.end(),
                                  [](const Entry& e) { return e.v == 0.0; }),
                   entries_.end());
  }

  int dim() const { return dim_; }
  const std::vector<Entry>& entries() const { return entries_; }
  size_t nnz() const { return entries_.size(); }

  double frobenius_norm() const {
    double s = 0.0;
    for (const auto& e : entries_) s += e.v * e.v;
    return std::sqrt(s);
  }

  // result_i = sum over entries (i,j,k) of v * u_j * w_k, i.e. H(u (x) w).
  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mode1_apply(
      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& u,
      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& w) const {
    if (u.size() != dim_ || w.size() != dim_)
      throw validation_error("mode1_apply: dimension mismatch");
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out =
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(dim_);
    for (const auto& e : entries_) out(e.i) += e.v * u(e.j) * w(e.k);
    return out;
  }

  // H (U (x) W) for column blocks: output column (a*b_cols + b) = H(u_a (x) w_b).
  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> mode1_apply_pairs(
      const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& U,
      const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& W) const {
    if (U.rows() != dim_ || W.rows() != dim_)
      throw validation_error("mode1_apply_pairs: row count mismatch");
    const Eigen::Index a = U.cols(), b = W.cols();
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(dim_, a * b);
    for (const auto& e : entries_)
      for (Eigen::Index al = 0; al < a; ++al) {
        const Scalar uv = e.v * U(e.j, al);
        if (uv == Scalar(0)) continue;
        for (Eigen::Index be = 0; be < b; ++be) out(e.i, al * b + be) += uv * W(e.k, be);
      }
    return out;
  }

  // Mode-2 unfolding applied to column pairs: output row index is the tensor's
  // second mode; column (a*b_cols + b) has row-j entry
  // sum over entries (i,j,k) of v * Left_{i,a} * Right_{k,b}.
  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> mode2_apply_pairs(
      const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& Left,
      const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& Right) const {
    if (Left.rows() != dim_ || Right.rows() != dim_)
      throw validation_error("mode2_apply_pairs: row count mismatch");
    const Eigen::Index a = Left.cols(), b = Right.cols();
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(dim_, a * b);
    for (const auto& e : entries_)
      for (Eigen::Index al = 0; al < a; ++al) {
        const Scalar lv = e.v * Left(e.i, al);
        if (lv == Scalar(0)) continue;
        for (Eigen::Index be = 0; be < b; ++be) out(e.j, al * b + be) += lv * Right(e.k, be);
      }
    return out;
  }

  // (T_{i,j,k} + T_{i,k,j}) / 2; idempotent.
  SparseTensor3 symmetrize() const {
    std::vector<Entry> sym;
    sym.reserve(2 * entries_.size());
    for (const auto& e : entries_) {
      sym.push_back({e.i, e.j, e.k, 0.5 * e.v});
      sym.push_back({e.i, e.k, e.j, 0.5 * e.v});
    }
    return SparseTensor3(dim_, std::move(sym));
  }

  bool is_symmetric(double tol = 0.0) const {
    // entries are sorted; look up the swapped coordinate by binary search
    for (const auto& e : entries_) {
      const double other = coeff(e.i, e.k, e.j);
      if (std::abs(e.v - other) > tol) return false;
    }
    return true;
  }

  double coeff(int i, int j, int k) const {
    Entry key{i, j, k, 0.0};
    auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                               [](const Entry& a, const Entry& b) {
                                 return std::tie(a.i, a.j, a.k) < std::tie(b.i, b.j, b.k);
                               });
    if (it != entries_.end() && it->i == i && it->j == j && it->k == k) return it->v;
    return 0.0;
  }

  // Dense mode-1 matricization, only sensible for small dims (oracles, dumps).
  Eigen::MatrixXd dense_mode1() const {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim_, static_cast<Eigen::Index>(dim_) * dim_);
    for (const auto& e : entries_) H(e.i, static_cast<Eigen::Index>(e.j) * dim_ + e.k) += e.v;
    return H;
  }

private:
  int dim_ = 0;
  std::vector<Entry> entries_;
};

}  // namespace gridmor
