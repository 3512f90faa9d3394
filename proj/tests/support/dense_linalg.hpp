#pragma once

// Dense reference linear algebra for tests. Independent of the solver's
// factorization code on purpose: plain Gauss-Jordan with partial pivoting.

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "duplex/lp.hpp"
#include "duplex/sparse_vector.hpp"

namespace testsupport {

// Column-major dense matrix.
struct Dense {
  int m = 0, n = 0;
  std::vector<double> a;  // a[i + j*m]
  Dense() = default;
  Dense(int rows, int cols) : m(rows), n(cols), a(static_cast<size_t>(rows) * cols, 0.0) {}
  double& at(int i, int j) { return a[i + static_cast<size_t>(j) * m]; }
  double at(int i, int j) const { return a[i + static_cast<size_t>(j) * m]; }
};

inline Dense basis_matrix(const duplex::CompLp& lp, const std::vector<int>& basic) {
  Dense b(lp.num_row, lp.num_row);
  for (int k = 0; k < lp.num_row; ++k) {
    const int j = basic[k];
    for (int t = lp.col_start[j]; t < lp.col_start[j + 1]; ++t)
      b.at(lp.col_index[t], k) = lp.col_value[t];
  }
  return b;
}

inline Dense dense_column(const duplex::CompLp& lp, int j) {
  Dense c(lp.num_row, 1);
  for (int t = lp.col_start[j]; t < lp.col_start[j + 1]; ++t)
    c.at(lp.col_index[t], 0) = lp.col_value[t];
  return c;
}

// Gauss-Jordan inverse with partial pivoting; throws on (near-)singularity.
inline Dense dense_inverse(Dense b) {
  assert(b.m == b.n);
  const int m = b.m;
  Dense inv(m, m);
  for (int i = 0; i < m; ++i) inv.at(i, i) = 1.0;
  for (int k = 0; k < m; ++k) {
    int piv = k;
    for (int i = k + 1; i < m; ++i)
      if (std::abs(b.at(i, k)) > std::abs(b.at(piv, k))) piv = i;
    if (std::abs(b.at(piv, k)) < 1e-12) throw std::runtime_error("dense_inverse: singular");
    if (piv != k)
      for (int j = 0; j < m; ++j) {
        std::swap(b.at(k, j), b.at(piv, j));
        std::swap(inv.at(k, j), inv.at(piv, j));
      }
    const double d = b.at(k, k);
    for (int j = 0; j < m; ++j) {
      b.at(k, j) /= d;
      inv.at(k, j) /= d;
    }
    for (int i = 0; i < m; ++i) {
      if (i == k) continue;
      const double f = b.at(i, k);
      if (f == 0.0) continue;
      for (int j = 0; j < m; ++j) {
        b.at(i, j) -= f * b.at(k, j);
        inv.at(i, j) -= f * inv.at(k, j);
      }
    }
  }
  return inv;
}

// x = inv * v  (matrix-vector).
inline std::vector<double> apply(const Dense& mat, const std::vector<double>& v) {
  std::vector<double> out(mat.m, 0.0);
  for (int j = 0; j < mat.n; ++j)
    for (int i = 0; i < mat.m; ++i) out[i] += mat.at(i, j) * v[j];
  return out;
}

// y = mat' * v.
inline std::vector<double> apply_transpose(const Dense& mat, const std::vector<double>& v) {
  std::vector<double> out(mat.n, 0.0);
  for (int j = 0; j < mat.n; ++j)
    for (int i = 0; i < mat.m; ++i) out[j] += mat.at(i, j) * v[i];
  return out;
}

inline std::vector<double> to_dense(const duplex::SparseVector& v) {
  std::vector<double> out(v.dim(), 0.0);
  for (int i : v.indices()) out[i] = v.value(i);
  return out;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  assert(a.size() == b.size());
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace testsupport
