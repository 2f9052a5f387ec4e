#pragma once

#include "wassdro/types.hpp"

#include <cmath>

namespace wassdro {

/// Length of the scaled lower-triangular vectorization of a k x k
/// symmetric matrix.
constexpr Index svec_size(Index k) { return k * (k + 1) / 2; }

/// Position of entry (i, j), i >= j, in the column-stacked lower triangle.
constexpr Index svec_index(Index i, Index j, Index k) {
  return j * k - j * (j - 1) / 2 + (i - j);
}

inline constexpr double kSqrt2 = 1.4142135623730951;

/// Inner-product preserving vectorization: off-diagonal entries are scaled
/// by sqrt(2) so that svec(A) . svec(B) = trace(A B) for symmetric A, B.
template <typename Derived>
Vector svec(const Eigen::MatrixBase<Derived>& m, double sym_tol = 1e-12) {
  const Index k = m.rows();
  if (m.cols() != k) throw precondition_error("svec: matrix is not square");
  const double scale = std::max(1.0, m.template lpNorm<Eigen::Infinity>());
  Vector out(svec_size(k));
  Index p = 0;
  for (Index j = 0; j < k; ++j) {
    out[p++] = m(j, j);
    for (Index i = j + 1; i < k; ++i) {
      if (std::abs(m(i, j) - m(j, i)) > sym_tol * scale)
        throw precondition_error("svec: matrix is not symmetric");
      out[p++] = kSqrt2 * 0.5 * (m(i, j) + m(j, i));
    }
  }
  return out;
}

/// Inverse of svec.
inline Matrix smat(const Vector& v) {
  const Index n = v.size();
  const Index k = static_cast<Index>(std::round((std::sqrt(8.0 * n + 1.0) - 1.0) / 2.0));
  if (svec_size(k) != n) throw precondition_error("smat: invalid vector length");
  Matrix m(k, k);
  Index p = 0;
  for (Index j = 0; j < k; ++j) {
    m(j, j) = v[p++];
    for (Index i = j + 1; i < k; ++i) {
      m(i, j) = m(j, i) = v[p++] / kSqrt2;
    }
  }
  return m;
}

/// svec of the symmetric part (A + A^T)/2; no symmetry check.
template <typename Derived>
Vector svec_symmetrized(const Eigen::MatrixBase<Derived>& m) {
  const Index k = m.rows();
  Vector out(svec_size(k));
  Index p = 0;
  for (Index j = 0; j < k; ++j) {
    out[p++] = m(j, j);
    for (Index i = j + 1; i < k; ++i)
      out[p++] = kSqrt2 * 0.5 * (m(i, j) + m(j, i));
  }
  return out;
}

}  // namespace wassdro
