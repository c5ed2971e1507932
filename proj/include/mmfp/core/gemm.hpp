#pragma once

#include <Eigen/Core>

namespace mmfp {
namespace detail {

template <class T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapM = Eigen::Map<MatRM<T>>;
template <class T>
using CMapM = Eigen::Map<const MatRM<T>>;

// C(m x n) = A(m x k) * B(k x n) over raw row-major buffers.
template <class T>
inline void gemm(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false) {
  CMapM<T> A(a, m, k);
  CMapM<T> B(b, k, n);
  MapM<T> C(c, m, n);
  if (accumulate)
    C.noalias() += A * B;
  else
    C.noalias() = A * B;
}

// C(m x n) = A^T(k x m)^T... i.e. A stored as (k x m), used transposed.
template <class T>
inline void gemm_at(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false) {
  CMapM<T> A(a, k, m);
  CMapM<T> B(b, k, n);
  MapM<T> C(c, m, n);
  if (accumulate)
    C.noalias() += A.transpose() * B;
  else
    C.noalias() = A.transpose() * B;
}

// C(m x n) = A(m x k) * B(n x k)^T.
template <class T>
inline void gemm_bt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false) {
  CMapM<T> A(a, m, k);
  CMapM<T> B(b, n, k);
  MapM<T> C(c, m, n);
  if (accumulate)
    C.noalias() += A * B.transpose();
  else
    C.noalias() = A * B.transpose();
}

}  // namespace detail
}  // namespace mmfp
