#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace gaugeflow {

using cplx = std::complex<double>;

// Dense N x N complex matrix with value semantics, row-major.
// N is 1 (U(1)) or 2 (SU(2)); everything is unrolled by the optimizer.
template <int N>
struct CMat {
  std::array<cplx, N * N> a{};

  static CMat zero() { return CMat{}; }
  static CMat identity() {
    CMat m;
    for (int i = 0; i < N; ++i) m(i, i) = 1.0;
    return m;
  }

  cplx& operator()(int i, int j) { return a[i * N + j]; }
  const cplx& operator()(int i, int j) const { return a[i * N + j]; }

  CMat& operator+=(const CMat& o) {
    for (int i = 0; i < N * N; ++i) a[i] += o.a[i];
    return *this;
  }
  CMat& operator-=(const CMat& o) {
    for (int i = 0; i < N * N; ++i) a[i] -= o.a[i];
    return *this;
  }
  CMat& operator*=(cplx s) {
    for (auto& v : a) v *= s;
    return *this;
  }
  CMat& operator*=(double s) {
    for (auto& v : a) v *= s;
    return *this;
  }

  friend CMat operator+(CMat x, const CMat& y) { return x += y; }
  friend CMat operator-(CMat x, const CMat& y) { return x -= y; }
  friend CMat operator*(CMat x, cplx s) { return x *= s; }
  friend CMat operator*(cplx s, CMat x) { return x *= s; }
  friend CMat operator*(CMat x, double s) { return x *= s; }
  friend CMat operator*(double s, CMat x) { return x *= s; }
  friend CMat operator-(const CMat& x) { return x * (-1.0); }

  friend CMat operator*(const CMat& x, const CMat& y) {
    CMat r;
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < N; ++k) {
        const cplx xik = x(i, k);
        for (int j = 0; j < N; ++j) r(i, j) += xik * y(k, j);
      }
    return r;
  }
};

template <int N>
inline CMat<N> dagger(const CMat<N>& m) {
  CMat<N> r;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) r(i, j) = std::conj(m(j, i));
  return r;
}

template <int N>
inline cplx trace(const CMat<N>& m) {
  cplx t = 0.0;
  for (int i = 0; i < N; ++i) t += m(i, i);
  return t;
}

template <int N>
inline CMat<N> commutator(const CMat<N>& x, const CMat<N>& y) {
  return x * y - y * x;
}

template <int N>
inline double frob_norm2(const CMat<N>& m) {
  double s = 0.0;
  for (const auto& v : m.a) s += std::norm(v);
  return s;
}

template <int N>
inline double frob_norm(const CMat<N>& m) {
  return std::sqrt(frob_norm2(m));
}

// || U^dag U - 1 ||_F, used by the unitarity invariants.
template <int N>
inline double unitarity_defect(const CMat<N>& u) {
  return frob_norm(dagger(u) * u - CMat<N>::identity());
}

// || X + X^dag ||_F, zero for anti-Hermitian X.
template <int N>
inline double antihermiticity_defect(const CMat<N>& x) {
  return frob_norm(x + dagger(x));
}

// Complex N-vector (matter field value at one site).
template <int N>
struct CVec {
  std::array<cplx, N> v{};

  static CVec zero() { return CVec{}; }

  cplx& operator[](int i) { return v[i]; }
  const cplx& operator[](int i) const { return v[i]; }

  CVec& operator+=(const CVec& o) {
    for (int i = 0; i < N; ++i) v[i] += o.v[i];
    return *this;
  }
  CVec& operator-=(const CVec& o) {
    for (int i = 0; i < N; ++i) v[i] -= o.v[i];
    return *this;
  }
  CVec& operator*=(cplx s) {
    for (auto& x : v) x *= s;
    return *this;
  }
  CVec& operator*=(double s) {
    for (auto& x : v) x *= s;
    return *this;
  }

  friend CVec operator+(CVec x, const CVec& y) { return x += y; }
  friend CVec operator-(CVec x, const CVec& y) { return x -= y; }
  friend CVec operator*(CVec x, cplx s) { return x *= s; }
  friend CVec operator*(cplx s, CVec x) { return x *= s; }
  friend CVec operator*(CVec x, double s) { return x *= s; }
  friend CVec operator*(double s, CVec x) { return x *= s; }
  friend CVec operator-(const CVec& x) { return x * (-1.0); }

  friend CVec operator*(const CMat<N>& m, const CVec& x) {
    CVec r;
    for (int i = 0; i < N; ++i) {
      cplx s = 0.0;
      for (int j = 0; j < N; ++j) s += m(i, j) * x.v[j];
      r.v[i] = s;
    }
    return r;
  }
};

// Hermitian inner product <x, y>, antilinear in the first slot.
template <int N>
inline cplx hdot(const CVec<N>& x, const CVec<N>& y) {
  cplx s = 0.0;
  for (int i = 0; i < N; ++i) s += std::conj(x.v[i]) * y.v[i];
  return s;
}

template <int N>
inline double norm2(const CVec<N>& x) {
  double s = 0.0;
  for (const auto& v : x.v) s += std::norm(v);
  return s;
}

}  // namespace gaugeflow
