#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace seglab {

// small point/vector in R^2 or R^3; unused trailing coordinates stay zero
struct Vec {
  int n = 2;
  std::array<double, 3> x{};

  static Vec zero(int n) { return Vec{n, {0.0, 0.0, 0.0}}; }
  static Vec of(double a, double b) { return Vec{2, {a, b, 0.0}}; }
  static Vec of(double a, double b, double c) { return Vec{3, {a, b, c}}; }

  double operator[](int i) const { return x[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return x[static_cast<std::size_t>(i)]; }
};

inline Vec operator+(const Vec& a, const Vec& b) {
  Vec r = a;
  for (int i = 0; i < a.n; ++i) r[i] += b[i];
  return r;
}
inline Vec operator-(const Vec& a, const Vec& b) {
  Vec r = a;
  for (int i = 0; i < a.n; ++i) r[i] -= b[i];
  return r;
}
inline Vec operator*(double s, const Vec& a) {
  Vec r = a;
  for (int i = 0; i < a.n; ++i) r[i] *= s;
  return r;
}
inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int i = 0; i < a.n; ++i) s += a[i] * b[i];
  return s;
}
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

// symmetric n x n matrix, n in {2,3}; full row-major storage, symmetry kept by set()
struct SymMatrix {
  int n = 2;
  std::array<double, 9> m{};

  static SymMatrix identity(int n);
  static SymMatrix zero(int n) { return SymMatrix{n, {}}; }

  double operator()(int i, int j) const { return m[static_cast<std::size_t>(i * n + j)]; }
  void set(int i, int j, double v) {
    m[static_cast<std::size_t>(i * n + j)] = v;
    m[static_cast<std::size_t>(j * n + i)] = v;
  }
  double trace() const {
    double t = 0.0;
    for (int i = 0; i < n; ++i) t += (*this)(i, i);
    return t;
  }
};

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b);
SymMatrix operator-(const SymMatrix& a, const SymMatrix& b);
SymMatrix operator*(double s, const SymMatrix& a);

Vec matvec(const SymMatrix& a, const Vec& v);
double quad_form(const SymMatrix& a, const Vec& v);  // <A v, v>
SymMatrix sandwich(const SymMatrix& s, const SymMatrix& a);  // s a s

// general small matrix (eigenvector columns, straightening maps)
struct Mat {
  int n = 2;
  std::array<double, 9> m{};
  double operator()(int i, int j) const { return m[static_cast<std::size_t>(i * n + j)]; }
  double& operator()(int i, int j) { return m[static_cast<std::size_t>(i * n + j)]; }
};

Vec matvec(const Mat& a, const Vec& v);

struct EigenSystem {
  int n = 2;
  std::array<double, 3> values{};  // ascending
  Mat vectors;                     // column k pairs with values[k]
};

// cyclic Jacobi sweeps; exact enough for 2x2/3x3 (off-norm < 1e-15 * scale)
EigenSystem jacobi_eigensystem(const SymMatrix& a);

double spectral_norm(const SymMatrix& a);  // max |eigenvalue|
double min_eigenvalue(const SymMatrix& a);

// principal square root; SpectralError when an eigenvalue is <= 0
SymMatrix matrix_sqrt(const SymMatrix& a);
SymMatrix matrix_inverse(const SymMatrix& a);  // via eigensystem; SpectralError when singular

}  // namespace seglab
