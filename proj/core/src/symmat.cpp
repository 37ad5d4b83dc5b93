#include "seglab/symmat.hpp"

#include <algorithm>
#include <cmath>

#include "seglab/errors.hpp"

namespace seglab {

SymMatrix SymMatrix::identity(int n) {
  SymMatrix a{n, {}};
  for (int i = 0; i < n; ++i) a.set(i, i, 1.0);
  return a;
}

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
  SymMatrix r = a;
  for (int i = 0; i < a.n * a.n; ++i) r.m[static_cast<std::size_t>(i)] += b.m[static_cast<std::size_t>(i)];
  return r;
}

SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
  SymMatrix r = a;
  for (int i = 0; i < a.n * a.n; ++i) r.m[static_cast<std::size_t>(i)] -= b.m[static_cast<std::size_t>(i)];
  return r;
}

SymMatrix operator*(double s, const SymMatrix& a) {
  SymMatrix r = a;
  for (int i = 0; i < a.n * a.n; ++i) r.m[static_cast<std::size_t>(i)] *= s;
  return r;
}

Vec matvec(const SymMatrix& a, const Vec& v) {
  Vec r = Vec::zero(a.n);
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) r[i] += a(i, j) * v[j];
  return r;
}

double quad_form(const SymMatrix& a, const Vec& v) { return dot(matvec(a, v), v); }

SymMatrix sandwich(const SymMatrix& s, const SymMatrix& a) {
  // s a s is symmetric for symmetric s, a; fill the upper triangle only
  SymMatrix r = SymMatrix::zero(s.n);
  for (int i = 0; i < s.n; ++i)
    for (int j = i; j < s.n; ++j) {
      double v = 0.0;
      for (int p = 0; p < s.n; ++p)
        for (int q = 0; q < s.n; ++q) v += s(i, p) * a(p, q) * s(q, j);
      r.set(i, j, v);
    }
  return r;
}

Vec matvec(const Mat& a, const Vec& v) {
  Vec r = Vec::zero(a.n);
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) r[i] += a(i, j) * v[j];
  return r;
}

namespace {

double off_diagonal_norm(const SymMatrix& a) {
  double s = 0.0;
  for (int i = 0; i < a.n; ++i)
    for (int j = i + 1; j < a.n; ++j) s += a(i, j) * a(i, j);
  return std::sqrt(2.0 * s);
}

}  // namespace

EigenSystem jacobi_eigensystem(const SymMatrix& input) {
  const int n = input.n;
  SymMatrix a = input;
  Mat v{n, {}};
  for (int i = 0; i < n; ++i) v(i, i) = 1.0;

  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));
  const double tol = 1e-15 * std::max(scale, 1e-300);

  for (int sweep = 0; sweep < 64 && off_diagonal_norm(a) > tol; ++sweep) {
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= tol * 1e-2) continue;
        const double app = a(p, p), aqq = a(q, q);
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        // rotate rows/columns p,q of a
        SymMatrix b = a;
        b.set(p, p, app - t * apq);
        b.set(q, q, aqq + t * apq);
        b.set(p, q, 0.0);
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p), akq = a(k, q);
          b.set(k, p, c * akp - s * akq);
          b.set(k, q, s * akp + c * akq);
        }
        a = b;

        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  EigenSystem es;
  es.n = n;
  std::array<int, 3> order{0, 1, 2};
  std::array<double, 3> vals{};
  for (int i = 0; i < n; ++i) vals[static_cast<std::size_t>(i)] = a(i, i);
  std::sort(order.begin(), order.begin() + n,
            [&](int i, int j) { return vals[static_cast<std::size_t>(i)] < vals[static_cast<std::size_t>(j)]; });
  es.vectors = Mat{n, {}};
  for (int k = 0; k < n; ++k) {
    es.values[static_cast<std::size_t>(k)] = vals[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
    for (int i = 0; i < n; ++i) es.vectors(i, k) = v(i, order[static_cast<std::size_t>(k)]);
  }
  return es;
}

double spectral_norm(const SymMatrix& a) {
  const EigenSystem es = jacobi_eigensystem(a);
  double m = 0.0;
  for (int i = 0; i < a.n; ++i) m = std::max(m, std::abs(es.values[static_cast<std::size_t>(i)]));
  return m;
}

double min_eigenvalue(const SymMatrix& a) { return jacobi_eigensystem(a).values[0]; }

namespace {

SymMatrix rebuild(const EigenSystem& es, const std::array<double, 3>& lam) {
  SymMatrix r{es.n, {}};
  for (int i = 0; i < es.n; ++i) {
    for (int j = i; j < es.n; ++j) {
      double s = 0.0;
      for (int k = 0; k < es.n; ++k)
        s += es.vectors(i, k) * lam[static_cast<std::size_t>(k)] * es.vectors(j, k);
      r.set(i, j, s);
    }
  }
  return r;
}

}  // namespace

SymMatrix matrix_sqrt(const SymMatrix& a) {
  const EigenSystem es = jacobi_eigensystem(a);
  if (es.values[0] <= 0.0)
    throw SpectralError("matrix_sqrt: matrix is not positive definite", es.values[0]);
  std::array<double, 3> lam{};
  for (int k = 0; k < a.n; ++k) lam[static_cast<std::size_t>(k)] = std::sqrt(es.values[static_cast<std::size_t>(k)]);
  return rebuild(es, lam);
}

SymMatrix matrix_inverse(const SymMatrix& a) {
  const EigenSystem es = jacobi_eigensystem(a);
  double mag = 0.0;
  for (int k = 0; k < a.n; ++k) mag = std::max(mag, std::abs(es.values[static_cast<std::size_t>(k)]));
  for (int k = 0; k < a.n; ++k)
    if (std::abs(es.values[static_cast<std::size_t>(k)]) <= 1e-300 * std::max(mag, 1.0))
      throw SpectralError("matrix_inverse: singular matrix", es.values[static_cast<std::size_t>(k)]);
  std::array<double, 3> lam{};
  for (int k = 0; k < a.n; ++k) lam[static_cast<std::size_t>(k)] = 1.0 / es.values[static_cast<std::size_t>(k)];
  return rebuild(es, lam);
}

}  // namespace seglab
