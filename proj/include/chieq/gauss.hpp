// Butcher tableau of the s-stage Gauss collocation method.
#ifndef CHIEQ_GAUSS_HPP
#define CHIEQ_GAUSS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace chieq {

template <typename Scalar>
struct GaussTableau {
  int s{0};
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> c;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> A;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> b;

  int order() const { return 2 * s; }
};

namespace detail {

// (P_n(x), P_n'(x)) for the Legendre polynomial on [-1, 1].
inline std::pair<long double, long double> legendre_with_derivative(int n, long double x) {
  long double p0 = 1.0L, p1 = x;
  if (n == 0) return {1.0L, 0.0L};
  for (int k = 2; k <= n; ++k) {
    const long double pk = ((2.0L * k - 1.0L) * x * p1 - (k - 1.0L) * p0) / k;
    p0 = p1;
    p1 = pk;
  }
  const long double dp = n * (x * p1 - p0) / (x * x - 1.0L);
  return {p1, dp};
}

}  // namespace detail

/// Nodes are the zeros of d^s/dx^s [x^s (x-1)^s] on (0, 1); A and b integrate
/// the Lagrange basis on those nodes: A_ij = int_0^{c_i} l_j, b_j = int_0^1 l_j.
/// Computed in long double, then rounded to Scalar.
template <typename Scalar = double>
GaussTableau<Scalar> gauss_tableau(int s) {
  if (s < 1) throw std::invalid_argument("gauss_tableau: stage count must be >= 1, got " + std::to_string(s));
  using LD = long double;
  const LD pi = 3.141592653589793238462643383279502884L;

  Eigen::Matrix<LD, Eigen::Dynamic, 1> c(s), b(s);
  for (int i = 0; i < s; ++i) {
    // Roots come out in descending x, so c = (1 - x) / 2 ascends.
    LD x = std::cos(pi * (i + 0.75L) / (s + 0.5L));
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = detail::legendre_with_derivative(s, x);
      const LD dx = p / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-19L) {
        converged = true;
        break;
      }
    }
    const auto [p, dp] = detail::legendre_with_derivative(s, x);
    if (!converged && std::fabs(p) > 1e-14L)
      throw std::runtime_error("gauss_tableau: Legendre root " + std::to_string(i) + " did not converge for s = " +
                               std::to_string(s));
    c[i] = (1.0L - x) / 2.0L;
    b[i] = 1.0L / ((1.0L - x * x) * dp * dp);
  }

  auto lagrange = [&](int j, LD t) {
    LD v = 1.0L;
    for (int m = 0; m < s; ++m)
      if (m != j) v *= (t - c[m]) / (c[j] - c[m]);
    return v;
  };

  // The integrand has degree s - 1, so s-point Gauss quadrature on [0, c_i] is exact.
  Eigen::Matrix<LD, Eigen::Dynamic, Eigen::Dynamic> A(s, s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) {
      LD acc = 0.0L;
      for (int k = 0; k < s; ++k) acc += b[k] * lagrange(j, c[i] * c[k]);
      A(i, j) = c[i] * acc;
    }

  GaussTableau<Scalar> tab;
  tab.s = s;
  tab.c = c.template cast<Scalar>();
  tab.A = A.template cast<Scalar>();
  tab.b = b.template cast<Scalar>();
  return tab;
}

using GaussTableaud = GaussTableau<double>;

}  // namespace chieq

#endif  // CHIEQ_GAUSS_HPP
