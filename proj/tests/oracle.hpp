// Dense differentiation matrices built from the trigonometric interpolation
// basis g_j, summed mode by mode in long double. Independent of the FFT path.
#ifndef CHIEQ_TESTS_ORACLE_HPP
#define CHIEQ_TESTS_ORACLE_HPP

#include <chieq/chieq.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace oracle {

using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// g_j(x) = (1/N) sum_{l=-N/2}^{N/2} e^{i l mu (x - x_j)} / c_l, c_{+-N/2} = 2.
// Row k, column j holds the `order`-th derivative of g_j at x_k.
inline MatL basis_derivative(long double L, Eigen::Index N, int order) {
  const long double pi = 3.141592653589793238462643383279502884L;
  const long double mu = 2 * pi / L;
  const long double h = L / N;
  const long half = static_cast<long>(N / 2);
  MatL D = MatL::Zero(N, N);
  for (Eigen::Index k = 0; k < N; ++k)
    for (Eigen::Index j = 0; j < N; ++j) {
      const long double d = (k - j) * h;
      long double acc = 0;
      for (long l = -half; l <= half; ++l) {
        const long double w = (l == half || l == -half) ? 0.5L : 1.0L;
        const long double kl = mu * l;
        // real part of (i kl)^order e^{i kl d}
        const long double re = order == 1 ? -kl * std::sin(kl * d) : -kl * kl * std::cos(kl * d);
        acc += w * re;
      }
      D(k, j) = acc / N;
    }
  return D;
}

inline MatL d1(long double L, Eigen::Index N) { return basis_derivative(L, N, 1); }
inline MatL d2(long double L, Eigen::Index N) { return basis_derivative(L, N, 2); }

inline MatL big_d(long double L, Eigen::Index N) {
  const MatL A = MatL::Identity(N, N) - d2(L, N);
  return A.partialPivLu().solve(d1(L, N));
}

inline Eigen::VectorXd apply(const MatL& M, const Eigen::VectorXd& u) {
  return (M * u.cast<long double>()).cast<double>();
}

// Smooth periodic field: a few low modes with random amplitudes and phases.
inline Eigen::VectorXd smooth_field(const chieq::Gridd& grid, std::mt19937_64& rng, int modes = 4, double amp = 1.0) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Eigen::VectorXd u = Eigen::VectorXd::Constant(grid.N, amp * U(rng));
  const double mu = grid.mu();
  for (int k = 1; k <= modes; ++k) {
    const double a = amp * U(rng) / k, b = amp * U(rng) / k;
    for (Eigen::Index j = 0; j < grid.N; ++j) {
      const double x = grid.node(j) - grid.a;
      u[j] += a * std::cos(k * mu * x) + b * std::sin(k * mu * x);
    }
  }
  return u;
}

inline Eigen::VectorXd noise(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> Z;
  Eigen::VectorXd u(n);
  for (auto& v : u) v = Z(rng);
  return u;
}

}  // namespace oracle

#endif
