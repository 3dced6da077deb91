#include "oracle.hpp"

#include <doctest.h>

#include <numbers>

using namespace chieq;
using std::numbers::pi;

namespace {

const Gridd sine_grid = make_grid(0.0, 2 * pi, 128);

Stated random_state(const Gridd& g, std::mt19937_64& rng) {
  return {oracle::smooth_field(g, rng), oracle::smooth_field(g, rng)};
}

}  // namespace

TEST_CASE("initial_q") {
  const SpectralOpsd ops(sine_grid);
  CHECK(linf_norm(initial_q(ops, Eigen::VectorXd(Eigen::VectorXd::Zero(128)))) == 0.0);
  CHECK(linf_norm(initial_q(ops, sine_ic(sine_grid)) + Eigen::VectorXd::Constant(128, 0.5)) < 1e-13);
  CHECK(linf_norm(initial_q(ops, Eigen::VectorXd(Eigen::VectorXd::Constant(128, 3.0))) + Eigen::VectorXd::Constant(128, 4.5)) < 1e-13);
}

TEST_CASE("rhs_ieq simple states") {
  const SpectralOpsd ops(sine_grid);
  const Stated zero = rhs_ieq(ops, Stated::zero(128));
  CHECK(linf_norm(zero.u) == 0.0);
  CHECK(linf_norm(zero.q) == 0.0);

  const double c = 1.7;
  const Stated flat{Eigen::VectorXd::Constant(128, c), Eigen::VectorXd::Constant(128, -c * c / 2)};
  const Stated rate = rhs_ieq(ops, flat);
  CHECK(linf_norm(rate.u) < 1e-14);
  CHECK(linf_norm(rate.q) < 1e-14);
}

TEST_CASE("rhs_ieq matches dense evaluation at N = 8") {
  std::mt19937_64 rng(8);
  for (double L : {2 * pi, 1.0, 5.5}) {
    const Gridd g = make_grid(0.0, L, 8);
    const SpectralOpsd ops(g);
    const oracle::MatL D1 = oracle::d1(L, 8), D = oracle::big_d(L, 8);
    for (int t = 0; t < 10; ++t) {
      const Stated s{oracle::noise(8, rng), oracle::noise(8, rng)};
      const oracle::VecL U = s.u.cast<long double>(), Q = s.q.cast<long double>();
      const oracle::VecL Ux = D1 * U;
      const oracle::VecL du = D * (Q - U.cwiseProduct(U) + D1 * Ux.cwiseProduct(U));
      const oracle::VecL dq = -(U.cwiseProduct(du) + Ux.cwiseProduct(D1 * du));
      const Stated rate = rhs_ieq(ops, s);
      const double su = std::max(1.0, static_cast<double>(du.cwiseAbs().maxCoeff()));
      const double sq = std::max(1.0, static_cast<double>(dq.cwiseAbs().maxCoeff()));
      CHECK(linf_norm(rate.u - du.cast<double>()) <= 1e-12 * su);
      CHECK(linf_norm(rate.q - dq.cast<double>()) <= 1e-12 * sq);
    }
  }
}

TEST_CASE("IeqRhs buffered call matches rhs_ieq") {
  std::mt19937_64 rng(3);
  const SpectralOpsd ops(sine_grid);
  IeqRhs<double> f(ops);
  const Stated s = random_state(sine_grid, rng);
  Stated rate = Stated::zero(128);
  f(s, rate);
  const Stated ref = rhs_ieq(ops, s);
  CHECK(linf_norm(rate.u - ref.u) == 0.0);
  CHECK(linf_norm(rate.q - ref.q) == 0.0);
  CHECK_THROWS_AS(rhs_ieq(ops, Stated::zero(64)), std::invalid_argument);
}

TEST_CASE("rhs_hamiltonian") {
  const SpectralOpsd ops(sine_grid);
  CHECK(linf_norm(rhs_hamiltonian(ops, Eigen::VectorXd(Eigen::VectorXd::Zero(128)))) == 0.0);
  CHECK(linf_norm(rhs_hamiltonian(ops, Eigen::VectorXd(Eigen::VectorXd::Constant(128, -2.5)))) < 1e-13);
}

TEST_CASE("IEQ and Hamiltonian right-hand sides agree on consistent states") {
  std::mt19937_64 rng(100);
  for (int t = 0; t < 100; ++t) {
    const Gridd g = make_grid(0.0, t % 2 ? 2 * pi : 1.0, t % 3 ? 64 : 128);
    const SpectralOpsd ops(g);
    const Eigen::VectorXd u = oracle::smooth_field(g, rng, 5);
    const Eigen::VectorXd du = rhs_ieq(ops, consistent_state(ops, u)).u;
    const Eigen::VectorXd dh = rhs_hamiltonian(ops, u);
    CHECK(linf_norm(du - dh) <= 1e-12 * std::max(1.0, linf_norm(dh)));
  }
}

TEST_CASE("energy derivative identity") {
  // d/dt <U, Q> = <Q, dU> + <U, dQ> vanishes for any state.
  std::mt19937_64 rng(42);
  for (int t = 0; t < 100; ++t) {
    const Gridd g = make_grid(0.0, t % 2 ? 2 * pi : 30.0, 64);
    const SpectralOpsd ops(g);
    const Stated s{oracle::noise(64, rng), oracle::noise(64, rng)};
    const Stated rate = rhs_ieq(ops, s);
    const double dE = inner(s.q, rate.u, g) + inner(s.u, rate.q, g);
    const double scale = g.h * (s.q.norm() * rate.u.norm() + s.u.norm() * rate.q.norm());
    CHECK(std::abs(dE) <= 1e-12 * scale);
  }
}

TEST_CASE("invariants") {
  const SpectralOpsd ops(sine_grid);
  const InvariantRecordd zero = measure_invariants(ops, 0.0, Stated::zero(128));
  CHECK(zero.mass == 0.0);
  CHECK(zero.momentum == 0.0);
  CHECK(zero.hamiltonian == 0.0);
  CHECK(zero.quad_energy == 0.0);

  const Eigen::VectorXd s = sine_ic(sine_grid);
  CHECK(std::abs(mass(sine_grid, s)) < 1e-14);
  CHECK(momentum(ops, s) == doctest::Approx(2 * pi).epsilon(1e-14));
}

TEST_CASE("quadratic energy equals Hamiltonian on consistent states") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const Gridd g = make_grid(0.0, 2 * pi, 64);
    const SpectralOpsd ops(g);
    const Eigen::VectorXd u = oracle::smooth_field(g, rng) + Eigen::VectorXd::Constant(64, 0.5);
    const double H = hamiltonian(ops, u);
    const double E = quad_energy(g, consistent_state(ops, u));
    CHECK(std::abs(E - H) <= 1e-11 * std::abs(H));
  }
}

TEST_CASE("peakon profile") {
  const double L = 1.0, c = 1.0;
  const Gridd g = make_grid(0.0, L, 128);
  const Eigen::VectorXd u = peakon_ic(g, c, 0.0);
  // trough at x0, crest c at x0 + L/2
  CHECK(u[0] == doctest::Approx(c / std::cosh(L / 2)).epsilon(1e-15));
  CHECK(u[64] == doctest::Approx(c).epsilon(1e-15));
  CHECK(u.maxCoeff() == doctest::Approx(c).epsilon(1e-15));
  for (Eigen::Index j = 1; j < 64; ++j) CHECK(u[j] == doctest::Approx(u[128 - j]).epsilon(1e-14));

  // shifting x0 by one cell rolls the samples
  const Eigen::VectorXd shifted = peakon_ic(g, c, g.h);
  for (Eigen::Index j = 0; j < 128; ++j) CHECK(shifted[(j + 1) % 128] == doctest::Approx(u[j]).epsilon(1e-13));

  // continuity across the wrap point x0 +- L/2
  const Gridd fine = make_grid(-0.5, L, 1024);
  const Eigen::VectorXd w = peakon_ic(fine, 2.0, 0.0);
  CHECK(w[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(std::abs(w[1] - w[1023]) < 1e-12);
}

TEST_CASE("three-peakon profile") {
  const Gridd g = make_grid(-15.0, 30.0, 256);
  const std::array<double, 3> speeds{2.0, 1.0, 0.8}, centers{-5.0, -3.0, -1.0};
  const Eigen::VectorXd u = three_peakon_ic(g, speeds, centers);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(256);
  for (int i = 0; i < 3; ++i) sum += peakon_ic(g, speeds[i], centers[i]);
  CHECK(linf_norm(u - sum) == 0.0);
  CHECK(linf_norm(three_peakon_ic(g, {0.0, 0.0, 0.0}, centers)) == 0.0);
}
