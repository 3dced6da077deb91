// Camassa-Holm equation in IEQ form, semi-discretized with the pseudo-spectral
// operators from spectral.hpp.
//
//   dU/dt = D (Q - U^2 + D1((D1 U) . U))
//   dQ/dt = -U . dU/dt - (D1 U) . (D1 dU/dt)
//
// with Q = -(U^2 + (D1 U)^2) / 2 at t = 0. The product "." is componentwise.
#ifndef CHIEQ_MODEL_HPP
#define CHIEQ_MODEL_HPP

#include <chieq/grid.hpp>
#include <chieq/spectral.hpp>

#include <array>
#include <cmath>

namespace chieq {

/// Surface height U and auxiliary variable Q on a shared grid. Also used for
/// time derivatives (dU, dQ) and stage increments.
template <typename Scalar>
struct State {
  Field<Scalar> u;
  Field<Scalar> q;

  static State zero(Eigen::Index n) { return {Field<Scalar>::Zero(n), Field<Scalar>::Zero(n)}; }

  Eigen::Index size() const { return u.size(); }
  bool all_finite() const { return u.allFinite() && q.allFinite(); }
};

template <typename Scalar>
struct InvariantRecord {
  Scalar t{0};
  Scalar mass{0};
  Scalar momentum{0};
  Scalar hamiltonian{0};
  Scalar quad_energy{0};
};

/// q0 = -(u0^2 + (D1 u0)^2) / 2.
template <typename Scalar>
Field<Scalar> initial_q(const SpectralOps<Scalar>& ops, const Field<Scalar>& u0) {
  const Field<Scalar> ux = apply_d1(ops, u0);
  return Scalar(-0.5) * (u0.array().square() + ux.array().square()).matrix();
}

template <typename Scalar>
State<Scalar> consistent_state(const SpectralOps<Scalar>& ops, const Field<Scalar>& u0) {
  return {u0, initial_q(ops, u0)};
}

/// Right-hand side of the semi-discrete IEQ system with reusable buffers.
/// Six real FFTs per evaluation. Not shareable across threads.
template <typename Scalar>
class IeqRhs {
 public:
  using RealVector = Field<Scalar>;
  using ComplexVector = ComplexField<Scalar>;

  explicit IeqRhs(const SpectralOps<Scalar>& ops) : ops_(&ops) {}

  void operator()(const RealVector& u, const RealVector& q, RealVector& du, RealVector& dq) {
    const SpectralOps<Scalar>& ops = *ops_;
    ops.forward(u, uh_);
    spec_ = uh_.cwiseProduct(ops.half_sym1());
    ops.inverse(spec_, ux_);

    work_ = ux_.cwiseProduct(u);
    ops.forward(work_, ph_);
    work_ = q - u.cwiseProduct(u);
    ops.forward(work_, spec_);
    // du_hat = symD (W_hat + sym1 P_hat)
    spec_ = ops.half_symD().cwiseProduct(spec_ + ops.half_sym1().cwiseProduct(ph_));
    ops.inverse(spec_, du);
    spec_ = spec_.cwiseProduct(ops.half_sym1());
    ops.inverse(spec_, dux_);

    dq = -(u.cwiseProduct(du) + ux_.cwiseProduct(dux_));
  }

  void operator()(const State<Scalar>& s, State<Scalar>& rate) { (*this)(s.u, s.q, rate.u, rate.q); }

  const SpectralOps<Scalar>& ops() const { return *ops_; }

 private:
  const SpectralOps<Scalar>* ops_;
  ComplexVector uh_, ph_, spec_;
  RealVector ux_, dux_, work_;
};

template <typename Scalar>
State<Scalar> rhs_ieq(const SpectralOps<Scalar>& ops, const State<Scalar>& s) {
  detail::check_length(s.u.size(), ops.size(), "rhs_ieq(u)");
  detail::check_length(s.q.size(), ops.size(), "rhs_ieq(q)");
  IeqRhs<Scalar> rhs(ops);
  State<Scalar> rate;
  rhs(s, rate);
  return rate;
}

/// D(-3/2 U^2 - 1/2 (D1 U)^2 + D1((D1 U) . U)): the spectral discretization of
/// the original Hamiltonian form. Diagnostic only.
template <typename Scalar>
Field<Scalar> rhs_hamiltonian(const SpectralOps<Scalar>& ops, const Field<Scalar>& u) {
  const Field<Scalar> ux = apply_d1(ops, u);
  const Field<Scalar> flux = apply_d1(ops, ux.cwiseProduct(u));
  const Field<Scalar> grad =
      (Scalar(-1.5) * u.array().square() - Scalar(0.5) * ux.array().square()).matrix() + flux;
  return apply_D(ops, grad);
}

template <typename Scalar>
Scalar mass(const Grid<Scalar>& grid, const Field<Scalar>& u) {
  return grid.h * u.sum();
}

template <typename Scalar>
Scalar momentum(const SpectralOps<Scalar>& ops, const Field<Scalar>& u) {
  const Field<Scalar> ux = apply_d1(ops, u);
  return ops.grid().h * (u.squaredNorm() + ux.squaredNorm());
}

/// -(h/2) sum_j (U_j^3 + U_j (D1 U)_j^2).
template <typename Scalar>
Scalar hamiltonian(const SpectralOps<Scalar>& ops, const Field<Scalar>& u) {
  const Field<Scalar> ux = apply_d1(ops, u);
  return Scalar(-0.5) * ops.grid().h * (u.array().cube() + u.array() * ux.array().square()).sum();
}

template <typename Scalar>
Scalar quad_energy(const Grid<Scalar>& grid, const State<Scalar>& s) {
  return inner(s.u, s.q, grid);
}

template <typename Scalar>
InvariantRecord<Scalar> measure_invariants(const SpectralOps<Scalar>& ops, Scalar t, const State<Scalar>& s) {
  return {t, mass(ops.grid(), s.u), momentum(ops, s.u), hamiltonian(ops, s.u), quad_energy(ops.grid(), s)};
}

/// Periodic peakon profile c cosh(r) / cosh(L/2), r = x - x0 wrapped into
/// [-L/2, L/2). x0 sits at the trough; the crest (value c) is at x0 + L/2.
template <typename Scalar>
Field<Scalar> peakon_ic(const Grid<Scalar>& grid, Scalar c, Scalar x0) {
  using std::cosh;
  using std::floor;
  using std::abs;
  const Scalar half = grid.L / Scalar(2);
  const Scalar scale = c / cosh(half);
  return grid.sample([&](Scalar x) {
    Scalar r = x - x0;
    r -= grid.L * floor((r + half) / grid.L);
    return scale * cosh(abs(r));
  });
}

template <typename Scalar>
Field<Scalar> three_peakon_ic(const Grid<Scalar>& grid, const std::array<Scalar, 3>& speeds,
                              const std::array<Scalar, 3>& centers) {
  Field<Scalar> u = Field<Scalar>::Zero(grid.N);
  for (std::size_t i = 0; i < 3; ++i) u += peakon_ic(grid, speeds[i], centers[i]);
  return u;
}

template <typename Scalar>
Field<Scalar> sine_ic(const Grid<Scalar>& grid) {
  using std::sin;
  return grid.sample([](Scalar x) { return sin(x); });
}

using Stated = State<double>;
using InvariantRecordd = InvariantRecord<double>;

}  // namespace chieq

#endif  // CHIEQ_MODEL_HPP
